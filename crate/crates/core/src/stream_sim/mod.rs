//! Synthetic classifier streams and the empty-definition robustness experiment.

mod experiment;
mod tasks;

pub use experiment::{
    run_experiment, run_trial, write_csv, CellSpec, CustomTask, Diagnosis, ExperimentError, ExperimentRow,
    ExperimentSpec, TrialResult,
};
pub use tasks::{builtin_tasks, CellKeymaps, EmptyCount, TaskError, TaskSpec, FILLER_FNS, FILLER_PARAMS};

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confirmer::GestureFrame;
use crate::keymap::{GestureId, GESTURE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedRange {
    pub weight: f64,
    pub min: u32,
    pub max: u32,
}

/// A distribution over frame counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntDist {
    Const(u32),
    /// Uniform over `[min, max]`.
    Range([u32; 2]),
    /// Pick a range by weight, then uniform within it.
    Mixture(Vec<WeightedRange>),
}

impl IntDist {
    pub fn validate(&self) -> Result<(), ProfileError> {
        match self {
            IntDist::Const(_) => Ok(()),
            IntDist::Range([a, b]) if a <= b => Ok(()),
            IntDist::Range(_) => Err(ProfileError::EmptyRange),
            IntDist::Mixture(parts) => {
                if parts.is_empty() || parts.iter().all(|p| p.weight == 0.0) {
                    return Err(ProfileError::EmptyDistribution);
                }
                for p in parts {
                    if !(p.weight >= 0.0 && p.weight.is_finite()) {
                        return Err(ProfileError::BadWeight(p.weight));
                    }
                    if p.min > p.max {
                        return Err(ProfileError::EmptyRange);
                    }
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: RngExt + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            IntDist::Const(n) => *n,
            IntDist::Range([a, b]) => rng.random_range(*a..=*b),
            IntDist::Mixture(parts) => {
                let w = WeightedIndex::new(parts.iter().map(|p| p.weight)).expect("validated mixture");
                let p = &parts[w.sample(rng)];
                rng.random_range(p.min..=p.max)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionRow {
    pub from: GestureId,
    /// (gesture, weight) pairs.
    pub to: Vec<(GestureId, f64)>,
}

/// How intended gestures turn into classifier frames. The default profile
/// is an invented stand-in for an operator holding each sign for about a
/// second, usually moving quickly between signs and sometimes pausing in an
/// intermediate hand shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseProfile {
    pub frame_period_ms: u64,
    /// Frames per intended gesture.
    pub hold: IntDist,
    /// Frames of one transient hand shape between two different gestures.
    pub transition: IntDist,
    /// Frames between two holds of the same gesture, each an independent draw
    /// from the transient pool.
    pub repeat_gap: IntDist,
    /// Candidates for transient frames; all gestures when absent.
    pub transient_pool: Option<Vec<GestureId>>,
    pub misclassify_rate: f64,
    /// Where a misclassified frame of a gesture lands; uniform over the
    /// other gestures for rows not listed.
    pub confusion: Vec<ConfusionRow>,
    pub seed: u64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        NoiseProfile {
            frame_period_ms: 50,
            hold: IntDist::Range([16, 24]),
            transition: IntDist::Mixture(vec![
                WeightedRange {
                    weight: 0.9,
                    min: 0,
                    max: 6,
                },
                WeightedRange {
                    weight: 0.1,
                    min: 8,
                    max: 20,
                },
            ]),
            repeat_gap: IntDist::Range([14, 20]),
            transient_pool: None,
            misclassify_rate: 0.05,
            confusion: Vec::new(),
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ProfileError {
    #[error("range with min above max")]
    EmptyRange,
    #[error("distribution has no positive weight")]
    EmptyDistribution,
    #[error("bad weight {0}")]
    BadWeight(f64),
    #[error("misclassify_rate {0} outside [0, 1]")]
    BadRate(f64),
    #[error("frame_period_ms must be positive")]
    ZeroPeriod,
    #[error("transient pool is empty")]
    EmptyPool,
    #[error("confusion row for gesture {0} is empty or has bad weights")]
    BadConfusion(GestureId),
}

impl NoiseProfile {
    /// No transients, no misclassification, fixed holds.
    pub fn clean() -> Self {
        NoiseProfile {
            hold: IntDist::Const(20),
            transition: IntDist::Const(0),
            misclassify_rate: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.frame_period_ms == 0 {
            return Err(ProfileError::ZeroPeriod);
        }
        self.hold.validate()?;
        self.transition.validate()?;
        self.repeat_gap.validate()?;
        if !(0.0..=1.0).contains(&self.misclassify_rate) {
            return Err(ProfileError::BadRate(self.misclassify_rate));
        }
        if matches!(&self.transient_pool, Some(p) if p.is_empty()) {
            return Err(ProfileError::EmptyPool);
        }
        for row in &self.confusion {
            if WeightedIndex::new(row.to.iter().map(|(_, w)| *w)).is_err() {
                return Err(ProfileError::BadConfusion(row.from));
            }
        }
        Ok(())
    }

    /// Generator for one trial. Each (seed, task, trial) triple gets its own
    /// stream, so the same trial sees the same noise under every keymap.
    pub fn rng(&self, task: &str, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ stable_hash(task));
        rng.set_stream(trial);
        rng
    }
}

// FNV-1a; std's hasher is not stable across releases
fn stable_hash(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn all_gestures() -> Vec<GestureId> {
    GestureId::all().collect()
}

/// Turns an intended gesture sequence into timestamped frames.
pub fn synthesize<R: RngExt + ?Sized>(intended: &[GestureId], profile: &NoiseProfile, rng: &mut R) -> Vec<GestureFrame> {
    let pool = profile.transient_pool.clone().unwrap_or_else(all_gestures);
    let confusion: BTreeMap<GestureId, (Vec<GestureId>, WeightedIndex<f64>)> = profile
        .confusion
        .iter()
        .map(|row| {
            let targets = row.to.iter().map(|(g, _)| *g).collect();
            let w = WeightedIndex::new(row.to.iter().map(|(_, w)| *w)).expect("validated confusion");
            (row.from, (targets, w))
        })
        .collect();

    let mut seq = Vec::new();
    let mut prev: Option<GestureId> = None;
    for &g in intended {
        match prev {
            Some(p) if p == g => {
                for _ in 0..profile.repeat_gap.sample(rng) {
                    seq.push(pool[rng.random_range(0..pool.len())]);
                }
            }
            Some(_) => {
                let n = profile.transition.sample(rng);
                if n > 0 {
                    let x = pool[rng.random_range(0..pool.len())];
                    seq.extend(std::iter::repeat_n(x, n as usize));
                }
            }
            None => {}
        }
        for _ in 0..profile.hold.sample(rng) {
            let frame = if rng.random_bool(profile.misclassify_rate) {
                match confusion.get(&g) {
                    Some((targets, w)) => targets[w.sample(rng)],
                    None => {
                        // uniform over the other gestures
                        let k = rng.random_range(0..GESTURE_COUNT as u32 - 1);
                        let k = if k >= g.index() as u32 { k + 1 } else { k };
                        GestureId::new(k).unwrap()
                    }
                }
            } else {
                g
            };
            seq.push(frame);
        }
        prev = Some(g);
    }
    crate::confirmer::frames_at(0, profile.frame_period_ms, &seq)
}
