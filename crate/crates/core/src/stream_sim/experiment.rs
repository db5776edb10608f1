use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tasks::{builtin_tasks, EmptyCount, TaskError, TaskSpec};
use super::{synthesize, NoiseProfile, ProfileError};
use crate::confirmer::{ConfigError, ConfirmerConfig};
use crate::interpreter::{FeedOutcome, ProgramEffect};
use crate::keymap::{GestureId, KeymapRegistry};
use crate::robot::{RobotConfig, RobotError, RobotState};
use crate::session::{Event, Session};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Diagnosis {
    /// An intended gesture was never accepted.
    MissedAccept,
    ParseError,
    /// Something other than the intended sequence was accepted.
    WrongAccept,
    /// Everything parsed but the outcome differs.
    WrongEffect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub success: bool,
    pub diagnosis: Option<Diagnosis>,
    pub accepted: Vec<GestureId>,
    pub effects: Vec<ProgramEffect>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    #[serde(rename = "fn")]
    pub empty_fn: EmptyCount,
    #[serde(rename = "param")]
    pub empty_param: EmptyCount,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTask {
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// Gesture IDs or aliases of the task keymap.
    pub script: String,
}

/// What to run: tasks by id, cells, trials per cell and the noise profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Overrides the profile's seed when present.
    pub seed: Option<u64>,
    pub trials: u64,
    /// Built-in or custom task ids; every built-in task when empty.
    pub tasks: Vec<String>,
    pub cells: Vec<CellSpec>,
    pub profile: NoiseProfile,
    pub confirmer: ConfirmerConfig,
    pub robot: RobotConfig,
    pub custom: Vec<CustomTask>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            seed: None,
            trials: 100,
            tasks: Vec::new(),
            cells: vec![
                CellSpec {
                    empty_fn: EmptyCount::Max,
                    empty_param: EmptyCount::Max,
                },
                CellSpec {
                    empty_fn: EmptyCount::Count(10),
                    empty_param: EmptyCount::Count(10),
                },
                CellSpec {
                    empty_fn: EmptyCount::Count(0),
                    empty_param: EmptyCount::Count(0),
                },
            ],
            profile: NoiseProfile::default(),
            confirmer: ConfirmerConfig::default(),
            robot: RobotConfig::default(),
            custom: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("noise profile: {0}")]
    Profile(#[from] ProfileError),
    #[error("confirmer: {0}")]
    Confirmer(#[from] ConfigError),
    #[error("robot: {0}")]
    Robot(#[from] RobotError),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("duplicate task {0}")]
    DuplicateTask(String),
    #[error("cannot read experiment spec: {0}")]
    Spec(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Spec(e.to_string()))
    }

    pub fn profile(&self) -> NoiseProfile {
        let mut p = self.profile.clone();
        if let Some(s) = self.seed {
            p.seed = s;
        }
        p
    }

    /// The tasks to run, in spec order.
    pub fn resolve_tasks(&self) -> Result<Vec<TaskSpec>, ExperimentError> {
        let mut all = builtin_tasks();
        for c in &self.custom {
            if all.iter().any(|t| t.id == c.id) {
                return Err(ExperimentError::DuplicateTask(c.id.clone()));
            }
            let reg = KeymapRegistry::new(crate::keymap::builtin::tasks());
            all.push(TaskSpec::new(&c.id, &c.description, reg, &c.script)?);
        }
        if self.tasks.is_empty() {
            all.truncate(8);
            return Ok(all);
        }
        self.tasks
            .iter()
            .map(|id| {
                all.iter()
                    .find(|t| &t.id == id)
                    .cloned()
                    .ok_or_else(|| ExperimentError::UnknownTask(id.clone()))
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExperimentRow {
    pub task: String,
    pub empty_fn: usize,
    pub empty_param: usize,
    pub trials: u64,
    pub successes: u64,
    pub failures: u64,
    pub wrong_accept: u64,
    pub missed_accept: u64,
    pub parse_error: u64,
    pub wrong_effect: u64,
}

impl ExperimentRow {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

fn states_match(a: &RobotState, b: &RobotState) -> bool {
    const EPS: f64 = 1e-9;
    a.pose.approx_eq(&b.pose, EPS)
        && (a.clock - b.clock).abs() <= EPS
        && a.snapshots.len() == b.snapshots.len()
        && a.snapshots.iter().zip(&b.snapshots).all(|(x, y)| x.pose.approx_eq(&y.pose, EPS))
}

fn is_subsequence(needle: &[GestureId], hay: &[GestureId]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// One noisy run of `task` against `registry`.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    task: &TaskSpec,
    registry: &KeymapRegistry,
    expected: &(Vec<ProgramEffect>, RobotState),
    profile: &NoiseProfile,
    confirmer: &ConfirmerConfig,
    robot: &RobotConfig,
    trial: u64,
) -> Result<TrialResult, ExperimentError> {
    let mut rng = profile.rng(&task.id, trial);
    let frames = synthesize(&task.script, profile, &mut rng);
    let mut session = Session::new(registry.clone(), *confirmer, crate::robot::Robot::new(robot.clone())?);
    let mut accepted = Vec::new();
    let mut effects = Vec::new();
    let mut parse_error = false;
    for f in frames {
        let events = session.push_frame(f).expect("synthesized timestamps increase");
        for e in events {
            match e {
                Event::Accepted(a) => accepted.push(a.gesture),
                Event::Effect(x) => effects.push(x),
                Event::Parse {
                    outcome: FeedOutcome::ParseError(_),
                    ..
                } => parse_error = true,
                _ => {}
            }
        }
    }
    parse_error |= session.finish().is_some();
    let success = effects == expected.0 && states_match(session.robot().state(), &expected.1);
    let diagnosis = if success {
        None
    } else if !is_subsequence(&task.script, &accepted) {
        Some(Diagnosis::MissedAccept)
    } else if parse_error {
        Some(Diagnosis::ParseError)
    } else if accepted != task.script {
        Some(Diagnosis::WrongAccept)
    } else {
        Some(Diagnosis::WrongEffect)
    };
    Ok(TrialResult {
        success,
        diagnosis,
        accepted,
        effects,
    })
}

/// Runs every task under every cell. Trial `i` of a task sees the same
/// frames in every cell.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let profile = spec.profile();
    profile.validate()?;
    spec.confirmer.validate(1000.0 / profile.frame_period_ms as f64)?;
    crate::robot::Robot::new(spec.robot.clone())?;
    let tasks = spec.resolve_tasks()?;
    let mut rows = Vec::new();
    for task in &tasks {
        let expected = task.expected(&spec.robot)?;
        for cell in &spec.cells {
            let keymaps = task.cell_keymaps(cell.empty_fn, cell.empty_param)?;
            let mut row = ExperimentRow {
                task: task.id.clone(),
                empty_fn: keymaps.empty_fn,
                empty_param: keymaps.empty_param,
                trials: spec.trials,
                ..Default::default()
            };
            for i in 0..spec.trials {
                let r = run_trial(
                    task,
                    &keymaps.registry,
                    &expected,
                    &profile,
                    &spec.confirmer,
                    &spec.robot,
                    i,
                )?;
                match r.diagnosis {
                    None => row.successes += 1,
                    Some(d) => {
                        row.failures += 1;
                        match d {
                            Diagnosis::WrongAccept => row.wrong_accept += 1,
                            Diagnosis::MissedAccept => row.missed_accept += 1,
                            Diagnosis::ParseError => row.parse_error += 1,
                            Diagnosis::WrongEffect => row.wrong_effect += 1,
                        }
                    }
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(rows: &[ExperimentRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "task",
            "empty_fn",
            "empty_param",
            "trials",
            "successes",
            "failures",
            "wrong_accept",
            "missed_accept",
            "parse_error",
            "wrong_effect",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
