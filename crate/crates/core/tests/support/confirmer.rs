//! Frame streams for confirmer properties, and a brute-force recount to check
//! the sliding window against.

use afeis_core::confirmer::{Confirmer, ConfirmerConfig, GestureFrame, RearmPolicy};
use afeis_core::keymap::{GestureId, GESTURE_COUNT};
use proptest::prelude::*;

fn gid(i: u32) -> GestureId {
    GestureId::new(i).unwrap()
}

// holds draw from the low ids, filler cycles through the high ones
const HOLD_IDS: u32 = 25;
const FILLER_FIRST: u32 = 30;

/// Held gestures separated by at least a window of varied filler.
#[derive(Clone, Debug)]
pub struct CleanStream {
    pub config: ConfirmerConfig,
    pub holds: Vec<(u32, usize)>,
    pub frames: Vec<GestureFrame>,
}

pub fn clean_stream() -> impl Strategy<Value = CleanStream> {
    (1u32..=10, 20u64..=100)
        .prop_flat_map(|(t, period)| {
            let w = (t as usize + 1)..=(2 * t as usize + 1);
            (Just(t), Just(period), w)
        })
        .prop_flat_map(|(t, period, w)| {
            let best = (t + 1) as f64 / w as f64;
            let hold = (0..HOLD_IDS, (t as usize + 1)..=(3 * w));
            let gap = w..=(3 * w);
            (
                Just(t),
                Just(period),
                Just(w),
                0.05..=best,
                prop::collection::vec((hold, gap.clone()), 1..6),
                gap.clone(),
            )
        })
        .prop_map(|(t, period, w, min_fraction, holds, lead)| {
            let config = ConfirmerConfig {
                window_ms: w as u64 * period,
                threshold: t,
                min_fraction,
                rearm: RearmPolicy::DropBelowThreshold,
            };
            let filler_ids = GESTURE_COUNT as u32 - FILLER_FIRST;
            let mut ids = Vec::new();
            let mut cursor = 0;
            let mut filler = |ids: &mut Vec<u32>, n: usize| {
                for _ in 0..n {
                    ids.push(FILLER_FIRST + cursor % filler_ids);
                    cursor += 1;
                }
            };
            filler(&mut ids, lead);
            for &((g, len), gap) in &holds {
                ids.extend(std::iter::repeat_n(g, len));
                filler(&mut ids, gap);
            }
            let frames = ids
                .iter()
                .enumerate()
                .map(|(i, &g)| GestureFrame::new(i as u64 * period, gid(g)))
                .collect();
            CleanStream {
                config,
                holds: holds.into_iter().map(|(h, _)| h).collect(),
                frames,
            }
        })
}

/// One acceptance per hold, in order, and nothing for the filler.
pub fn check_exactly_once(s: &CleanStream) -> Result<(), String> {
    let got: Vec<u32> = Confirmer::new(s.config)
        .run(s.frames.iter().copied())
        .map_err(|e| e.to_string())?
        .iter()
        .map(|a| a.gesture.index() as u32)
        .collect();
    let want: Vec<u32> = s.holds.iter().map(|&(g, _)| g).collect();
    if got == want {
        Ok(())
    } else {
        Err(format!("accepted {got:?}, holds {want:?}"))
    }
}

/// Any stream at all, with timestamps that may repeat.
#[derive(Clone, Debug)]
pub struct RandomStream {
    pub config: ConfirmerConfig,
    pub frames: Vec<GestureFrame>,
}

pub fn random_stream(len: std::ops::Range<usize>) -> impl Strategy<Value = RandomStream> {
    (
        1u32..=10,
        50u64..=1500,
        0.05f64..=1.0,
        1u32..=(GESTURE_COUNT as u32),
        prop::collection::vec((0u64..=120, any::<u32>()), len),
    )
        .prop_map(|(t, window_ms, min_fraction, alphabet, raw)| {
            let mut ts = 0;
            let frames = raw
                .into_iter()
                .map(|(dt, g)| {
                    ts += dt;
                    GestureFrame::new(ts, gid(g % alphabet))
                })
                .collect();
            RandomStream {
                config: ConfirmerConfig {
                    window_ms,
                    threshold: t,
                    min_fraction,
                    rearm: RearmPolicy::DropBelowThreshold,
                },
                frames,
            }
        })
}

/// Counts of the frames inside the window ending at `frames[upto]`.
pub fn recount(frames: &[GestureFrame], upto: usize, window_ms: u64) -> [u32; GESTURE_COUNT] {
    let now = frames[upto].timestamp;
    let mut counts = [0; GESTURE_COUNT];
    for f in &frames[..=upto] {
        if f.timestamp + window_ms > now {
            counts[f.gesture.index()] += 1;
        }
    }
    counts
}

/// After every push the window counts equal a recount from scratch. Returns
/// the number of pushes checked.
pub fn check_recount(s: &RandomStream) -> Result<usize, String> {
    let mut c = Confirmer::new(s.config);
    for i in 0..s.frames.len() {
        c.push(s.frames[i]).map_err(|e| e.to_string())?;
        let want = recount(&s.frames, i, s.config.window_ms);
        if c.window().counts() != &want {
            return Err(format!("counts differ after push {i}"));
        }
        let held: u32 = want.iter().sum();
        if c.window().len() != held as usize {
            return Err(format!("window holds {} frames, recount {held}", c.window().len()));
        }
    }
    Ok(s.frames.len())
}

/// Whether no window ever holds more than `t` copies of one gesture.
pub fn is_quiet(s: &RandomStream) -> bool {
    (0..s.frames.len()).all(|i| {
        recount(&s.frames, i, s.config.window_ms)
            .iter()
            .all(|&c| c <= s.config.threshold)
    })
}

/// Quiet streams produce no acceptances, and every acceptance in any
/// stream comes with a count above the threshold.
pub fn check_quiet(s: &RandomStream) -> Result<(), String> {
    let accepted = Confirmer::new(s.config)
        .run(s.frames.iter().copied())
        .map_err(|e| e.to_string())?;
    if is_quiet(s) && !accepted.is_empty() {
        return Err(format!("{} acceptances from a quiet stream", accepted.len()));
    }
    match accepted.iter().find(|a| a.count <= s.config.threshold) {
        Some(a) => Err(format!("accepted {:?} at count {}", a.gesture, a.count)),
        None => Ok(()),
    }
}

/// Random streams rewritten so no gesture ever exceeds the threshold in a
/// window: an offending frame becomes the least-seen gesture instead.
pub fn quiet_stream() -> impl Strategy<Value = RandomStream> {
    random_stream(20..200)
        .prop_map(|mut s| {
            for i in 0..s.frames.len() {
                let mut counts = recount(&s.frames, i, s.config.window_ms);
                let g = s.frames[i].gesture.index();
                if counts[g] > s.config.threshold {
                    counts[g] -= 1;
                    let least = (0..GESTURE_COUNT).min_by_key(|&k| counts[k]).unwrap();
                    s.frames[i].gesture = gid(least as u32);
                }
            }
            s
        })
        .prop_filter("window too dense to stay quiet", is_quiet)
}
