//! Windowed counting confirmation of classifier frames.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keymap::{GestureId, GESTURE_COUNT};

/// One classifier output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GestureFrame {
    pub timestamp: u64,
    pub gesture: GestureId,
}

impl GestureFrame {
    pub fn new(timestamp: u64, gesture: GestureId) -> Self {
        GestureFrame { timestamp, gesture }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RearmPolicy {
    /// Re-arm once the gesture's count falls back to the threshold or below.
    DropBelowThreshold,
    /// Re-arm after this many consecutive frames of other gestures.
    GapFrames(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfirmerConfig {
    pub window_ms: u64,
    pub threshold: u32,
    pub min_fraction: f64,
    pub rearm: RearmPolicy,
}

impl Default for ConfirmerConfig {
    fn default() -> Self {
        ConfirmerConfig {
            window_ms: 1000,
            threshold: 8,
            min_fraction: 0.6,
            rearm: RearmPolicy::DropBelowThreshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("threshold must be at least 1")]
    ZeroThreshold,
    #[error("window_ms must be positive")]
    ZeroWindow,
    #[error("min_fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("gap_frames must be at least 1")]
    ZeroGap,
    #[error("frame rate hint {0} must be positive")]
    BadFrameRate(f64),
    #[error("a {window_ms} ms window holds {frames} frames at {fps} fps; threshold {threshold} needs at least {}", threshold + 1)]
    WindowTooShort {
        window_ms: u64,
        fps: f64,
        frames: u64,
        threshold: u32,
    },
}

impl ConfirmerConfig {
    /// Number of frames a full window holds at `fps`.
    pub fn frames_per_window(&self, fps: f64) -> u64 {
        let period = 1000.0 / fps;
        (self.window_ms as f64 / period).ceil() as u64
    }

    /// Checks the knobs, and that a window can hold enough frames to exceed
    /// the threshold at the declared frame rate.
    pub fn validate(&self, frame_rate_hint: f64) -> Result<(), ConfigError> {
        if self.threshold == 0 {
            return Err(ConfigError::ZeroThreshold);
        }
        if self.window_ms == 0 {
            return Err(ConfigError::ZeroWindow);
        }
        if !(self.min_fraction > 0.0 && self.min_fraction <= 1.0) {
            return Err(ConfigError::BadFraction(self.min_fraction));
        }
        if self.rearm == RearmPolicy::GapFrames(0) {
            return Err(ConfigError::ZeroGap);
        }
        if !(frame_rate_hint.is_finite() && frame_rate_hint > 0.0) {
            return Err(ConfigError::BadFrameRate(frame_rate_hint));
        }
        let frames = self.frames_per_window(frame_rate_hint);
        if frames <= self.threshold as u64 {
            return Err(ConfigError::WindowTooShort {
                window_ms: self.window_ms,
                fps: frame_rate_hint,
                frames,
                threshold: self.threshold,
            });
        }
        Ok(())
    }
}

/// Frames seen in the last `window_ms` and their per-gesture counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    frames: VecDeque<GestureFrame>,
    counts: [u32; GESTURE_COUNT],
}

impl Default for Window {
    fn default() -> Self {
        Window {
            frames: VecDeque::new(),
            counts: [0; GESTURE_COUNT],
        }
    }
}

impl Window {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn count(&self, k: GestureId) -> u32 {
        self.counts[k.index()]
    }

    pub fn counts(&self) -> &[u32; GESTURE_COUNT] {
        &self.counts
    }

    pub fn frames(&self) -> impl Iterator<Item = &GestureFrame> {
        self.frames.iter()
    }

    /// The gesture with the strictly largest count, if there is one.
    pub fn unique_argmax(&self) -> Option<GestureId> {
        let mut best = 0;
        let mut at = None;
        let mut tied = false;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > best {
                best = c;
                at = Some(i);
                tied = false;
            } else if c == best && c > 0 {
                tied = true;
            }
        }
        if tied {
            None
        } else {
            at.map(|i| GestureId::new(i as u32).unwrap())
        }
    }

    fn push(&mut self, frame: GestureFrame, window_ms: u64) {
        self.frames.push_back(frame);
        self.counts[frame.gesture.index()] += 1;
        while let Some(old) = self.frames.front() {
            if old.timestamp + window_ms > frame.timestamp {
                break;
            }
            self.counts[old.gesture.index()] -= 1;
            self.frames.pop_front();
        }
    }
}

/// Scores a gesture against the current window.
pub trait Discriminant: fmt::Debug + Send {
    /// `None` when `k` is not a candidate.
    fn score(&self, window: &Window, k: GestureId) -> Option<f64>;
}

/// `count / |window|` once the count exceeds the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counting {
    pub threshold: u32,
}

impl Discriminant for Counting {
    fn score(&self, window: &Window, k: GestureId) -> Option<f64> {
        let c = window.count(k);
        if window.is_empty() || c <= self.threshold {
            None
        } else {
            Some(c as f64 / window.len() as f64)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedGesture {
    pub gesture: GestureId,
    pub timestamp: u64,
    pub count: u32,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("frame timestamp {found} ms is earlier than the previous frame at {previous} ms")]
pub struct StreamError {
    pub previous: u64,
    pub found: u64,
}

#[derive(Debug)]
pub struct Confirmer<D = Counting> {
    config: ConfirmerConfig,
    discriminant: D,
    window: Window,
    armed: [bool; GESTURE_COUNT],
    // consecutive frames without each gesture
    gap: [u32; GESTURE_COUNT],
    last_timestamp: Option<u64>,
    last_accepted: Option<AcceptedGesture>,
}

impl Confirmer<Counting> {
    pub fn new(config: ConfirmerConfig) -> Self {
        let d = Counting {
            threshold: config.threshold,
        };
        Confirmer::with_discriminant(config, d)
    }
}

impl<D: Discriminant> Confirmer<D> {
    pub fn with_discriminant(config: ConfirmerConfig, discriminant: D) -> Self {
        Confirmer {
            config,
            discriminant,
            window: Window::default(),
            armed: [true; GESTURE_COUNT],
            gap: [0; GESTURE_COUNT],
            last_timestamp: None,
            last_accepted: None,
        }
    }

    pub fn config(&self) -> &ConfirmerConfig {
        &self.config
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn is_armed(&self, k: GestureId) -> bool {
        self.armed[k.index()]
    }

    pub fn last_accepted(&self) -> Option<&AcceptedGesture> {
        self.last_accepted.as_ref()
    }

    pub fn score(&self, k: GestureId) -> Option<f64> {
        self.discriminant.score(&self.window, k)
    }

    pub fn reset(&mut self) {
        self.window = Window::default();
        self.armed = [true; GESTURE_COUNT];
        self.gap = [0; GESTURE_COUNT];
        self.last_timestamp = None;
        self.last_accepted = None;
    }

    pub fn push(&mut self, frame: GestureFrame) -> Result<Option<AcceptedGesture>, StreamError> {
        if let Some(previous) = self.last_timestamp {
            if frame.timestamp < previous {
                return Err(StreamError {
                    previous,
                    found: frame.timestamp,
                });
            }
        }
        self.last_timestamp = Some(frame.timestamp);
        self.window.push(frame, self.config.window_ms);

        let t = self.config.threshold;
        for i in 0..GESTURE_COUNT {
            if i == frame.gesture.index() {
                self.gap[i] = 0;
            } else {
                self.gap[i] = self.gap[i].saturating_add(1);
            }
            if !self.armed[i] {
                self.armed[i] = match self.config.rearm {
                    RearmPolicy::DropBelowThreshold => self.window.counts[i] <= t,
                    RearmPolicy::GapFrames(n) => self.gap[i] >= n,
                };
            }
        }

        let Some(k) = self.window.unique_argmax() else {
            return Ok(None);
        };
        let count = self.window.count(k);
        if !self.armed[k.index()] || count <= t {
            return Ok(None);
        }
        match self.score(k) {
            Some(score) if score >= self.config.min_fraction => {
                self.armed[k.index()] = false;
                let a = AcceptedGesture {
                    gesture: k,
                    timestamp: frame.timestamp,
                    count,
                    score,
                };
                self.last_accepted = Some(a);
                Ok(Some(a))
            }
            _ => Ok(None),
        }
    }

    /// Pushes every frame, collecting acceptances.
    pub fn run<I>(&mut self, frames: I) -> Result<Vec<AcceptedGesture>, StreamError>
    where
        I: IntoIterator<Item = GestureFrame>,
    {
        let mut out = Vec::new();
        for f in frames {
            out.extend(self.push(f)?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FrameParseError {
    pub line: usize,
    pub message: String,
}

/// Reads `timestamp_ms,gesture_id` lines; blank lines and `#` comments are skipped.
pub fn parse_frames(text: &str) -> Result<Vec<GestureFrame>, FrameParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| FrameParseError { line: i + 1, message };
        let (ts, g) = line
            .split_once(',')
            .ok_or_else(|| err(format!("expected `timestamp_ms,gesture_id`, got `{line}`")))?;
        let timestamp = ts
            .trim()
            .parse::<u64>()
            .map_err(|_| err(format!("bad timestamp `{}`", ts.trim())))?;
        let gesture = g.trim().parse::<GestureId>().map_err(|e| err(e.to_string()))?;
        out.push(GestureFrame { timestamp, gesture });
    }
    Ok(out)
}

/// Evenly spaced frames starting at `start`.
pub fn frames_at(start: u64, period_ms: u64, gestures: &[GestureId]) -> Vec<GestureFrame> {
    gestures
        .iter()
        .enumerate()
        .map(|(i, &g)| GestureFrame::new(start + i as u64 * period_ms, g))
        .collect()
}
