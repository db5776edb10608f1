//! Newline-delimited JSON protocol between a live session and a console.
//!
//! Every record is one JSON object with a `type` field. Outbound records also
//! carry `seq`, numbered from 0 per connection with no gaps. The first record
//! on a connection is `hello`, followed by a full state dump.

use std::collections::VecDeque;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::config::SessionConfig;
use crate::confirmer::GestureFrame;
use crate::interpreter::{FeedOutcome, Number, ProgramEffect, Slot};
use crate::keymap::{GestureId, Keymap};
use crate::robot::Snapshot;
use crate::session::{Event, Session};

pub const PROTOCOL: &str = "afeis";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    Frame { ts: u64, gesture: u32 },
    Reset,
    LoadSession { path: PathBuf },
}

impl Inbound {
    pub fn parse(line: &str) -> Result<Inbound, String> {
        serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("inbound records serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub gesture: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    pub func: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
}

impl Tile {
    pub fn is_empty(&self) -> bool {
        self.system.is_none() && self.func.is_none() && self.param.is_none()
    }
}

/// Tiles for every bound gesture of a keymap; unbound gestures are left out.
pub fn tiles(keymap: &Keymap) -> Vec<Tile> {
    GestureId::all()
        .map(|g| Tile {
            gesture: g.into(),
            alias: keymap
                .aliases()
                .iter()
                .find(|(_, &v)| v == g)
                .map(|(k, _)| k.clone()),
            system: keymap.system_symbol(g).map(|s| s.name().to_string()),
            func: keymap.fn_name(g).map(str::to_string),
            param: keymap.param_text(g).map(str::to_string),
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionView {
    pub slot: Slot,
    pub body: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableView {
    pub slot: Slot,
    pub value: Number,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    Hello {
        protocol: String,
        version: u32,
    },
    Accepted {
        gesture: u32,
        timestamp: u64,
        count: u32,
        score: f64,
    },
    Token {
        #[serde(skip_serializing_if = "Option::is_none")]
        gesture: Option<u32>,
        kind: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    ParseEvent {
        before: String,
        state: String,
        outcome: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        diagnostic: Option<String>,
    },
    Effect {
        text: String,
        effect: ProgramEffect,
    },
    RobotState {
        x: f64,
        y: f64,
        depth: f64,
        heading: f64,
        clock: f64,
        snapshots: Vec<Snapshot>,
    },
    RobotError {
        message: String,
    },
    WindowCounts {
        counts: Vec<u32>,
        frames: usize,
        threshold: u32,
    },
    KeymapChanged {
        index: u32,
        tiles: Vec<Tile>,
    },
    Environment {
        functions: Vec<FunctionView>,
        variables: Vec<VariableView>,
    },
    Error {
        message: String,
    },
}

impl Outbound {
    /// High-rate records a slow reader may miss; a later one supersedes them.
    /// Parse events carrying a diagnostic are kept.
    pub fn is_telemetry(&self) -> bool {
        matches!(
            self,
            Outbound::WindowCounts { .. }
                | Outbound::RobotState { .. }
                | Outbound::Token { .. }
                | Outbound::ParseEvent { diagnostic: None, .. }
                | Outbound::Accepted { .. }
        )
    }

    /// The line a session's effect log would hold for this record, if any.
    pub fn log_line(&self) -> Option<String> {
        match self {
            Outbound::Effect { text, .. } => Some(text.clone()),
            Outbound::ParseEvent {
                diagnostic: Some(d),
                ..
            } => Some(format!("ParseError: {d}")),
            Outbound::RobotError { message } => Some(format!("RobotError: {message}")),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    #[serde(flatten)]
    pub message: Outbound,
}

impl Envelope {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("outbound records serialize")
    }

    pub fn parse(line: &str) -> Result<Envelope, String> {
        serde_json::from_str(line).map_err(|e| e.to_string())
    }
}

fn robot_state(session: &Session) -> Outbound {
    let s = session.robot().state();
    Outbound::RobotState {
        x: s.pose.x,
        y: s.pose.y,
        depth: s.pose.depth,
        heading: s.pose.heading,
        clock: s.clock,
        snapshots: s.snapshots.clone(),
    }
}

fn keymap_changed(session: &Session) -> Outbound {
    let reg = session.registry();
    Outbound::KeymapChanged {
        index: reg.active_index(),
        tiles: tiles(reg.active()),
    }
}

fn environment(session: &Session) -> Outbound {
    let env = session.interpreter().env();
    Outbound::Environment {
        functions: env
            .functions
            .iter()
            .map(|(&slot, body)| FunctionView {
                slot,
                body: body.iter().map(|c| c.to_string()).collect(),
            })
            .collect(),
        variables: env
            .variables
            .iter()
            .map(|(&slot, &value)| VariableView { slot, value })
            .collect(),
    }
}

fn window_counts(session: &Session) -> Outbound {
    match session.window_counts() {
        Event::WindowCounts {
            counts,
            frames,
            threshold,
        } => Outbound::WindowCounts {
            counts: counts.to_vec(),
            frames,
            threshold,
        },
        _ => unreachable!("window_counts returns WindowCounts"),
    }
}

/// Everything a fresh console needs to draw the current session.
pub fn state_dump(session: &Session) -> Vec<Outbound> {
    vec![
        keymap_changed(session),
        environment(session),
        robot_state(session),
        window_counts(session),
    ]
}

/// Translates pipeline events. An environment record follows every
/// completed form.
pub fn outbound(events: Vec<Event>, session: &Session) -> Vec<Outbound> {
    let mut out = Vec::with_capacity(events.len() + 1);
    for e in events {
        match e {
            Event::WindowCounts {
                counts,
                frames,
                threshold,
            } => out.push(Outbound::WindowCounts {
                counts: counts.to_vec(),
                frames,
                threshold,
            }),
            Event::Accepted(a) => out.push(Outbound::Accepted {
                gesture: a.gesture.into(),
                timestamp: a.timestamp,
                count: a.count,
                score: a.score,
            }),
            Event::Token { gesture, token } => out.push(Outbound::Token {
                gesture: gesture.map(u32::from),
                kind: token.kind().to_string(),
                text: token.text(),
            }),
            Event::Parse {
                before,
                after,
                outcome,
            } => out.push(Outbound::ParseEvent {
                before,
                state: after,
                outcome: outcome.label().to_string(),
                diagnostic: match &outcome {
                    FeedOutcome::ParseError(e) => Some(e.to_string()),
                    _ => None,
                },
            }),
            Event::Effect(effect) => {
                out.push(Outbound::Effect {
                    text: effect.to_string(),
                    effect,
                });
                out.push(environment(session));
            }
            Event::Robot(s) => out.push(Outbound::RobotState {
                x: s.pose.x,
                y: s.pose.y,
                depth: s.pose.depth,
                heading: s.pose.heading,
                clock: s.clock,
                snapshots: s.snapshots,
            }),
            Event::RobotError(e) => out.push(Outbound::RobotError {
                message: e.to_string(),
            }),
            Event::KeymapChanged(_) => out.push(keymap_changed(session)),
        }
    }
    out
}

/// One live session behind the wire protocol, independent of transport.
#[derive(Debug)]
pub struct Service {
    config: SessionConfig,
    session: Session,
}

impl Service {
    pub fn new(config: SessionConfig, session: Session) -> Self {
        Service { config, session }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn on_connect(&self) -> Vec<Outbound> {
        let mut out = vec![Outbound::Hello {
            protocol: PROTOCOL.to_string(),
            version: VERSION,
        }];
        out.extend(state_dump(&self.session));
        out
    }

    /// Handles one inbound line. Bad input yields an `error` record and
    /// leaves the session untouched.
    pub fn handle_line(&mut self, line: &str) -> Vec<Outbound> {
        if line.trim().is_empty() {
            return Vec::new();
        }
        match Inbound::parse(line) {
            Ok(msg) => self.handle(msg),
            Err(message) => vec![Outbound::Error { message }],
        }
    }

    pub fn handle(&mut self, msg: Inbound) -> Vec<Outbound> {
        match msg {
            Inbound::Frame { ts, gesture } => {
                let gesture = match GestureId::new(gesture) {
                    Ok(g) => g,
                    Err(e) => return vec![error(e)],
                };
                match self.session.push_frame(GestureFrame {
                    timestamp: ts,
                    gesture,
                }) {
                    Ok(events) => outbound(events, &self.session),
                    Err(e) => vec![error(e)],
                }
            }
            Inbound::Reset => {
                self.session.reset();
                state_dump(&self.session)
            }
            Inbound::LoadSession { path } => {
                if self.session.is_mid_form() {
                    return vec![Outbound::Error {
                        message: "load_session rejected: a form is in progress".to_string(),
                    }];
                }
                let loaded = SessionConfig::load(&path).and_then(|c| c.build().map(|s| (c, s)));
                match loaded {
                    Ok((config, session)) => {
                        self.config = config;
                        self.session = session;
                        state_dump(&self.session)
                    }
                    Err(e) => vec![error(e)],
                }
            }
        }
    }
}

fn error(e: impl std::fmt::Display) -> Outbound {
    Outbound::Error {
        message: e.to_string(),
    }
}

/// Bounded outbound buffer. When full, the oldest telemetry record is
/// dropped; effects, errors and state records are always kept, so the
/// buffer may exceed its bound when nothing else is left to drop.
#[derive(Debug)]
pub struct OutboundQueue {
    capacity: usize,
    items: VecDeque<Outbound>,
    next_seq: u64,
    dropped: u64,
}

impl OutboundQueue {
    pub fn new(capacity: usize) -> Self {
        OutboundQueue {
            capacity: capacity.max(1),
            items: VecDeque::new(),
            next_seq: 0,
            dropped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn push(&mut self, msg: Outbound) {
        if self.items.len() >= self.capacity {
            if let Some(i) = self.items.iter().position(Outbound::is_telemetry) {
                self.items.remove(i);
                self.dropped += 1;
            } else if msg.is_telemetry() {
                self.dropped += 1;
                return;
            }
        }
        self.items.push_back(msg);
    }

    pub fn extend(&mut self, msgs: impl IntoIterator<Item = Outbound>) {
        for m in msgs {
            self.push(m);
        }
    }

    /// Takes the next record and numbers it.
    pub fn pop(&mut self) -> Option<Envelope> {
        let message = self.items.pop_front()?;
        let seq = self.next_seq;
        self.next_seq += 1;
        Some(Envelope { seq, message })
    }
}
