//! Simulated vehicle: buffers delivered commands and runs them on execute.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interpreter::{ConcreteCommand, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Meters below the surface.
    pub depth: f64,
    /// Degrees in [0, 360); 0 is the +x axis and RIGHT turns toward +y.
    pub heading: f64,
}

impl Pose {
    /// Component-wise comparison; headings compare on the circle.
    pub fn approx_eq(&self, other: &Pose, eps: f64) -> bool {
        let dh = (self.heading - other.heading).rem_euclid(360.0);
        (self.x - other.x).abs() <= eps
            && (self.y - other.y).abs() <= eps
            && (self.depth - other.depth).abs() <= eps
            && dh.min(360.0 - dh) <= eps
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x={:.3} y={:.3} depth={:.3} heading={:.1}",
            self.x, self.y, self.depth, self.heading
        )
    }
}

fn normalize_heading(h: f64) -> f64 {
    let h = h.rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub seq: u32,
    pub pose: Pose,
    pub clock: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    /// Seconds.
    pub clock: f64,
    pub snapshots: Vec<Snapshot>,
    pub buffer: Vec<ConcreteCommand>,
}

/// What a command does to the vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Forward,
    Up,
    Down,
    Left,
    Right,
    Snapshot,
    Goto,
    Wait,
    Surface,
    Follow,
    Back,
    Circle,
    /// Accepted and logged, no state change.
    Noop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgDomain {
    Number,
    NonNegative,
    /// Non-negative integer.
    Index,
    Symbol,
    Any,
}

impl ArgDomain {
    fn admits(self, v: &Value) -> bool {
        match (self, v) {
            (ArgDomain::Any, _) => true,
            (ArgDomain::Symbol, Value::Symbol(_)) => true,
            (ArgDomain::Number, Value::Number(_)) => true,
            (ArgDomain::NonNegative, Value::Number(n)) => n.value() >= 0.0,
            (ArgDomain::Index, Value::Number(n)) => n.value() >= 0.0 && n.value().fract() == 0.0,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSpec {
    pub name: String,
    pub effect: Effect,
    #[serde(default)]
    pub args: Vec<ArgDomain>,
    /// How many trailing args may be omitted.
    #[serde(default)]
    pub optional: usize,
}

impl CommandSpec {
    pub fn new(name: &str, effect: Effect, args: &[ArgDomain]) -> Self {
        CommandSpec {
            name: name.to_string(),
            effect,
            args: args.to_vec(),
            optional: 0,
        }
    }

    pub fn arity(&self) -> std::ops::RangeInclusive<usize> {
        self.args.len().saturating_sub(self.optional)..=self.args.len()
    }
}

pub fn builtin_commands() -> Vec<CommandSpec> {
    use ArgDomain::*;
    vec![
        CommandSpec::new("FORWARD", Effect::Forward, &[Number]),
        CommandSpec::new("UP", Effect::Up, &[NonNegative]),
        CommandSpec::new("DOWN", Effect::Down, &[NonNegative]),
        CommandSpec::new("LEFT", Effect::Left, &[Number]),
        CommandSpec::new("RIGHT", Effect::Right, &[Number]),
        CommandSpec::new("SNAPSHOT", Effect::Snapshot, &[]),
        CommandSpec::new("GOTO", Effect::Goto, &[Index]),
        CommandSpec::new("WAIT", Effect::Wait, &[NonNegative]),
        CommandSpec::new("SURFACE", Effect::Surface, &[]),
        CommandSpec::new("FOLLOW", Effect::Follow, &[NonNegative]),
        CommandSpec::new("BACK", Effect::Back, &[]),
        CommandSpec::new("CIRCLE", Effect::Circle, &[]),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location {
    pub index: u32,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub depth: f64,
    /// Keep the current heading when absent.
    #[serde(default)]
    pub heading: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub commands: Vec<CommandSpec>,
    pub locations: Vec<Location>,
    /// Seconds between snapshots while following; none when absent.
    pub follow_snapshot_interval: Option<f64>,
    pub start: Pose,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            commands: builtin_commands(),
            locations: vec![
                Location {
                    index: 1,
                    x: 10.0,
                    y: 0.0,
                    depth: 2.0,
                    heading: None,
                },
                Location {
                    index: 2,
                    x: 10.0,
                    y: 10.0,
                    depth: 4.0,
                    heading: None,
                },
            ],
            follow_snapshot_interval: None,
            start: Pose::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RobotError {
    #[error("unknown command {0}")]
    UnknownCommand(String),
    #[error("{name} takes {expected} arguments, got {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("{name}: argument {position} `{value}` is not {domain:?}")]
    BadArgument {
        name: String,
        position: usize,
        value: String,
        domain: ArgDomain,
    },
    #[error("no location {0} configured")]
    UnknownLocation(u32),
    #[error("duplicate command {0} in registry")]
    DuplicateCommand(String),
    #[error("duplicate location {0}")]
    DuplicateLocation(u32),
    #[error("follow snapshot interval must be positive")]
    BadFollowInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub command: ConcreteCommand,
    pub pose: Pose,
    pub clock: f64,
}

pub type TrajectoryLog = Vec<TrajectoryPoint>;

/// One JSON record per line.
pub fn trajectory_lines(log: &TrajectoryLog) -> String {
    let mut out = String::new();
    for p in log {
        out.push_str(&serde_json::to_string(p).expect("trajectory serializes"));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Robot {
    state: RobotState,
    specs: BTreeMap<String, CommandSpec>,
    locations: BTreeMap<u32, Location>,
    follow_interval: Option<f64>,
    start: Pose,
}

impl Default for Robot {
    fn default() -> Self {
        Robot::new(RobotConfig::default()).expect("builtin robot config is valid")
    }
}

impl Robot {
    pub fn new(config: RobotConfig) -> Result<Self, RobotError> {
        let mut specs = BTreeMap::new();
        for c in config.commands {
            if specs.contains_key(&c.name) {
                return Err(RobotError::DuplicateCommand(c.name));
            }
            specs.insert(c.name.clone(), c);
        }
        let mut locations = BTreeMap::new();
        for l in config.locations {
            if locations.insert(l.index, l).is_some() {
                return Err(RobotError::DuplicateLocation(l.index));
            }
        }
        if config.follow_snapshot_interval.is_some_and(|i| i.is_nan() || i <= 0.0) {
            return Err(RobotError::BadFollowInterval);
        }
        let mut start = config.start;
        start.depth = start.depth.max(0.0);
        start.heading = normalize_heading(start.heading);
        Ok(Robot {
            state: RobotState {
                pose: start,
                ..Default::default()
            },
            specs,
            locations,
            follow_interval: config.follow_snapshot_interval,
            start,
        })
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn pose(&self) -> Pose {
        self.state.pose
    }

    pub fn start(&self) -> Pose {
        self.start
    }

    pub fn spec(&self, name: &str) -> Option<&CommandSpec> {
        self.specs.get(name)
    }

    /// Argument counts of every registered command, for parse-time checks.
    pub fn arities(&self) -> crate::interpreter::Arities {
        self.specs.iter().map(|(n, s)| (n.clone(), s.arity())).collect()
    }

    pub fn location(&self, index: u32) -> Option<&Location> {
        self.locations.get(&index)
    }

    /// Back to the start pose with an empty log and buffer.
    pub fn reset(&mut self) {
        self.state = RobotState {
            pose: self.start,
            ..Default::default()
        };
    }

    pub fn validate(&self, cmd: &ConcreteCommand) -> Result<(), RobotError> {
        let spec = self
            .specs
            .get(&cmd.name)
            .ok_or_else(|| RobotError::UnknownCommand(cmd.name.clone()))?;
        let arity = spec.arity();
        if !arity.contains(&cmd.args.len()) {
            let expected = if arity.start() == arity.end() {
                arity.start().to_string()
            } else {
                format!("{}..={}", arity.start(), arity.end())
            };
            return Err(RobotError::Arity {
                name: cmd.name.clone(),
                expected,
                found: cmd.args.len(),
            });
        }
        for (i, (v, d)) in cmd.args.iter().zip(&spec.args).enumerate() {
            if !d.admits(v) {
                return Err(RobotError::BadArgument {
                    name: cmd.name.clone(),
                    position: i + 1,
                    value: v.to_string(),
                    domain: *d,
                });
            }
        }
        Ok(())
    }

    /// Appends `commands` to the buffer, or nothing if any is invalid.
    pub fn deliver(&mut self, commands: &[ConcreteCommand]) -> Result<(), RobotError> {
        for c in commands {
            self.validate(c)?;
        }
        self.state.buffer.extend_from_slice(commands);
        Ok(())
    }

    /// Runs and clears the buffer. An unconfigured GOTO target discards the
    /// buffer without moving.
    pub fn execute(&mut self) -> Result<TrajectoryLog, RobotError> {
        let buffer = std::mem::take(&mut self.state.buffer);
        for c in &buffer {
            if self.specs[&c.name].effect == Effect::Goto {
                let k = goto_target(c);
                if !self.locations.contains_key(&k) {
                    return Err(RobotError::UnknownLocation(k));
                }
            }
        }
        let mut log = Vec::with_capacity(buffer.len());
        for c in buffer {
            self.apply(&c);
            log.push(TrajectoryPoint {
                command: c,
                pose: self.state.pose,
                clock: self.state.clock,
            });
        }
        Ok(log)
    }

    fn apply(&mut self, c: &ConcreteCommand) {
        let arg = |i: usize| match c.args.get(i) {
            Some(Value::Number(n)) => n.value(),
            _ => 0.0,
        };
        let s = &mut self.state;
        match self.specs[&c.name].effect {
            Effect::Forward => {
                let h = s.pose.heading.to_radians();
                s.pose.x += arg(0) * h.cos();
                s.pose.y += arg(0) * h.sin();
            }
            Effect::Up => s.pose.depth = (s.pose.depth - arg(0)).max(0.0),
            Effect::Down => s.pose.depth = (s.pose.depth + arg(0)).max(0.0),
            Effect::Left => s.pose.heading = normalize_heading(s.pose.heading - arg(0)),
            Effect::Right => s.pose.heading = normalize_heading(s.pose.heading + arg(0)),
            Effect::Snapshot => self.snapshot(),
            Effect::Goto => {
                let l = self.locations[&goto_target(c)];
                s.pose.x = l.x;
                s.pose.y = l.y;
                s.pose.depth = l.depth.max(0.0);
                if let Some(h) = l.heading {
                    s.pose.heading = normalize_heading(h);
                }
            }
            Effect::Wait => s.clock += arg(0),
            Effect::Surface => s.pose.depth = 0.0,
            Effect::Follow => {
                let until = s.clock + arg(0);
                if let Some(i) = self.follow_interval {
                    let mut next = self.state.clock + i;
                    while next <= until + 1e-9 {
                        self.state.clock = next;
                        self.snapshot();
                        next += i;
                    }
                }
                self.state.clock = until;
            }
            Effect::Back => s.pose = self.start,
            Effect::Circle | Effect::Noop => {}
        }
    }

    fn snapshot(&mut self) {
        let seq = self.state.snapshots.len() as u32 + 1;
        self.state.snapshots.push(Snapshot {
            seq,
            pose: self.state.pose,
            clock: self.state.clock,
        });
    }
}

fn goto_target(c: &ConcreteCommand) -> u32 {
    match c.args.first() {
        Some(Value::Number(n)) => n.value() as u32,
        _ => 0,
    }
}
