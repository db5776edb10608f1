use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interpreter::{Interpreter, ParseError, ProgramEffect};
use crate::keymap::{builtin, GestureId, KeymapErrors, KeymapRegistry, Token};
use crate::robot::{Robot, RobotConfig, RobotError, RobotState};

/// FN names given to otherwise unused gestures when a keymap is filled.
pub const FILLER_FNS: [&str; 12] = [
    "FORWARD", "LEFT", "RIGHT", "UP", "DOWN", "SNAPSHOT", "SURFACE", "GOTO", "BACK", "FOLLOW", "CIRCLE", "WAIT",
];

/// PARAM texts given to otherwise unused gestures when a keymap is filled.
pub const FILLER_PARAMS: [&str; 12] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "-", "."];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TaskError {
    #[error("task {task}: {message}")]
    Script { task: String, message: String },
    #[error("task {task} does not parse cleanly: {error}")]
    Parse { task: String, error: ParseError },
    #[error("task {task}: robot rejected the program: {error}")]
    Robot { task: String, error: RobotError },
    #[error("task {task}: keymap {index}: {errors}")]
    Keymap {
        task: String,
        index: u32,
        errors: KeymapErrors,
    },
}

/// How many definitions a cell leaves empty in one table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCount", into = "RawCount")]
pub enum EmptyCount {
    Count(usize),
    /// Everything the task does not need.
    Max,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawCount {
    N(usize),
    S(String),
}

impl TryFrom<RawCount> for EmptyCount {
    type Error = String;

    fn try_from(r: RawCount) -> Result<Self, String> {
        match r {
            RawCount::N(n) => Ok(EmptyCount::Count(n)),
            RawCount::S(s) if s == "max" => Ok(EmptyCount::Max),
            RawCount::S(s) => Err(format!("expected a count or \"max\", got \"{s}\"")),
        }
    }
}

impl From<EmptyCount> for RawCount {
    fn from(c: EmptyCount) -> Self {
        match c {
            EmptyCount::Count(n) => RawCount::N(n),
            EmptyCount::Max => RawCount::S("max".into()),
        }
    }
}

impl fmt::Display for EmptyCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmptyCount::Count(n) => write!(f, "{n}"),
            EmptyCount::Max => f.write_str("max"),
        }
    }
}

/// FN and PARAM gestures per keymap index.
pub type Required = BTreeMap<u32, (BTreeSet<GestureId>, BTreeSet<GestureId>)>;

/// One task: the keymaps it is written against and the gestures that
/// express it.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub id: String,
    pub description: String,
    pub registry: KeymapRegistry,
    pub script: Vec<GestureId>,
}

/// Keymaps for one cell, with the empty counts actually achieved in keymap 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CellKeymaps {
    pub registry: KeymapRegistry,
    pub empty_fn: usize,
    pub empty_param: usize,
}

impl TaskSpec {
    /// `script` is whitespace-separated gesture IDs or aliases.
    pub fn new(id: &str, description: &str, registry: KeymapRegistry, script: &str) -> Result<Self, TaskError> {
        let err = |message: String| TaskError::Script {
            task: id.to_string(),
            message,
        };
        let mut gestures = Vec::new();
        for w in script.split_whitespace() {
            let g = match w.parse::<u32>() {
                Ok(n) => GestureId::new(n).map_err(|e| err(e.to_string()))?,
                Err(_) => registry.alias(w).ok_or_else(|| err(format!("unknown gesture `{w}`")))?,
            };
            gestures.push(g);
        }
        if gestures.is_empty() {
            return Err(err("empty script".into()));
        }
        Ok(TaskSpec {
            id: id.to_string(),
            description: description.to_string(),
            registry,
            script: gestures,
        })
    }

    /// Number of signals in the script.
    pub fn complexity(&self) -> usize {
        self.script.len()
    }

    /// Effects and robot end state of a clean run.
    pub fn expected(&self, robot: &RobotConfig) -> Result<(Vec<ProgramEffect>, RobotState), TaskError> {
        let mut interp = Interpreter::new(self.registry.clone());
        let effects = interp.parse_gestures(self.script.iter().copied()).map_err(|error| TaskError::Parse {
            task: self.id.clone(),
            error,
        })?;
        let robot_err = |error| TaskError::Robot {
            task: self.id.clone(),
            error,
        };
        let mut r = Robot::new(robot.clone()).map_err(robot_err)?;
        for e in &effects {
            if let ProgramEffect::Executed(cmds) = e {
                r.deliver(cmds).map_err(robot_err)?;
                r.execute().map_err(robot_err)?;
            }
        }
        Ok((effects, r.state().clone()))
    }

    /// FN and PARAM definitions the script actually uses, per keymap index.
    pub fn required(&self) -> Result<Required, TaskError> {
        let mut used: Required =
            self.registry.indices().map(|k| (k, Default::default())).collect();
        let mut interp = Interpreter::new(self.registry.clone());
        for &g in &self.script {
            let active = interp.registry().active_index();
            let line = interp.feed_traced(g);
            if let crate::interpreter::FeedOutcome::ParseError(error) = line.outcome {
                return Err(TaskError::Parse {
                    task: self.id.clone(),
                    error,
                });
            }
            match &line.token {
                Token::Fn(name) => {
                    // usually the active keymap; right after `SET n` it is keymap n
                    let defines = |k: u32| self.registry.get(k).unwrap().fn_name(g) == Some(name.as_str());
                    let from: Vec<u32> = if defines(active) {
                        vec![active]
                    } else {
                        self.registry.indices().filter(|&k| defines(k)).collect()
                    };
                    for k in from {
                        used.get_mut(&k).unwrap().0.insert(g);
                    }
                }
                Token::Digit(_) | Token::NegSign | Token::DecimalPoint | Token::Param(_) => {
                    used.get_mut(&active).unwrap().1.insert(g);
                }
                _ => {}
            }
        }
        interp.finish().map_err(|error| TaskError::Parse {
            task: self.id.clone(),
            error,
        })?;
        Ok(used)
    }

    /// Keeps every system binding and every definition the script uses,
    /// gives each other gesture a filler FN and PARAM, then empties
    /// fillers from the highest-numbered gesture down.
    pub fn cell_keymaps(&self, empty_fn: EmptyCount, empty_param: EmptyCount) -> Result<CellKeymaps, TaskError> {
        let required = self.required()?;
        let mut registry: Option<KeymapRegistry> = None;
        let mut counts = (0, 0);
        for (k, (req_fn, req_param)) in &required {
            let km = self.registry.get(*k).unwrap();
            let mut b = km.to_builder();
            b.fns.clear();
            b.params.clear();
            let free: Vec<GestureId> = GestureId::all().filter(|g| km.system_symbol(*g).is_none()).collect();
            for &g in &free {
                if req_fn.contains(&g) {
                    b.fns.insert(g, km.fn_name(g).unwrap().to_string());
                }
                if req_param.contains(&g) {
                    b.params.insert(g, km.param_text(g).unwrap().to_string());
                }
            }
            let fill_fn: Vec<GestureId> = free.iter().copied().filter(|g| !req_fn.contains(g)).collect();
            let fill_param: Vec<GestureId> = free.iter().copied().filter(|g| !req_param.contains(g)).collect();
            let masked = |candidates: &[GestureId], c: EmptyCount| match c {
                EmptyCount::Max => candidates.len(),
                EmptyCount::Count(n) => n.min(candidates.len()),
            };
            let n_fn = masked(&fill_fn, empty_fn);
            let n_param = masked(&fill_param, empty_param);
            // lowest-numbered fillers stay defined
            for &g in &fill_fn[..fill_fn.len() - n_fn] {
                b.fns.insert(g, FILLER_FNS[g.index() % FILLER_FNS.len()].to_string());
            }
            for &g in &fill_param[..fill_param.len() - n_param] {
                b.params.insert(g, FILLER_PARAMS[g.index() % FILLER_PARAMS.len()].to_string());
            }
            let built = b.build(*k).map_err(|errors| TaskError::Keymap {
                task: self.id.clone(),
                index: *k,
                errors,
            })?;
            if *k == 0 {
                counts = (free.len() - built.fn_bindings().len(), free.len() - built.param_bindings().len());
            }
            match registry.as_mut() {
                None => registry = Some(KeymapRegistry::new(built)),
                Some(r) => r.register(*k, built),
            }
        }
        Ok(CellKeymaps {
            registry: registry.expect("registry has keymap 0"),
            empty_fn: counts.0,
            empty_param: counts.1,
        })
    }
}

fn task_registry() -> KeymapRegistry {
    KeymapRegistry::new(builtin::tasks())
}

fn two_keymap_registry() -> KeymapRegistry {
    let mut r = KeymapRegistry::new(builtin::left());
    r.register(1, builtin::right());
    r
}

/// The eight reference tasks. Tasks 1 to 7 use the task keymap (BEGIN=A,
/// END=B, CALL=C, CMD_SEP=D, PARAM_SEP=E, BEGIN standing in for DO); task 8
/// defines a function with the two-keymap layout and calls it.
pub fn builtin_tasks() -> Vec<TaskSpec> {
    let t = |id: &str, desc: &str, reg: KeymapRegistry, script: &str| {
        TaskSpec::new(id, desc, reg, script).expect("built-in task script is valid")
    };
    vec![
        t("T1", "Go down 1 meter and take a photo", task_registry(), "A 1 A 4 1 D 5 B"),
        t("T2", "Go left 30 degrees and take a photo", task_registry(), "A 1 A 1 3 0 D 5 B"),
        t(
            "T3",
            "Go to the surface, take a photo and go back",
            task_registry(),
            "A 1 A 6 D 5 D 8 B",
        ),
        t(
            "T4",
            "Swim a circle 3 times, go forward 2 meters, take a photo and go back",
            task_registry(),
            "A 1 A A 3 A 15 B D 0 2 D 5 D 8 B",
        ),
        t(
            "T5",
            "Go down 3 meters taking a photo after every meter",
            task_registry(),
            "A 3 A 4 1 D 5 B",
        ),
        t(
            "T6",
            "Go to location 1, take a photo, go to location 2, take a photo and go back",
            task_registry(),
            "A 1 A 7 1 D 5 D 7 2 D 5 D 8 B",
        ),
        t(
            "T7",
            "Follow the operator, taking a photo every second",
            task_registry(),
            "A 5 A 9 1 D 5 B",
        ),
        t(
            "T8",
            "Define a function in the field and call it to do task 5",
            two_keymap_registry(),
            "A 1 D A 1 D 1 1 D 2 D A 0 B A 3 A C 1 B",
        ),
    ]
}
