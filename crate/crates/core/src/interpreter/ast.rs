use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Function slots, variable slots, loop counts and keymap indices are all
/// plain non-negative integers read digit by digit.
pub type Slot = u32;

/// A decimal number built from an optional sign, integer digits and an
/// optional fractional part.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Number(f64);

impl Number {
    pub fn new(value: f64) -> Number {
        // keep -0 out of effect logs
        Number(if value == 0.0 { 0.0 } else { value })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Number {
    fn from(v: f64) -> Self {
        Number::new(v)
    }
}

impl From<i32> for Number {
    fn from(v: i32) -> Self {
        Number::new(v as f64)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Arg {
    Literal(Number),
    VarRef(Slot),
    Symbol(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MathOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl MathOp {
    /// FN names that select a math function instead of a robot command.
    pub fn from_fn_name(name: &str) -> Option<MathOp> {
        match name {
            "+" | "ADD" => Some(MathOp::Add),
            "-" | "SUB" => Some(MathOp::Sub),
            "*" | "MUL" => Some(MathOp::Mul),
            "/" | "DIV" => Some(MathOp::Div),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            MathOp::Add => "+",
            MathOp::Sub => "-",
            MathOp::Mul => "*",
            MathOp::Div => "/",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    VarRef(Slot),
    Literal(Number),
}

/// One recorded command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CmdNode {
    FnCall { name: String, args: Vec<Arg> },
    CallFn(Slot),
    SetVar { slot: Slot, value: Number },
    MathFn { op: MathOp, var: Slot, operand: Operand },
    Loop { count: u32, body: Vec<CmdNode> },
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Literal(n) => write!(f, "{n}"),
            Arg::VarRef(s) => write!(f, "${s}"),
            Arg::Symbol(s) => f.write_str(s),
        }
    }
}

impl fmt::Display for CmdNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdNode::FnCall { name, args } => {
                f.write_str(name)?;
                for (i, a) in args.iter().enumerate() {
                    write!(f, "{}{a}", if i == 0 { " " } else { ", " })?;
                }
                Ok(())
            }
            CmdNode::CallFn(s) => write!(f, "call {s}"),
            CmdNode::SetVar { slot, value } => write!(f, "${slot} = {value}"),
            CmdNode::MathFn { op, var, operand } => {
                let rhs = match operand {
                    Operand::VarRef(s) => format!("${s}"),
                    Operand::Literal(n) => n.to_string(),
                };
                write!(f, "${var} {}= {rhs}", op.symbol())
            }
            CmdNode::Loop { count, body } => {
                write!(f, "repeat {count} {{")?;
                for (i, c) in body.iter().enumerate() {
                    write!(f, "{}{c}", if i == 0 { " " } else { "; " })?;
                }
                f.write_str(" }")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(Number),
    Symbol(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => write!(f, "{n}"),
            Value::Symbol(s) => f.write_str(s),
        }
    }
}

/// A command ready to hand to the robot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcreteCommand {
    pub name: String,
    pub args: Vec<Value>,
}

impl ConcreteCommand {
    pub fn new(name: &str, args: &[f64]) -> ConcreteCommand {
        ConcreteCommand {
            name: name.to_string(),
            args: args.iter().map(|&a| Value::Number(Number::new(a))).collect(),
        }
    }
}

impl fmt::Display for ConcreteCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

pub type CommandList = Vec<ConcreteCommand>;

/// What a completed top-level form does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProgramEffect {
    DefinedFunction(Slot),
    VariableSet(Slot, Number),
    KeymapChanged(Slot),
    Executed(CommandList),
}

impl fmt::Display for ProgramEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramEffect::DefinedFunction(s) => write!(f, "DefinedFunction({s})"),
            ProgramEffect::VariableSet(s, v) => write!(f, "VariableSet({s}, {v})"),
            ProgramEffect::KeymapChanged(k) => write!(f, "KeymapChanged({k})"),
            ProgramEffect::Executed(cmds) => {
                f.write_str("Executed([")?;
                for (i, c) in cmds.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("])")
            }
        }
    }
}

/// Functions and variables defined in the field. The two slot spaces are
/// independent: function 1 and variable 1 can coexist.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Environment {
    pub functions: BTreeMap<Slot, Vec<CmdNode>>,
    pub variables: BTreeMap<Slot, Number>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.functions.clear();
        self.variables.clear();
    }
}
