//! Expansion of recorded commands into a flat command list.

use thiserror::Error;

use super::ast::{Arg, CmdNode, CommandList, ConcreteCommand, Environment, MathOp, Number, Operand, Slot, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum nesting of open command sets while parsing, and of loops plus
    /// function calls while expanding.
    pub max_depth: usize,
    /// Maximum length of one expanded command list.
    pub max_commands: usize,
    /// Maximum number of recorded nodes evaluated for one form.
    pub max_steps: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_depth: 16,
            max_commands: 10_000,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ExpandError {
    #[error("undefined function {0}")]
    UndefinedFunction(Slot),
    #[error("undefined variable {0}")]
    UndefinedVariable(Slot),
    #[error("division by zero in variable {0}")]
    DivisionByZero(Slot),
    #[error("recursive call of function {0}")]
    RecursiveCall(Slot),
    #[error("expansion nested deeper than {0}")]
    DepthExceeded(usize),
    #[error("expansion exceeds {0} commands")]
    TooManyCommands(usize),
    #[error("expansion exceeds {0} steps")]
    TooManySteps(usize),
}

/// Expands `body` depth-first. Loops are unrolled, calls inlined with the
/// environment as it stands at the call, variable references read when
/// reached, and variable assignments applied to `env` in order.
pub fn expand(body: &[CmdNode], env: &mut Environment, limits: &Limits) -> Result<CommandList, ExpandError> {
    let mut ex = Expander {
        env,
        limits,
        out: Vec::new(),
        calls: Vec::new(),
        steps: 0,
    };
    ex.run(body, 0)?;
    Ok(ex.out)
}

struct Expander<'a> {
    env: &'a mut Environment,
    limits: &'a Limits,
    out: CommandList,
    calls: Vec<Slot>,
    steps: usize,
}

impl Expander<'_> {
    fn run(&mut self, body: &[CmdNode], depth: usize) -> Result<(), ExpandError> {
        if depth > self.limits.max_depth {
            return Err(ExpandError::DepthExceeded(self.limits.max_depth));
        }
        for node in body {
            self.steps += 1;
            if self.steps > self.limits.max_steps {
                return Err(ExpandError::TooManySteps(self.limits.max_steps));
            }
            match node {
                CmdNode::FnCall { name, args } => {
                    let args = args
                        .iter()
                        .map(|a| match a {
                            Arg::Literal(n) => Ok(Value::Number(*n)),
                            Arg::VarRef(s) => self.var(*s).map(Value::Number),
                            Arg::Symbol(t) => Ok(Value::Symbol(t.clone())),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if self.out.len() >= self.limits.max_commands {
                        return Err(ExpandError::TooManyCommands(self.limits.max_commands));
                    }
                    self.out.push(ConcreteCommand { name: name.clone(), args });
                }
                CmdNode::CallFn(slot) => {
                    if self.calls.contains(slot) {
                        return Err(ExpandError::RecursiveCall(*slot));
                    }
                    let callee = self
                        .env
                        .functions
                        .get(slot)
                        .cloned()
                        .ok_or(ExpandError::UndefinedFunction(*slot))?;
                    self.calls.push(*slot);
                    self.run(&callee, depth + 1)?;
                    self.calls.pop();
                }
                CmdNode::SetVar { slot, value } => {
                    self.env.variables.insert(*slot, *value);
                }
                CmdNode::MathFn { op, var, operand } => {
                    let lhs = self.var(*var)?.value();
                    let rhs = match operand {
                        Operand::VarRef(s) => self.var(*s)?.value(),
                        Operand::Literal(n) => n.value(),
                    };
                    let result = match op {
                        MathOp::Add => lhs + rhs,
                        MathOp::Sub => lhs - rhs,
                        MathOp::Mul => lhs * rhs,
                        MathOp::Div if rhs == 0.0 => return Err(ExpandError::DivisionByZero(*var)),
                        MathOp::Div => lhs / rhs,
                    };
                    self.env.variables.insert(*var, Number::new(result));
                }
                CmdNode::Loop { count, body } => {
                    for _ in 0..*count {
                        self.run(body, depth + 1)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn var(&self, slot: Slot) -> Result<Number, ExpandError> {
        self.env
            .variables
            .get(&slot)
            .copied()
            .ok_or(ExpandError::UndefinedVariable(slot))
    }
}
