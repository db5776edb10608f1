//! One-token-at-a-time realization of the command grammar.
//!
//! ```text
//! <explist>       ::= <exp> | <set-var> | <def-fn> | <change-keymap>
//! <def-fn>        ::= (DEF|BEGIN) <integer> CMD_SEP <cmdset> END
//! <set-var>       ::= (SET|BEGIN) <integer> PARAM_SEP <num> END
//! <change-keymap> ::= (SET|BEGIN) <integer> END
//! <exp>           ::= BEGIN <integer> (DO|BEGIN) <cmdset> [CMD_SEP] END
//! <cmdset>        ::= <cmd> [CMD_SEP <cmdset>]
//! <cmd>           ::= FN <arg-list> | CALL <integer> | <load-keymap>
//!                   | <set-var> | <math-fn> | <exp>
//! ```
//!
//! Integers end at the first non-digit token, which is then handled by the
//! enclosing rule. Inside a command set, `CALL n` at the head of a command is a
//! function call and `CALL n` in an argument position reads a variable.
//! Keymap loads take effect immediately and are not recorded.

use std::fmt;
use std::mem;

use thiserror::Error;

use super::ast::{Arg, CmdNode, Environment, MathOp, Number, Operand, ProgramEffect, Slot};
use super::expand::{expand, ExpandError, Limits};
use crate::keymap::{GestureId, KeymapRegistry, Position, Token};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("unexpected {found} {context}; expected {expected}")]
    Unexpected {
        found: Token,
        context: &'static str,
        expected: &'static str,
    },
    #[error("integer too large")]
    IntegerOverflow,
    #[error("command sets nested deeper than {0}")]
    DepthExceeded(usize),
    #[error("unknown keymap {0}")]
    UnknownKeymap(Slot),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error("unexpected end of input in {0}")]
    Incomplete(String),
    #[error("{name} takes {min} to {max} arguments, got {found}")]
    Arity {
        name: String,
        min: usize,
        max: usize,
        found: usize,
    },
}

fn unexpected(found: Token, context: &'static str, expected: &'static str) -> ParseError {
    ParseError::Unexpected {
        found,
        context,
        expected,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Lead {
    Begin,
    Def,
    Set,
}

impl Lead {
    fn name(self) -> &'static str {
        match self {
            Lead::Begin => "BEGIN",
            Lead::Def => "DEF",
            Lead::Set => "SET",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Digits(String);

impl Digits {
    fn push(&mut self, d: u8) -> Result<(), ParseError> {
        self.0.push((b'0' + d) as char);
        self.value().map(|_| ())
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn value(&self) -> Result<Slot, ParseError> {
        self.0.parse().map_err(|_| ParseError::IntegerOverflow)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NumStage {
    Start,
    Sign,
    Int,
    Point,
    Frac,
}

/// Accumulates `[-] digits [. digits]`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct NumberBuf {
    text: String,
    stage: NumStage,
}

enum NumStep {
    Took,
    /// The token ends the number and was not consumed.
    Done(Number),
    Bad(&'static str),
}

impl NumberBuf {
    fn new() -> Self {
        NumberBuf {
            text: String::new(),
            stage: NumStage::Start,
        }
    }

    fn push(&mut self, tok: &Token) -> NumStep {
        use NumStage::*;
        match (self.stage, tok) {
            (Start, Token::NegSign) => {
                self.text.push('-');
                self.stage = Sign;
            }
            (Start | Sign | Int, Token::Digit(d)) => {
                self.text.push((b'0' + d) as char);
                self.stage = Int;
            }
            (Int, Token::DecimalPoint) => {
                self.text.push('.');
                self.stage = Point;
            }
            (Point | Frac, Token::Digit(d)) => {
                self.text.push((b'0' + d) as char);
                self.stage = Frac;
            }
            (Int | Frac, _) => {
                let v: f64 = self.text.parse().expect("number text is well formed");
                return NumStep::Done(Number::new(v));
            }
            (Start, _) => return NumStep::Bad("a number"),
            (Sign | Point, _) => return NumStep::Bad("a digit"),
        }
        NumStep::Took
    }
}

#[derive(Clone, Debug, PartialEq)]
enum ArgState {
    /// Directly after the FN name: an argument, or nothing.
    First,
    /// After PARAM_SEP: an argument is required.
    Required,
    Number(NumberBuf),
    VarSlot(Digits),
    Done,
}

#[derive(Clone, Debug, PartialEq)]
enum MathStage {
    ExpectCall,
    VarSlot(Digits),
    OperandStart(Slot),
    OperandVar(Slot, Digits),
    OperandNum(Slot, NumberBuf),
}

#[derive(Clone, Debug, PartialEq)]
enum Mode {
    TopLevel,
    /// Reading the integer after a leading BEGIN/DEF/SET.
    LeadInteger { lead: Lead, digits: Digits },
    SetValue { slot: Slot, num: NumberBuf },
    /// Start of a command. `closable` after a CMD_SEP, where END may follow.
    CmdHead { closable: bool },
    Args { name: String, args: Vec<Arg>, arg: ArgState },
    CallSlot(Digits),
    Math { op: MathOp, stage: MathStage },
    /// A nested command set just closed.
    AfterCmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FrameKind {
    Define(Slot),
    Repeat(u32),
}

#[derive(Clone, Debug, PartialEq)]
struct Frame {
    kind: FrameKind,
    body: Vec<CmdNode>,
}

/// Everything the parser knows about the form in progress.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseState {
    mode: Mode,
    frames: Vec<Frame>,
    /// Active keymap when the current form began; restored if the form is discarded.
    form_keymap: Option<Slot>,
}

impl Default for ParseState {
    fn default() -> Self {
        ParseState {
            mode: Mode::TopLevel,
            frames: Vec::new(),
            form_keymap: None,
        }
    }
}

pub(crate) struct Cx<'a> {
    pub env: &'a mut Environment,
    pub registry: &'a mut KeymapRegistry,
    pub limits: &'a Limits,
    pub arities: &'a super::Arities,
}

impl ParseState {
    pub fn is_top_level(&self) -> bool {
        self.mode == Mode::TopLevel
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// A lower bound on the tokens still needed to complete the form.
    pub fn min_to_close(&self) -> usize {
        let ends = self.frames.len();
        match &self.mode {
            Mode::TopLevel => 0,
            Mode::LeadInteger { .. } => 1,
            Mode::CmdHead { closable: false }
            | Mode::Args {
                arg: ArgState::Required,
                ..
            } => ends + 1,
            _ => ends,
        }
    }

    /// Table consulted for the next gesture.
    pub fn position(&self) -> Position {
        match self.mode {
            Mode::TopLevel => Position::SystemFirst,
            Mode::CmdHead { .. } => Position::Fn,
            _ => Position::Param,
        }
    }

    /// Keymap an explicit `SET n` inside a command set would load if the
    /// integer ended here.
    pub(crate) fn pending_keymap_load(&self) -> Option<Slot> {
        match &self.mode {
            Mode::LeadInteger { lead: Lead::Set, digits } if !self.frames.is_empty() && !digits.is_empty() => {
                digits.value().ok()
            }
            _ => None,
        }
    }

    /// Drops the partial form and restores the keymap it started with.
    pub(crate) fn abandon(&mut self, registry: &mut KeymapRegistry) {
        if let Some(k) = self.form_keymap.take() {
            let _ = registry.activate(k);
        }
        self.mode = Mode::TopLevel;
        self.frames.clear();
    }

    pub(crate) fn advance(
        &mut self,
        tok: Token,
        gesture: Option<GestureId>,
        cx: &mut Cx<'_>,
    ) -> Result<Option<ProgramEffect>, ParseError> {
        let mode = mem::replace(&mut self.mode, Mode::TopLevel);
        match mode {
            Mode::TopLevel => {
                let lead = match tok {
                    Token::Begin => Lead::Begin,
                    Token::Def => Lead::Def,
                    Token::Set => Lead::Set,
                    other => return Err(unexpected(other, "at top level", "BEGIN, DEF or SET")),
                };
                self.form_keymap = Some(cx.registry.active_index());
                self.mode = Mode::LeadInteger {
                    lead,
                    digits: Digits::default(),
                };
                Ok(None)
            }
            Mode::LeadInteger { lead, mut digits } => {
                if let Token::Digit(d) = tok {
                    digits.push(d)?;
                    self.mode = Mode::LeadInteger { lead, digits };
                    return Ok(None);
                }
                if digits.is_empty() {
                    return Err(unexpected(tok, "after BEGIN, DEF or SET", "a digit"));
                }
                let n = digits.value()?;
                self.after_lead_integer(lead, n, tok, gesture, cx)
            }
            Mode::SetValue { slot, mut num } => match num.push(&tok) {
                NumStep::Took => {
                    self.mode = Mode::SetValue { slot, num };
                    Ok(None)
                }
                NumStep::Bad(expected) => Err(unexpected(tok, "in variable value", expected)),
                NumStep::Done(value) => {
                    if !self.frames.is_empty() {
                        self.push_node(CmdNode::SetVar { slot, value });
                        return self.after_cmd(tok, cx);
                    }
                    if tok != Token::End {
                        return Err(unexpected(tok, "after variable value", "END"));
                    }
                    cx.env.variables.insert(slot, value);
                    self.form_keymap = None;
                    Ok(Some(ProgramEffect::VariableSet(slot, value)))
                }
            },
            Mode::CmdHead { closable } => match tok {
                Token::Fn(name) => {
                    self.mode = match MathOp::from_fn_name(&name) {
                        Some(op) => Mode::Math {
                            op,
                            stage: MathStage::ExpectCall,
                        },
                        None => Mode::Args {
                            name,
                            args: Vec::new(),
                            arg: ArgState::First,
                        },
                    };
                    Ok(None)
                }
                Token::Call => {
                    self.mode = Mode::CallSlot(Digits::default());
                    Ok(None)
                }
                Token::Begin | Token::Set => {
                    let lead = if tok == Token::Begin { Lead::Begin } else { Lead::Set };
                    self.mode = Mode::LeadInteger {
                        lead,
                        digits: Digits::default(),
                    };
                    Ok(None)
                }
                Token::End if closable => self.close_frame(cx),
                other if closable => Err(unexpected(other, "at start of command", "a command or END")),
                other => Err(unexpected(other, "at start of command", "a command")),
            },
            Mode::Args { name, mut args, arg } => match arg {
                ArgState::First if cx.arities.get(&name).is_some_and(|a| *a.end() == 0) => match tok {
                    Token::CmdSep | Token::End => self.args_done(name, args, tok, cx),
                    other => Err(unexpected(other, "after a command without arguments", "CMD_SEP or END")),
                },
                ArgState::First | ArgState::Required => match tok {
                    Token::Digit(_) | Token::NegSign => {
                        let mut num = NumberBuf::new();
                        num.push(&tok);
                        self.mode = Mode::Args {
                            name,
                            args,
                            arg: ArgState::Number(num),
                        };
                        Ok(None)
                    }
                    Token::Call => {
                        self.mode = Mode::Args {
                            name,
                            args,
                            arg: ArgState::VarSlot(Digits::default()),
                        };
                        Ok(None)
                    }
                    Token::Param(text) => {
                        args.push(Arg::Symbol(text));
                        self.mode = Mode::Args {
                            name,
                            args,
                            arg: ArgState::Done,
                        };
                        Ok(None)
                    }
                    Token::CmdSep | Token::End if arg == ArgState::First => self.args_done(name, args, tok, cx),
                    other => Err(unexpected(other, "in argument list", "an argument")),
                },
                ArgState::Number(mut num) => match num.push(&tok) {
                    NumStep::Took => {
                        self.mode = Mode::Args {
                            name,
                            args,
                            arg: ArgState::Number(num),
                        };
                        Ok(None)
                    }
                    NumStep::Bad(expected) => Err(unexpected(tok, "in number argument", expected)),
                    NumStep::Done(v) => {
                        args.push(Arg::Literal(v));
                        self.args_done(name, args, tok, cx)
                    }
                },
                ArgState::VarSlot(mut digits) => {
                    if let Token::Digit(d) = tok {
                        digits.push(d)?;
                        self.mode = Mode::Args {
                            name,
                            args,
                            arg: ArgState::VarSlot(digits),
                        };
                        return Ok(None);
                    }
                    if digits.is_empty() {
                        return Err(unexpected(tok, "after CALL", "a variable slot"));
                    }
                    args.push(Arg::VarRef(digits.value()?));
                    self.args_done(name, args, tok, cx)
                }
                ArgState::Done => self.args_done(name, args, tok, cx),
            },
            Mode::CallSlot(mut digits) => {
                if let Token::Digit(d) = tok {
                    digits.push(d)?;
                    self.mode = Mode::CallSlot(digits);
                    return Ok(None);
                }
                if digits.is_empty() {
                    return Err(unexpected(tok, "after CALL", "a function slot"));
                }
                self.push_node(CmdNode::CallFn(digits.value()?));
                self.after_cmd(tok, cx)
            }
            Mode::Math { op, stage } => self.math(op, stage, tok, cx),
            Mode::AfterCmd => self.after_cmd(tok, cx),
        }
    }

    fn after_lead_integer(
        &mut self,
        lead: Lead,
        n: Slot,
        tok: Token,
        gesture: Option<GestureId>,
        cx: &mut Cx<'_>,
    ) -> Result<Option<ProgramEffect>, ParseError> {
        let top = self.frames.is_empty();
        match (tok, lead) {
            (Token::ParamSep, Lead::Begin | Lead::Set) => {
                self.mode = Mode::SetValue {
                    slot: n,
                    num: NumberBuf::new(),
                };
                Ok(None)
            }
            (Token::Begin | Token::Do, Lead::Begin) => {
                self.open(FrameKind::Repeat(n), cx.limits)?;
                Ok(None)
            }
            (Token::CmdSep, Lead::Begin | Lead::Def) if top => {
                self.open(FrameKind::Define(n), cx.limits)?;
                Ok(None)
            }
            (Token::End, Lead::Begin | Lead::Set) if top => {
                cx.registry.activate(n).map_err(|_| ParseError::UnknownKeymap(n))?;
                self.form_keymap = None;
                Ok(Some(ProgramEffect::KeymapChanged(n)))
            }
            (Token::CmdSep, Lead::Begin | Lead::Set) => {
                cx.registry.activate(n).map_err(|_| ParseError::UnknownKeymap(n))?;
                self.mode = Mode::CmdHead { closable: true };
                Ok(None)
            }
            (Token::End, Lead::Begin | Lead::Set) => {
                cx.registry.activate(n).map_err(|_| ParseError::UnknownKeymap(n))?;
                self.close_frame(cx)
            }
            // explicit SET n directly followed by a command: load, then read
            // the gesture as the head of the next command under the new keymap
            (other, Lead::Set) if !top && !other.is_system() => {
                cx.registry.activate(n).map_err(|_| ParseError::UnknownKeymap(n))?;
                let head = match gesture {
                    Some(g) => cx.registry.resolve(g, Position::Fn),
                    None => other,
                };
                self.mode = Mode::CmdHead { closable: false };
                if head == Token::Empty {
                    return Ok(None);
                }
                self.advance(head, gesture, cx)
            }
            (other, _) => Err(unexpected(
                other,
                match lead {
                    Lead::Begin => "after BEGIN <integer>",
                    Lead::Def => "after DEF <integer>",
                    Lead::Set => "after SET <integer>",
                },
                match (lead, top) {
                    (Lead::Begin, true) => "CMD_SEP, PARAM_SEP, END, DO or BEGIN",
                    (Lead::Def, _) => "CMD_SEP",
                    (Lead::Set, true) => "PARAM_SEP or END",
                    (Lead::Begin, false) => "CMD_SEP, PARAM_SEP, END, DO or BEGIN",
                    (Lead::Set, false) => "CMD_SEP, PARAM_SEP, END or a command",
                },
            )),
        }
    }

    fn math(
        &mut self,
        op: MathOp,
        stage: MathStage,
        tok: Token,
        cx: &mut Cx<'_>,
    ) -> Result<Option<ProgramEffect>, ParseError> {
        let next = match stage {
            MathStage::ExpectCall => match tok {
                Token::Call => MathStage::VarSlot(Digits::default()),
                other => return Err(unexpected(other, "after math operator", "CALL")),
            },
            MathStage::VarSlot(mut digits) => match tok {
                Token::Digit(d) => {
                    digits.push(d)?;
                    MathStage::VarSlot(digits)
                }
                _ if digits.is_empty() => return Err(unexpected(tok, "after CALL", "a variable slot")),
                Token::ParamSep => MathStage::OperandStart(digits.value()?),
                other => return Err(unexpected(other, "after math variable", "PARAM_SEP")),
            },
            MathStage::OperandStart(var) => match tok {
                Token::Call => MathStage::OperandVar(var, Digits::default()),
                Token::Digit(_) | Token::NegSign => {
                    let mut num = NumberBuf::new();
                    num.push(&tok);
                    MathStage::OperandNum(var, num)
                }
                other => return Err(unexpected(other, "in math operand", "CALL or a number")),
            },
            MathStage::OperandVar(var, mut digits) => match tok {
                Token::Digit(d) => {
                    digits.push(d)?;
                    MathStage::OperandVar(var, digits)
                }
                _ if digits.is_empty() => return Err(unexpected(tok, "after CALL", "a variable slot")),
                _ => {
                    let operand = Operand::VarRef(digits.value()?);
                    self.push_node(CmdNode::MathFn { op, var, operand });
                    return self.after_cmd(tok, cx);
                }
            },
            MathStage::OperandNum(var, mut num) => match num.push(&tok) {
                NumStep::Took => MathStage::OperandNum(var, num),
                NumStep::Bad(expected) => return Err(unexpected(tok, "in math operand", expected)),
                NumStep::Done(v) => {
                    self.push_node(CmdNode::MathFn {
                        op,
                        var,
                        operand: Operand::Literal(v),
                    });
                    return self.after_cmd(tok, cx);
                }
            },
        };
        self.mode = Mode::Math { op, stage: next };
        Ok(None)
    }

    fn args_done(
        &mut self,
        name: String,
        args: Vec<Arg>,
        tok: Token,
        cx: &mut Cx<'_>,
    ) -> Result<Option<ProgramEffect>, ParseError> {
        let arity = cx.arities.get(&name).cloned();
        match tok {
            Token::ParamSep if arity.as_ref().is_some_and(|a| args.len() >= *a.end()) => {
                Err(unexpected(tok, "after the last argument", "CMD_SEP or END"))
            }
            Token::ParamSep => {
                self.mode = Mode::Args {
                    name,
                    args,
                    arg: ArgState::Required,
                };
                Ok(None)
            }
            Token::CmdSep | Token::End => {
                if let Some(a) = arity.filter(|a| !a.contains(&args.len())) {
                    return Err(ParseError::Arity {
                        name,
                        min: *a.start(),
                        max: *a.end(),
                        found: args.len(),
                    });
                }
                self.push_node(CmdNode::FnCall { name, args });
                self.after_cmd(tok, cx)
            }
            other => Err(unexpected(other, "after argument", "PARAM_SEP, CMD_SEP or END")),
        }
    }

    fn after_cmd(&mut self, tok: Token, cx: &mut Cx<'_>) -> Result<Option<ProgramEffect>, ParseError> {
        match tok {
            Token::CmdSep => {
                self.mode = Mode::CmdHead { closable: true };
                Ok(None)
            }
            Token::End => self.close_frame(cx),
            other => Err(unexpected(other, "after command", "CMD_SEP or END")),
        }
    }

    fn open(&mut self, kind: FrameKind, limits: &Limits) -> Result<(), ParseError> {
        if self.frames.len() >= limits.max_depth {
            return Err(ParseError::DepthExceeded(limits.max_depth));
        }
        self.frames.push(Frame { kind, body: Vec::new() });
        self.mode = Mode::CmdHead { closable: false };
        Ok(())
    }

    fn push_node(&mut self, node: CmdNode) {
        self.frames.last_mut().expect("command outside a command set").body.push(node);
    }

    fn close_frame(&mut self, cx: &mut Cx<'_>) -> Result<Option<ProgramEffect>, ParseError> {
        let frame = self.frames.pop().expect("END with no open command set");
        if let Some(parent) = self.frames.last_mut() {
            let FrameKind::Repeat(count) = frame.kind else {
                unreachable!("function definitions only open at top level")
            };
            parent.body.push(CmdNode::Loop { count, body: frame.body });
            self.mode = Mode::AfterCmd;
            return Ok(None);
        }
        let effect = match frame.kind {
            FrameKind::Define(slot) => {
                cx.env.functions.insert(slot, frame.body);
                ProgramEffect::DefinedFunction(slot)
            }
            FrameKind::Repeat(count) => {
                let mut scratch = cx.env.clone();
                let program = [CmdNode::Loop { count, body: frame.body }];
                let commands = expand(&program, &mut scratch, cx.limits)?;
                *cx.env = scratch;
                ProgramEffect::Executed(commands)
            }
        };
        self.form_keymap = None;
        Ok(Some(effect))
    }
}

impl fmt::Display for ParseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for frame in &self.frames {
            match frame.kind {
                FrameKind::Define(s) => write!(f, "Def({s}) > ")?,
                FrameKind::Repeat(n) => write!(f, "Repeat({n}) > ")?,
            }
        }
        match &self.mode {
            Mode::TopLevel => f.write_str("TopLevel"),
            Mode::LeadInteger { lead, digits } => write!(f, "After{}({})", lead.name(), digits.0),
            Mode::SetValue { slot, num } => write!(f, "SetValue({slot}={})", num.text),
            Mode::CmdHead { .. } => f.write_str("CmdHead"),
            Mode::Args { name, args, arg } => {
                write!(f, "Args({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                match arg {
                    ArgState::Number(n) => write!(f, " {}", n.text)?,
                    ArgState::VarSlot(d) => write!(f, " ${}", d.0)?,
                    _ => {}
                }
                f.write_str(")")
            }
            Mode::CallSlot(d) => write!(f, "CallSlot({})", d.0),
            Mode::Math { op, .. } => write!(f, "MathFn({})", op.symbol()),
            Mode::AfterCmd => f.write_str("AfterCmd"),
        }
    }
}
