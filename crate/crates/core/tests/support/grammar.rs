//! Random well-formed programs with their expected effects, computed by an
//! evaluator written independently of the interpreter.

#![allow(dead_code)]

use std::collections::BTreeMap;

use afeis_core::interpreter::{ConcreteCommand, FeedOutcome, Interpreter, Number, ProgramEffect, Value};
use afeis_core::keymap::{builtin, KeymapRegistry, Token};
use afeis_core::robot::Robot;
use proptest::prelude::*;

const MAX_DEPTH: usize = 16;
const MAX_COMMANDS: usize = 10_000;
const MAX_STEPS: usize = 1_000_000;

const MOVES: [&str; 5] = ["FORWARD", "UP", "DOWN", "LEFT", "RIGHT"];

#[derive(Clone, Debug)]
pub struct Lit {
    neg: bool,
    int: u32,
    frac: Option<u32>,
}

impl Lit {
    fn text(&self) -> String {
        let mut s = String::new();
        if self.neg {
            s.push('-');
        }
        s.push_str(&self.int.to_string());
        if let Some(f) = self.frac {
            s.push('.');
            s.push_str(&f.to_string());
        }
        s
    }

    fn value(&self) -> f64 {
        self.text().parse().unwrap()
    }
}

#[derive(Clone, Debug)]
pub enum RawArg {
    Lit(Lit),
    Var(usize),
}

#[derive(Clone, Debug)]
pub enum RawCmd {
    Move(usize, RawArg),
    Snapshot,
    Call(usize),
    SetVar { set: bool, slot: u32, value: Lit },
    Math { op: usize, var: usize, operand: RawArg },
    Load { set: bool, keymap: u32 },
    Loop { count: u32, do_token: bool, trailing: bool, body: Vec<RawCmd> },
}

#[derive(Clone, Debug)]
pub enum RawForm {
    Exec { count: u32, do_token: bool, trailing: bool, body: Vec<RawCmd> },
    Def { def: bool, trailing: bool, body: Vec<RawCmd> },
    SetVar { set: bool, slot: u32, value: Lit },
    Keymap { set: bool, keymap: u32 },
}

fn lit() -> impl Strategy<Value = Lit> {
    (any::<bool>(), 0u32..100, prop::option::of(0u32..100)).prop_map(|(neg, int, frac)| Lit { neg, int, frac })
}

fn arg() -> impl Strategy<Value = RawArg> {
    prop_oneof![3 => lit().prop_map(RawArg::Lit), 1 => any::<usize>().prop_map(RawArg::Var)]
}

// variable slots start at 2 so that no slot+value digit run names a
// registered keymap (0 or 1)
fn var_slot() -> impl Strategy<Value = u32> {
    2u32..10
}

fn cmd() -> impl Strategy<Value = RawCmd> {
    let leaf = prop_oneof![
        4 => (0..MOVES.len(), arg()).prop_map(|(m, a)| RawCmd::Move(m, a)),
        1 => Just(RawCmd::Snapshot),
        1 => any::<usize>().prop_map(RawCmd::Call),
        1 => (any::<bool>(), var_slot(), lit()).prop_map(|(set, slot, value)| RawCmd::SetVar { set, slot, value }),
        1 => (0usize..4, any::<usize>(), arg()).prop_map(|(op, var, operand)| RawCmd::Math { op, var, operand }),
        1 => (any::<bool>(), 0u32..2).prop_map(|(set, keymap)| RawCmd::Load { set, keymap }),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        (0u32..3, any::<bool>(), any::<bool>(), prop::collection::vec(inner, 1..4)).prop_map(
            |(count, do_token, trailing, body)| RawCmd::Loop {
                count,
                do_token,
                trailing,
                body,
            },
        )
    })
}

fn body() -> impl Strategy<Value = Vec<RawCmd>> {
    prop::collection::vec(cmd(), 1..5)
}

fn form() -> impl Strategy<Value = RawForm> {
    prop_oneof![
        4 => (0u32..4, any::<bool>(), any::<bool>(), body()).prop_map(|(count, do_token, trailing, body)| RawForm::Exec {
            count,
            do_token,
            trailing,
            body
        }),
        2 => (any::<bool>(), any::<bool>(), body()).prop_map(|(def, trailing, body)| RawForm::Def { def, trailing, body }),
        2 => (any::<bool>(), var_slot(), lit()).prop_map(|(set, slot, value)| RawForm::SetVar { set, slot, value }),
        1 => (any::<bool>(), 0u32..2).prop_map(|(set, keymap)| RawForm::Keymap { set, keymap }),
    ]
}

/// Evaluator view of a recorded command.
#[derive(Clone, Debug)]
enum Node {
    Cmd(String, Vec<Operand>),
    Call(u32),
    Set(u32, f64),
    Math(usize, u32, Operand),
    Loop(u32, Vec<Node>),
}

#[derive(Clone, Debug)]
enum Operand {
    Lit(f64),
    Var(u32),
}

#[derive(Clone, Debug, Default)]
struct Env {
    fns: BTreeMap<u32, Vec<Node>>,
    vars: BTreeMap<u32, f64>,
}

struct Eval<'a> {
    env: &'a mut Env,
    out: Vec<ConcreteCommand>,
    steps: usize,
}

impl Eval<'_> {
    fn run(&mut self, body: &[Node], depth: usize) -> Result<(), String> {
        if depth > MAX_DEPTH {
            return Err("depth".into());
        }
        for n in body {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err("steps".into());
            }
            match n {
                Node::Cmd(name, ops) => {
                    let args = ops.iter().map(|o| Value::Number(Number::new(self.operand(o)))).collect();
                    if self.out.len() >= MAX_COMMANDS {
                        return Err("commands".into());
                    }
                    self.out.push(ConcreteCommand { name: name.clone(), args });
                }
                Node::Call(slot) => {
                    let callee = self.env.fns[slot].clone();
                    self.run(&callee, depth + 1)?;
                }
                Node::Set(slot, v) => {
                    self.env.vars.insert(*slot, *v);
                }
                Node::Math(op, var, operand) => {
                    let a = self.env.vars[var];
                    let b = self.operand(operand);
                    let r = match op {
                        0 => a + b,
                        1 => a - b,
                        2 => a * b,
                        _ => a / b,
                    };
                    self.env.vars.insert(*var, r);
                }
                Node::Loop(count, body) => {
                    for _ in 0..*count {
                        self.run(body, depth + 1)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn operand(&self, o: &Operand) -> f64 {
        match o {
            Operand::Lit(v) => *v,
            Operand::Var(s) => self.env.vars[s],
        }
    }
}

/// One top-level form: its tokens, which of them a structural deletion
/// may remove, and the effect it must produce.
#[derive(Clone, Debug)]
pub struct Form {
    pub tokens: Vec<Token>,
    pub deletable: Vec<usize>,
    pub expected: ProgramEffect,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub forms: Vec<Form>,
}

impl Program {
    pub fn tokens(&self) -> Vec<Token> {
        self.forms.iter().flat_map(|f| f.tokens.iter().cloned()).collect()
    }

    pub fn expected(&self) -> Vec<ProgramEffect> {
        self.forms.iter().map(|f| f.expected.clone()).collect()
    }
}

struct Builder<'a> {
    tokens: Vec<Token>,
    deletable: Vec<usize>,
    env: &'a Env,
    /// Variables known to exist whenever a body can run.
    vars: &'a [u32],
}

fn digits(n: u32) -> Vec<Token> {
    n.to_string().bytes().map(|b| Token::Digit(b - b'0')).collect()
}

fn lit_tokens(l: &Lit) -> Vec<Token> {
    l.text()
        .chars()
        .map(|c| match c {
            '-' => Token::NegSign,
            '.' => Token::DecimalPoint,
            d => Token::Digit(d as u8 - b'0'),
        })
        .collect()
}

impl Builder<'_> {
    /// Structural tokens are deletable unless `optional`.
    fn push(&mut self, t: Token, optional: bool) {
        if !optional && is_structural(&t) {
            self.deletable.push(self.tokens.len());
        }
        self.tokens.push(t);
    }

    fn extend(&mut self, ts: Vec<Token>) {
        for t in ts {
            self.push(t, false);
        }
    }

    fn lead(&mut self, alt: bool, alt_token: Token) {
        self.push(if alt { alt_token } else { Token::Begin }, false);
    }

    fn arg(&mut self, a: &RawArg) -> Operand {
        match a {
            RawArg::Var(i) if !self.vars.is_empty() => {
                let slot = self.vars[i % self.vars.len()];
                // dropping CALL here leaves `<slot>`, a valid literal
                self.push(Token::Call, true);
                self.extend(digits(slot));
                Operand::Var(slot)
            }
            RawArg::Var(i) => {
                let l = Lit {
                    neg: false,
                    int: (*i % 10) as u32,
                    frac: None,
                };
                self.extend(lit_tokens(&l));
                Operand::Lit(l.value())
            }
            RawArg::Lit(l) => {
                self.extend(lit_tokens(l));
                Operand::Lit(l.value())
            }
        }
    }

    /// Emits a command set and its END, returning the recorded nodes.
    fn cmdset(&mut self, body: &[RawCmd], trailing: bool) -> Vec<Node> {
        let mut nodes = Vec::new();
        let mut after_set_load = None;
        for (i, c) in body.iter().enumerate() {
            let start = self.tokens.len();
            let set_load = self.cmd(c, &mut nodes);
            // `SET k <FN ...>` loads and reads the command directly, so the
            // separator after such a load may go
            if let Some(sep) = after_set_load.take() {
                if matches!(self.tokens[start], Token::Fn(_)) {
                    self.deletable.retain(|&d| d != sep);
                }
            }
            if i + 1 < body.len() {
                if set_load {
                    after_set_load = Some(self.tokens.len());
                }
                self.push(Token::CmdSep, false);
            } else if trailing {
                self.push(Token::CmdSep, true);
            }
        }
        self.push(Token::End, false);
        nodes
    }

    /// Returns true for `SET k` keymap loads.
    fn cmd(&mut self, c: &RawCmd, nodes: &mut Vec<Node>) -> bool {
        match c {
            RawCmd::Move(m, a) => {
                self.push(Token::Fn(MOVES[*m].into()), false);
                let op = self.arg(a);
                nodes.push(Node::Cmd(MOVES[*m].into(), vec![op]));
            }
            RawCmd::Snapshot => {
                self.push(Token::Fn("SNAPSHOT".into()), false);
                nodes.push(Node::Cmd("SNAPSHOT".into(), vec![]));
            }
            RawCmd::Call(i) => {
                let fns: Vec<u32> = self.env.fns.keys().copied().collect();
                if fns.is_empty() {
                    return self.cmd(&RawCmd::Snapshot, nodes);
                }
                let slot = fns[i % fns.len()];
                self.push(Token::Call, false);
                self.extend(digits(slot));
                nodes.push(Node::Call(slot));
            }
            RawCmd::SetVar { set, slot, value } => {
                self.lead(*set, Token::Set);
                self.extend(digits(*slot));
                self.push(Token::ParamSep, false);
                self.extend(lit_tokens(value));
                nodes.push(Node::Set(*slot, value.value()));
            }
            RawCmd::Math { op, var, operand } => {
                if self.vars.is_empty() {
                    return self.cmd(&RawCmd::Snapshot, nodes);
                }
                let slot = self.vars[var % self.vars.len()];
                let mut op = *op;
                let name = ["ADD", "SUB", "MUL", "DIV"];
                self.push(Token::Fn(String::new()), false);
                let fn_at = self.tokens.len() - 1;
                self.push(Token::Call, false);
                self.extend(digits(slot));
                self.push(Token::ParamSep, false);
                let rhs = match operand {
                    // dividing by a variable could divide by zero
                    RawArg::Var(_) if op == 3 => {
                        op = 2;
                        self.arg(operand)
                    }
                    RawArg::Lit(l) if op == 3 && l.value() == 0.0 => {
                        op = 0;
                        self.arg(operand)
                    }
                    _ => self.arg(operand),
                };
                self.tokens[fn_at] = Token::Fn(name[op].into());
                nodes.push(Node::Math(op, slot, rhs));
            }
            RawCmd::Load { set, keymap } => {
                self.lead(*set, Token::Set);
                self.extend(digits(*keymap));
                return *set;
            }
            RawCmd::Loop {
                count,
                do_token,
                trailing,
                body,
            } => {
                self.push(Token::Begin, false);
                self.extend(digits(*count));
                self.lead(*do_token, Token::Do);
                let inner = self.cmdset(body, *trailing);
                nodes.push(Node::Loop(*count, inner));
            }
        }
        false
    }
}

pub fn is_structural(t: &Token) -> bool {
    matches!(
        t,
        Token::Begin | Token::End | Token::Do | Token::Def | Token::Set | Token::CmdSep | Token::ParamSep | Token::Call
    )
}

/// Builds forms in order; `None` if some form would exceed the expansion
/// limits.
fn assemble(raw: Vec<RawForm>) -> Option<Program> {
    let mut env = Env::default();
    let mut vars: Vec<u32> = Vec::new();
    let mut forms = Vec::new();
    for f in raw {
        let mut b = Builder {
            tokens: Vec::new(),
            deletable: Vec::new(),
            env: &env,
            vars: &vars,
        };
        let expected = match &f {
            RawForm::Exec {
                count,
                do_token,
                trailing,
                body,
            } => {
                b.push(Token::Begin, false);
                b.extend(digits(*count));
                b.lead(*do_token, Token::Do);
                let nodes = b.cmdset(body, *trailing);
                let mut scratch = env.clone();
                let mut ev = Eval {
                    env: &mut scratch,
                    out: Vec::new(),
                    steps: 0,
                };
                ev.run(&[Node::Loop(*count, nodes)], 0).ok()?;
                let out = ev.out;
                forms.push(Form {
                    tokens: b.tokens,
                    deletable: b.deletable,
                    expected: ProgramEffect::Executed(out),
                });
                env = scratch;
                continue;
            }
            RawForm::Def { def, trailing, body } => {
                let slot = env.fns.len() as u32 + 1;
                b.lead(*def, Token::Def);
                b.extend(digits(slot));
                b.push(Token::CmdSep, false);
                let nodes = b.cmdset(body, *trailing);
                forms.push(Form {
                    tokens: b.tokens,
                    deletable: b.deletable,
                    expected: ProgramEffect::DefinedFunction(slot),
                });
                env.fns.insert(slot, nodes);
                continue;
            }
            RawForm::SetVar { set, slot, value } => {
                b.lead(*set, Token::Set);
                b.extend(digits(*slot));
                b.push(Token::ParamSep, false);
                b.extend(lit_tokens(value));
                b.push(Token::End, false);
                ProgramEffect::VariableSet(*slot, Number::new(value.value()))
            }
            RawForm::Keymap { set, keymap } => {
                b.lead(*set, Token::Set);
                b.extend(digits(*keymap));
                b.push(Token::End, false);
                ProgramEffect::KeymapChanged(*keymap)
            }
        };
        forms.push(Form {
            tokens: b.tokens,
            deletable: b.deletable,
            expected: expected.clone(),
        });
        if let ProgramEffect::VariableSet(slot, v) = expected {
            env.vars.insert(slot, v.value());
            if !vars.contains(&slot) {
                vars.push(slot);
            }
        }
    }
    Some(Program { forms })
}

pub fn program() -> impl Strategy<Value = Program> {
    prop::collection::vec(form(), 1..5)
        .prop_map(assemble)
        .prop_filter("expansion limits", |p| p.is_some())
        .prop_map(Option::unwrap)
}

pub fn registry() -> KeymapRegistry {
    let mut r = KeymapRegistry::new(builtin::tasks());
    r.register(1, builtin::right());
    r
}

/// A parser over [`registry`] that knows the robot's argument counts.
pub fn interpreter() -> Interpreter {
    Interpreter::new(registry()).with_arities(Robot::default().arities())
}

/// The program parses to exactly its expected effects.
pub fn check_well_formed(p: &Program) -> Result<(), String> {
    let mut interp = interpreter();
    let got = interp.parse_script(p.tokens()).map_err(|e| format!("parse error: {e}"))?;
    if got != p.expected() {
        return Err(format!("effects differ:\n got {got:?}\nwant {:?}", p.expected()));
    }
    Ok(())
}

/// Removes each deletable token of each form in turn. The damaged form must
/// end in a parse error before completing any form. Returns the number of
/// deletions tried.
pub fn check_deletions(p: &Program) -> Result<usize, String> {
    let mut tried = 0;
    for (fi, form) in p.forms.iter().enumerate() {
        for &del in &form.deletable {
            tried += 1;
            let mut interp = interpreter();
            for f in &p.forms[..fi] {
                for t in &f.tokens {
                    interp.feed_token(t.clone());
                }
            }
            let mut failed = false;
            for (i, t) in form.tokens.iter().enumerate() {
                if i == del {
                    continue;
                }
                match interp.feed_token(t.clone()) {
                    FeedOutcome::ParseError(_) => {
                        failed = true;
                        break;
                    }
                    FeedOutcome::FormCompleted(e) => {
                        return Err(format!(
                            "deleting {} at {del} of form {fi} still completed {e}\nform: {}",
                            form.tokens[del],
                            render(&form.tokens)
                        ));
                    }
                    _ => {}
                }
            }
            if !failed && interp.finish().is_ok() {
                return Err(format!(
                    "deleting {} at {del} of form {fi} left a complete parse\nform: {}",
                    form.tokens[del],
                    render(&form.tokens)
                ));
            }
        }
    }
    Ok(tried)
}

pub fn render(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}
