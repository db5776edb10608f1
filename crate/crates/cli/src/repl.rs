//! Line-oriented interactive loop over one session.

use std::io::{self, BufRead, Write};

use afeis_core::session::{Event, Session};

use crate::script::state_line;

const HELP: &str = "\
gesture IDs (0-49) or alias letters, several per line allowed
:trace   toggle the full feed trace
:state   robot pose and snapshots
:env     defined functions and variables
:keymap  active keymap bindings
:reset   clear robot, environment and parser
:quit    leave";

pub struct Repl {
    session: Session,
    trace: bool,
}

impl Repl {
    pub fn new(session: Session) -> Self {
        Repl {
            session,
            trace: false,
        }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn into_session(self) -> Session {
        self.session
    }

    /// Reads lines until `:quit` or end of input, then closes any open form.
    pub fn run<R: BufRead, W: Write>(&mut self, input: R, mut out: W, prompt: bool) -> io::Result<()> {
        if prompt {
            write!(out, "> ")?;
            out.flush()?;
        }
        for line in input.lines() {
            if !self.line(&line?, &mut out)? {
                break;
            }
            if prompt {
                write!(out, "> ")?;
                out.flush()?;
            }
        }
        let logged = self.session.effect_log().len();
        self.session.finish();
        for e in &self.session.effect_log()[logged..] {
            writeln!(out, "effect: {e}")?;
        }
        Ok(())
    }

    /// Handles one input line; false means quit.
    pub fn line<W: Write>(&mut self, line: &str, out: &mut W) -> io::Result<bool> {
        let line = line.split('#').next().unwrap_or("").trim();
        match line {
            "" => {}
            ":quit" | ":q" => return Ok(false),
            ":help" => writeln!(out, "{HELP}")?,
            ":trace" => {
                self.trace = !self.trace;
                writeln!(out, "trace {}", if self.trace { "on" } else { "off" })?;
            }
            ":state" => self.state(out)?,
            ":env" => self.env(out)?,
            ":keymap" => {
                let reg = self.session.registry();
                writeln!(out, "keymap {}", reg.active_index())?;
                write!(out, "{}", reg.active().to_ini())?;
            }
            ":reset" => {
                self.session.reset();
                writeln!(out, "reset")?;
            }
            cmd if cmd.starts_with(':') => writeln!(out, "error: unknown command {cmd}; try :help")?,
            words => {
                for w in words.split_whitespace() {
                    self.word(w, out)?;
                }
            }
        }
        Ok(true)
    }

    fn word<W: Write>(&mut self, w: &str, out: &mut W) -> io::Result<()> {
        let g = match self.session.lookup(w) {
            Ok(g) => g,
            Err(e) => return writeln!(out, "error: {e}"),
        };
        let logged = self.session.effect_log().len();
        let mut token = None;
        let mut keymap = None;
        for e in self.session.feed(g) {
            match e {
                Event::Token { token: t, .. } => token = Some(t),
                Event::Parse {
                    before,
                    after,
                    outcome,
                } => {
                    let Some(t) = &token else { continue };
                    if self.trace {
                        writeln!(out, "[{g:>2}] {t} | {before} -> {after} | {outcome}")?;
                    } else {
                        let text = t.text().map(|x| format!(" {x}")).unwrap_or_default();
                        writeln!(out, "{}{text} / {}", t.kind(), outcome.label())?;
                    }
                }
                Event::KeymapChanged(k) => keymap = Some(k),
                _ => {}
            }
        }
        let mut ran = false;
        for e in &self.session.effect_log()[logged..] {
            writeln!(out, "effect: {e}")?;
            ran |= e.starts_with("Executed");
        }
        if ran {
            writeln!(out, "{}", state_line(self.session.robot().state()))?;
        }
        if let Some(k) = keymap {
            writeln!(out, "keymap: {k}")?;
        }
        Ok(())
    }

    fn state<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let state = self.session.robot().state();
        writeln!(out, "{}", state_line(state))?;
        for s in &state.snapshots {
            writeln!(out, "  snapshot {}: {} t={}s", s.seq, s.pose, s.clock)?;
        }
        writeln!(out, "parser: {}", self.session.interpreter().state())
    }

    fn env<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let env = self.session.interpreter().env();
        if env.functions.is_empty() && env.variables.is_empty() {
            return writeln!(out, "environment empty");
        }
        for (slot, body) in &env.functions {
            let body: Vec<_> = body.iter().map(|c| c.to_string()).collect();
            writeln!(out, "fn {slot}: {}", body.join(", "))?;
        }
        for (slot, value) in &env.variables {
            writeln!(out, "var {slot} = {value}")?;
        }
        Ok(())
    }
}
