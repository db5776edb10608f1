//! Batch runner for gesture scripts and recorded frame streams.

use std::fmt;
use std::fmt::Write as _;

use afeis_core::confirmer::parse_frames;
use afeis_core::robot::RobotState;
use afeis_core::session::Session;

use crate::Exit;

/// A word of a script and where it starts (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word<'a> {
    pub text: &'a str,
    pub line: usize,
    pub col: usize,
}

/// Splits a script into words; `#` starts a comment running to end of line.
pub fn words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("");
        let mut rest = code;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
            let byte = offset + start;
            out.push(Word {
                text: &tail[..len],
                line: i + 1,
                col: code[..byte].chars().count() + 1,
            });
            offset = byte + len;
            rest = &code[offset..];
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// The session's effect log, errors included.
    pub effects: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub state: RobotState,
}

impl Report {
    pub fn exit(&self) -> Exit {
        if self.diagnostics.is_empty() {
            Exit::Ok
        } else {
            Exit::Invalid
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.effects {
            let _ = writeln!(s, "effect: {e}");
        }
        let _ = writeln!(s, "{}", state_line(&self.state));
        for snap in &self.state.snapshots {
            let _ = writeln!(s, "  snapshot {}: {} t={}s", snap.seq, snap.pose, snap.clock);
        }
        s
    }
}

pub fn state_line(state: &RobotState) -> String {
    format!(
        "robot: {} clock={}s snapshots={}",
        state.pose,
        state.clock,
        state.snapshots.len()
    )
}

/// Feeds each word as a confirmed gesture. Stops at the first word that is
/// not a gesture; parse errors are reported where the failing gesture sits
/// and feeding continues after them.
pub fn run_script(session: &mut Session, text: &str) -> Report {
    let mut diagnostics = Vec::new();
    let mut form_start = None;
    for w in words(text) {
        let g = match session.lookup(w.text) {
            Ok(g) => g,
            Err(message) => {
                diagnostics.push(Diagnostic {
                    line: w.line,
                    col: w.col,
                    message,
                });
                return finish(session, diagnostics, None);
            }
        };
        let was_open = session.is_mid_form();
        let logged = session.effect_log().len();
        session.feed(g);
        if !was_open && session.is_mid_form() {
            form_start = Some((w.line, w.col));
        }
        collect(session, logged, (w.line, w.col), &mut diagnostics);
    }
    finish(session, diagnostics, form_start)
}

/// Pushes a recorded `timestamp_ms,gesture` stream through the confirmer.
pub fn run_frames(session: &mut Session, text: &str) -> Report {
    let mut diagnostics = Vec::new();
    let frames = match parse_frames(text) {
        Ok(f) => f,
        Err(e) => {
            diagnostics.push(Diagnostic {
                line: e.line,
                col: 1,
                message: e.message,
            });
            return finish(session, diagnostics, None);
        }
    };
    let lines: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.split('#').next().unwrap_or("").trim().is_empty())
        .map(|(i, _)| i + 1)
        .collect();
    let mut form_start = None;
    for (frame, &line) in frames.into_iter().zip(&lines) {
        let was_open = session.is_mid_form();
        let logged = session.effect_log().len();
        if let Err(e) = session.push_frame(frame) {
            diagnostics.push(Diagnostic {
                line,
                col: 1,
                message: e.to_string(),
            });
            return finish(session, diagnostics, None);
        }
        if !was_open && session.is_mid_form() {
            form_start = Some((line, 1));
        }
        collect(session, logged, (line, 1), &mut diagnostics);
    }
    finish(session, diagnostics, form_start)
}

fn collect(session: &Session, from: usize, at: (usize, usize), out: &mut Vec<Diagnostic>) {
    for entry in &session.effect_log()[from..] {
        if entry.starts_with("ParseError") || entry.starts_with("RobotError") {
            out.push(Diagnostic {
                line: at.0,
                col: at.1,
                message: entry.clone(),
            });
        }
    }
}

fn finish(
    session: &mut Session,
    mut diagnostics: Vec<Diagnostic>,
    form_start: Option<(usize, usize)>,
) -> Report {
    let open = session.is_mid_form();
    if let Some(err) = session.finish() {
        let (line, col) = form_start.filter(|_| open).unwrap_or((1, 1));
        diagnostics.push(Diagnostic {
            line,
            col,
            message: format!("form started here is not closed: {err}"),
        });
    }
    Report {
        effects: session.effect_log().to_vec(),
        diagnostics,
        state: session.robot().state().clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use afeis_core::config::SessionConfig;

    fn session() -> Session {
        SessionConfig::default().build().unwrap()
    }

    #[test]
    fn words_with_positions() {
        let w = words("A 1  # comment 2\n\n  D\tB");
        let got: Vec<_> = w.iter().map(|w| (w.text, w.line, w.col)).collect();
        assert_eq!(got, [("A", 1, 1), ("1", 1, 3), ("D", 3, 3), ("B", 3, 5)]);
    }

    #[test]
    fn worked_example_script() {
        let mut s = session();
        let r = run_script(
            &mut s,
            "# dive three meters\nA 1 D A 1 D 1 1 D 2 D A 0 B\nA 3 A C 1 B\n",
        );
        assert_eq!(r.exit(), Exit::Ok);
        assert_eq!(r.effects.len(), 2);
        assert_eq!(r.state.pose.depth, 3.0);
        assert!(r.render().contains("snapshots=3"));
    }

    #[test]
    fn empty_script() {
        let r = run_script(&mut session(), "# nothing\n");
        assert_eq!(r.exit(), Exit::Ok);
        assert!(r.effects.is_empty());
    }

    #[test]
    fn missing_end_points_at_form_start() {
        let r = run_script(&mut session(), "A 1 A 0 2 B\n\n  A 1 A 0 2\n");
        assert_eq!(r.exit(), Exit::Invalid);
        let d = &r.diagnostics[0];
        assert_eq!((d.line, d.col), (3, 3));
        assert!(d.message.contains("not closed"), "{d}");
    }

    #[test]
    fn unknown_word_and_parse_error() {
        let r = run_script(&mut session(), "A Z");
        assert_eq!(r.diagnostics[0].to_string(), "1:3: unknown gesture `Z`");
        let r = run_script(&mut session(), "B A 1 A 0 2 B");
        assert_eq!(r.exit(), Exit::Invalid);
        assert_eq!((r.diagnostics[0].line, r.diagnostics[0].col), (1, 1));
    }

    #[test]
    fn frames_file() {
        let s = session();
        let mut text = String::new();
        let mut t = 0;
        for w in "A 1 A 0 2 B".split_whitespace() {
            let g = s.lookup(w).unwrap();
            for _ in 0..20 {
                text.push_str(&format!("{t},{g}\n"));
                t += 50;
            }
            for _ in 0..20 {
                text.push_str(&format!("{t},49\n"));
                t += 50;
            }
        }
        let r = run_frames(&mut session(), &text);
        assert_eq!(r.exit(), Exit::Ok, "{:?}", r.diagnostics);
        assert_eq!(r.effects, run_script(&mut session(), "A 1 A 0 2 B").effects);
        assert_eq!(r.effects, ["Executed([FORWARD 2])"]);

        let r = run_frames(&mut session(), "0,1\nbad\n");
        assert_eq!(r.diagnostics[0].line, 2);
    }
}
