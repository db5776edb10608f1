//! Exhaustive search for gesture sequences that produce given effects.

use std::collections::BTreeSet;

use afeis_core::interpreter::{FeedOutcome, Interpreter, ProgramEffect};
use afeis_core::keymap::{GestureId, Position, Token};
use afeis_core::stream_sim::TaskSpec;

/// Gestures bound to something in at least one keymap. Unbound ones are
/// ignored wherever they appear, so they never shorten a sequence.
pub fn alphabet(task: &TaskSpec) -> Vec<GestureId> {
    GestureId::all()
        .filter(|&g| {
            task.registry.indices().any(|k| {
                let km = task.registry.get(k).unwrap();
                [Position::Fn, Position::Param].iter().any(|&p| km.resolve(g, p) != Token::Empty)
            })
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct Search {
    pub found: Option<Vec<GestureId>>,
    pub nodes: u64,
}

struct Walk<'a> {
    target: &'a [ProgramEffect],
    alphabet: Vec<GestureId>,
    max_len: usize,
    path: Vec<GestureId>,
    // FN names fed so far
    named: Vec<String>,
    out: Search,
}

/// Depth-first search over every sequence of at most `max_len` gestures,
/// pruned at parse errors, at effects that stray from `target`, and where
/// the budget left cannot close the open form or name every command still
/// owed. A command name only reaches the output through an FN token.
pub fn find_sequence(task: &TaskSpec, target: &[ProgramEffect], max_len: usize) -> Search {
    let mut w = Walk {
        target,
        alphabet: alphabet(task),
        max_len,
        path: Vec::new(),
        named: Vec::new(),
        out: Search::default(),
    };
    w.walk(&Interpreter::new(task.registry.clone()), 0);
    w.out
}

impl Walk<'_> {
    fn missing(&self, done: usize) -> usize {
        let owed: BTreeSet<&str> = self.target[done..]
            .iter()
            .filter_map(|e| match e {
                ProgramEffect::Executed(cmds) => Some(cmds.iter().map(|c| c.name.as_str())),
                _ => None,
            })
            .flatten()
            .collect();
        owed.iter().filter(|n| !self.named.iter().any(|m| m == *n)).count()
    }

    fn need(&self, interp: &Interpreter, done: usize) -> usize {
        let st = interp.state();
        let missing = self.missing(done);
        if !interp.is_mid_form() {
            // BEGIN and END around whatever is left
            return if done < self.target.len() { 2 + missing } else { 0 };
        }
        st.min_to_close().max(st.depth() + missing)
    }

    fn walk(&mut self, interp: &Interpreter, done: usize) {
        if self.out.found.is_some() || self.path.len() == self.max_len {
            return;
        }
        let left = self.max_len - self.path.len();
        let st = interp.state();
        // exactly enough budget to close every open set: only END helps
        let closing = st.depth() > 0 && left == st.depth() && self.need(interp, done) == left;
        for i in 0..self.alphabet.len() {
            let g = self.alphabet[i];
            let token = interp.resolve(g);
            if closing && token != Token::End {
                continue;
            }
            let mut next = interp.clone();
            self.out.nodes += 1;
            let done = match next.feed(g) {
                FeedOutcome::ParseError(_) | FeedOutcome::Ignored => continue,
                FeedOutcome::Consumed => done,
                FeedOutcome::FormCompleted(e) => {
                    if self.target.get(done) != Some(&e) {
                        continue;
                    }
                    done + 1
                }
            };
            self.path.push(g);
            let named = matches!(&token, Token::Fn(_));
            if let Token::Fn(n) = token {
                self.named.push(n);
            }
            if done == self.target.len() && !next.is_mid_form() {
                self.out.found = Some(self.path.clone());
                return;
            }
            if self.need(&next, done) < left {
                self.walk(&next, done);
            }
            if named {
                self.named.pop();
            }
            self.path.pop();
        }
    }
}
