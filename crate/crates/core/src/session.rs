//! The live pipeline: frames through the confirmer, gestures through the
//! interpreter, effects into the robot.

use crate::confirmer::{AcceptedGesture, Confirmer, ConfirmerConfig, GestureFrame, StreamError};
use crate::interpreter::{FeedOutcome, Interpreter, ParseError, ProgramEffect, TraceLine};
use crate::keymap::{GestureId, KeymapRegistry, Token, GESTURE_COUNT};
use crate::robot::{Robot, RobotError, RobotState};

/// Everything the pipeline reports, in the order it happened.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    WindowCounts {
        counts: [u32; GESTURE_COUNT],
        frames: usize,
        threshold: u32,
    },
    Accepted(AcceptedGesture),
    Token {
        gesture: Option<GestureId>,
        token: Token,
    },
    Parse {
        before: String,
        after: String,
        outcome: FeedOutcome,
    },
    Effect(ProgramEffect),
    Robot(RobotState),
    RobotError(RobotError),
    KeymapChanged(u32),
}

#[derive(Debug)]
pub struct Session {
    interpreter: Interpreter,
    confirmer: Confirmer,
    robot: Robot,
    log: Vec<String>,
}

impl Session {
    pub fn new(registry: KeymapRegistry, confirmer: ConfirmerConfig, robot: Robot) -> Self {
        Session {
            interpreter: Interpreter::new(registry).with_arities(robot.arities()),
            confirmer: Confirmer::new(confirmer),
            robot,
            log: Vec::new(),
        }
    }

    pub fn interpreter(&self) -> &Interpreter {
        &self.interpreter
    }

    pub fn confirmer(&self) -> &Confirmer {
        &self.confirmer
    }

    pub fn robot(&self) -> &Robot {
        &self.robot
    }

    pub fn registry(&self) -> &KeymapRegistry {
        self.interpreter.registry()
    }

    /// Effects and errors as text, one entry per completed or failed form.
    pub fn effect_log(&self) -> &[String] {
        &self.log
    }

    pub fn is_mid_form(&self) -> bool {
        self.interpreter.is_mid_form()
    }

    /// Reads a gesture typed as an ID or an alias.
    pub fn lookup(&self, word: &str) -> Result<GestureId, String> {
        if let Ok(n) = word.parse::<i64>() {
            return u32::try_from(n)
                .ok()
                .and_then(|n| GestureId::new(n).ok())
                .ok_or_else(|| format!("gesture {n} out of range 0..=49"));
        }
        self.registry()
            .alias(word)
            .ok_or_else(|| format!("unknown gesture `{word}`"))
    }

    pub fn reset(&mut self) {
        self.interpreter.reset();
        self.confirmer.reset();
        self.robot.reset();
        self.log.clear();
    }

    pub fn window_counts(&self) -> Event {
        let w = self.confirmer.window();
        Event::WindowCounts {
            counts: *w.counts(),
            frames: w.len(),
            threshold: self.confirmer.config().threshold,
        }
    }

    pub fn push_frame(&mut self, frame: GestureFrame) -> Result<Vec<Event>, StreamError> {
        let accepted = self.confirmer.push(frame)?;
        let mut events = vec![self.window_counts()];
        if let Some(a) = accepted {
            events.push(Event::Accepted(a));
            events.extend(self.feed(a.gesture));
        }
        Ok(events)
    }

    /// Feeds an already-confirmed gesture.
    pub fn feed(&mut self, g: GestureId) -> Vec<Event> {
        let before = self.registry().active_index();
        let line = self.interpreter.feed_traced(g);
        self.after(line, before)
    }

    pub fn feed_token(&mut self, token: Token) -> Vec<Event> {
        let before = self.registry().active_index();
        let line = self.interpreter.feed_token_traced(token);
        self.after(line, before)
    }

    /// Ends input; a form left open is discarded and logged.
    pub fn finish(&mut self) -> Option<ParseError> {
        let err = self.interpreter.finish().err()?;
        self.log.push(format!("ParseError: {err}"));
        Some(err)
    }

    fn after(&mut self, line: TraceLine, keymap_before: u32) -> Vec<Event> {
        let mut events = vec![
            Event::Token {
                gesture: line.gesture,
                token: line.token,
            },
            Event::Parse {
                before: line.before,
                after: line.after,
                outcome: line.outcome.clone(),
            },
        ];
        match line.outcome {
            FeedOutcome::FormCompleted(effect) => {
                self.log.push(effect.to_string());
                events.push(Event::Effect(effect.clone()));
                if let ProgramEffect::Executed(cmds) = effect {
                    let run = self.robot.deliver(&cmds).and_then(|_| self.robot.execute());
                    if let Err(e) = run {
                        self.log.push(format!("RobotError: {e}"));
                        events.push(Event::RobotError(e));
                    }
                    events.push(Event::Robot(self.robot.state().clone()));
                }
            }
            FeedOutcome::ParseError(e) => self.log.push(format!("ParseError: {e}")),
            FeedOutcome::Consumed | FeedOutcome::Ignored => {}
        }
        let now = self.registry().active_index();
        if now != keymap_before {
            events.push(Event::KeymapChanged(now));
        }
        events
    }
}
