//! Incremental interpreter: gestures in, program effects out.

pub mod ast;
pub mod expand;
pub mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;

pub use ast::{
    Arg, CmdNode, CommandList, ConcreteCommand, Environment, MathOp, Number, Operand, ProgramEffect, Slot, Value,
};
pub use expand::{expand, ExpandError, Limits};
pub use parser::{ParseError, ParseState};

use crate::keymap::{GestureId, KeymapRegistry, Position, Token};
use parser::Cx;

/// Result of feeding one gesture or token.
#[derive(Clone, Debug, PartialEq)]
pub enum FeedOutcome {
    Consumed,
    /// The gesture has no definition where it appeared.
    Ignored,
    FormCompleted(ProgramEffect),
    /// The partial form was discarded; the environment is untouched.
    ParseError(ParseError),
}

impl FeedOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            FeedOutcome::Consumed => "Consumed",
            FeedOutcome::Ignored => "Ignored",
            FeedOutcome::FormCompleted(_) => "FormCompleted",
            FeedOutcome::ParseError(_) => "ParseError",
        }
    }
}

impl fmt::Display for FeedOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeedOutcome::FormCompleted(e) => write!(f, "FormCompleted {e}"),
            FeedOutcome::ParseError(e) => write!(f, "ParseError: {e}"),
            other => f.write_str(other.label()),
        }
    }
}

/// One line of the feed trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceLine {
    pub gesture: Option<GestureId>,
    pub token: Token,
    pub before: String,
    pub after: String,
    pub outcome: FeedOutcome,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(g) = self.gesture {
            write!(f, "[{g:>2}] ")?;
        }
        write!(f, "{} | {} -> {} | {}", self.token, self.before, self.after, self.outcome)
    }
}

/// Accepted argument counts per FN name. Names not listed are unchecked.
pub type Arities = BTreeMap<String, RangeInclusive<usize>>;

/// One operator session's parser, environment and keymaps.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpreter {
    state: ParseState,
    env: Environment,
    registry: KeymapRegistry,
    limits: Limits,
    arities: Arities,
}

impl Interpreter {
    pub fn new(registry: KeymapRegistry) -> Self {
        Self::with_limits(registry, Limits::default())
    }

    pub fn with_limits(registry: KeymapRegistry, limits: Limits) -> Self {
        Interpreter {
            state: ParseState::default(),
            env: Environment::new(),
            registry,
            limits,
            arities: Arities::new(),
        }
    }

    /// Checks argument counts while parsing, so a command given too many or
    /// too few arguments fails at the gesture that shows it.
    pub fn with_arities(mut self, arities: Arities) -> Self {
        self.arities = arities;
        self
    }

    pub fn arities(&self) -> &Arities {
        &self.arities
    }

    pub fn state(&self) -> &ParseState {
        &self.state
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut Environment {
        &mut self.env
    }

    pub fn registry(&self) -> &KeymapRegistry {
        &self.registry
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    /// Table the next gesture will be looked up in.
    pub fn position(&self) -> Position {
        self.state.position()
    }

    pub fn is_mid_form(&self) -> bool {
        !self.state.is_top_level()
    }

    /// Clears the environment and partial form and returns to keymap 0.
    pub fn reset(&mut self) {
        self.state = ParseState::default();
        self.env.clear();
        let _ = self.registry.activate(0);
    }

    /// Resolves `g` under the active keymap at the current position.
    pub fn resolve(&self, g: GestureId) -> Token {
        let token = self.registry.resolve(g, self.state.position());
        if token != Token::Empty {
            return token;
        }
        // `SET n` followed directly by a command: the gesture may only have
        // an FN meaning, and only under the keymap about to be loaded
        if let Some(k) = self.state.pending_keymap_load().and_then(|n| self.registry.get(n)) {
            if let t @ Token::Fn(_) = k.resolve(g, Position::Fn) {
                return t;
            }
        }
        Token::Empty
    }

    pub fn feed(&mut self, g: GestureId) -> FeedOutcome {
        let token = self.resolve(g);
        self.step(token, Some(g))
    }

    pub fn feed_token(&mut self, token: Token) -> FeedOutcome {
        self.step(token, None)
    }

    pub fn feed_traced(&mut self, g: GestureId) -> TraceLine {
        let token = self.resolve(g);
        self.traced(token, Some(g))
    }

    pub fn feed_token_traced(&mut self, token: Token) -> TraceLine {
        self.traced(token, None)
    }

    fn traced(&mut self, token: Token, gesture: Option<GestureId>) -> TraceLine {
        let before = self.state.to_string();
        let outcome = self.step(token.clone(), gesture);
        TraceLine {
            gesture,
            token,
            before,
            after: self.state.to_string(),
            outcome,
        }
    }

    fn step(&mut self, token: Token, gesture: Option<GestureId>) -> FeedOutcome {
        if token == Token::Empty {
            return FeedOutcome::Ignored;
        }
        let mut cx = Cx {
            env: &mut self.env,
            registry: &mut self.registry,
            limits: &self.limits,
            arities: &self.arities,
        };
        match self.state.advance(token, gesture, &mut cx) {
            Ok(Some(effect)) => FeedOutcome::FormCompleted(effect),
            Ok(None) => FeedOutcome::Consumed,
            Err(e) => {
                self.state.abandon(&mut self.registry);
                FeedOutcome::ParseError(e)
            }
        }
    }

    /// Ends the input. A form still in progress is discarded and reported.
    pub fn finish(&mut self) -> Result<(), ParseError> {
        if self.state.is_top_level() {
            return Ok(());
        }
        let err = ParseError::Incomplete(self.state.to_string());
        self.state.abandon(&mut self.registry);
        Err(err)
    }

    /// Feeds `tokens` in order, stopping at the first parse error; input that
    /// ends mid-form is an error.
    pub fn parse_script<I>(&mut self, tokens: I) -> Result<Vec<ProgramEffect>, ParseError>
    where
        I: IntoIterator<Item = Token>,
    {
        self.run(tokens.into_iter().map(|t| (t, None)))
    }

    /// As [`Interpreter::parse_script`], resolving gestures under the live keymap.
    pub fn parse_gestures<I>(&mut self, gestures: I) -> Result<Vec<ProgramEffect>, ParseError>
    where
        I: IntoIterator<Item = GestureId>,
    {
        let mut effects = Vec::new();
        for g in gestures {
            match self.feed(g) {
                FeedOutcome::FormCompleted(e) => effects.push(e),
                FeedOutcome::ParseError(e) => return Err(e),
                FeedOutcome::Consumed | FeedOutcome::Ignored => {}
            }
        }
        self.finish()?;
        Ok(effects)
    }

    fn run(&mut self, items: impl Iterator<Item = (Token, Option<GestureId>)>) -> Result<Vec<ProgramEffect>, ParseError> {
        let mut effects = Vec::new();
        for (t, g) in items {
            match self.step(t, g) {
                FeedOutcome::FormCompleted(e) => effects.push(e),
                FeedOutcome::ParseError(e) => return Err(e),
                FeedOutcome::Consumed | FeedOutcome::Ignored => {}
            }
        }
        self.finish()?;
        Ok(effects)
    }
}

/// Batch parse with an explicit environment and registry, both updated in place.
pub fn parse_script<I>(
    tokens: I,
    env: &mut Environment,
    registry: &mut KeymapRegistry,
) -> Result<Vec<ProgramEffect>, ParseError>
where
    I: IntoIterator<Item = Token>,
{
    let mut interp = Interpreter::new(registry.clone());
    interp.env = std::mem::take(env);
    let result = interp.parse_script(tokens);
    *env = interp.env;
    *registry = interp.registry;
    result
}

/// Parses whitespace-separated token names (`BEGIN 1 DO Fn(DOWN) 1 END`).
pub fn tokens(text: &str) -> Result<Vec<Token>, String> {
    text.split_whitespace()
        .map(|w| Token::parse_name(w).ok_or_else(|| format!("unknown token name `{w}`")))
        .collect()
}
