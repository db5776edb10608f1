//! Front-ends for a gesture session: an interactive REPL, a script runner,
//! a line-protocol session server and the experiment harness.

use std::fmt;
use std::path::Path;

use afeis_core::config::{SessionConfig, SessionConfigError};
use afeis_core::session::Session;

pub mod commands;
pub mod repl;
pub mod script;
pub mod server;

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    /// Parse or validation failure in the input.
    Invalid = 1,
    /// Bad or missing configuration.
    Config = 2,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// A failure that ends the command, with the status to exit with.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn config(e: impl fmt::Display) -> Self {
        Failure {
            exit: Exit::Config,
            message: e.to_string(),
        }
    }

    pub fn invalid(e: impl fmt::Display) -> Self {
        Failure {
            exit: Exit::Invalid,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Reads the session config, or the built-in defaults without one.
pub fn load_config(path: Option<&Path>) -> Result<SessionConfig, SessionConfigError> {
    match path {
        Some(p) => SessionConfig::load(p),
        None => Ok(SessionConfig::default()),
    }
}

pub fn open_session(path: Option<&Path>) -> Result<(SessionConfig, Session), Failure> {
    let cfg = load_config(path).map_err(Failure::config)?;
    let session = cfg.build().map_err(Failure::config)?;
    Ok((cfg, session))
}
