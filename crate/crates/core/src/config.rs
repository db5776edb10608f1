//! Session configuration file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confirmer::{ConfigError, ConfirmerConfig};
use crate::keymap::{builtin, load_dir_files, Keymap, KeymapError, KeymapRegistry};
use crate::robot::{Robot, RobotConfig, RobotError};
use crate::session::Session;
use crate::stream_sim::{NoiseProfile, ProfileError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeymapEntry {
    pub index: u32,
    pub path: PathBuf,
}

/// Everything a session needs. Relative paths are taken from the
/// directory holding the config file. With no keymaps listed, the built-in
/// pair (0 and 1) is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Directory of `<index>.keymap` files.
    pub keymap_dir: Option<PathBuf>,
    /// Explicit keymaps; these replace same-index files from `keymap_dir`.
    pub keymaps: Vec<KeymapEntry>,
    pub confirmer: ConfirmerConfig,
    pub robot: RobotConfig,
    /// Noise applied to simulated input.
    pub noise: Option<NoiseProfile>,
    pub port: u16,
    pub frame_rate_hint: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            keymap_dir: None,
            keymaps: Vec::new(),
            confirmer: ConfirmerConfig::default(),
            robot: RobotConfig::default(),
            noise: None,
            port: 7878,
            frame_rate_hint: 20.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error(transparent)]
    Keymap(#[from] KeymapError),
    #[error("no keymap registered at index 0")]
    NoDefaultKeymap,
    #[error("confirmer: {0}")]
    Confirmer(#[from] ConfigError),
    #[error("robot: {0}")]
    Robot(#[from] RobotError),
    #[error("noise: {0}")]
    Noise(#[from] ProfileError),
}

impl SessionConfig {
    pub fn load(path: &Path) -> Result<Self, SessionConfigError> {
        let text = fs::read_to_string(path).map_err(|e| SessionConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text).map_err(|message| SessionConfigError::Syntax {
            path: path.to_path_buf(),
            message,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(dir) = cfg.keymap_dir.as_mut() {
            *dir = base.join(&*dir);
        }
        for k in &mut cfg.keymaps {
            k.path = base.join(&k.path);
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn registry(&self) -> Result<KeymapRegistry, SessionConfigError> {
        if self.keymap_dir.is_none() && self.keymaps.is_empty() {
            let mut r = KeymapRegistry::new(builtin::left());
            r.register(1, builtin::right());
            return Ok(r);
        }
        let mut maps = match &self.keymap_dir {
            Some(dir) => load_dir_files(dir)?,
            None => BTreeMap::new(),
        };
        for entry in &self.keymaps {
            maps.insert(entry.index, Keymap::load(&entry.path, entry.index)?);
        }
        let default = maps.remove(&0).ok_or(SessionConfigError::NoDefaultKeymap)?;
        let mut registry = KeymapRegistry::new(default);
        for (index, km) in maps {
            registry.register(index, km);
        }
        Ok(registry)
    }

    /// Checks every part and builds a fresh session.
    pub fn build(&self) -> Result<Session, SessionConfigError> {
        let registry = self.registry()?;
        self.confirmer.validate(self.frame_rate_hint)?;
        let robot = Robot::new(self.robot.clone())?;
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(Session::new(registry, self.confirmer, robot))
    }
}
