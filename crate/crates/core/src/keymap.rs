//! Keymap configuration files and gesture resolution.
//!
//! A keymap assigns each of the 50 classifier outputs a meaning: one of the
//! system symbols that give the grammar its structure, and/or an FN name and a
//! PARAM text. The same gesture may carry both an FN and a PARAM definition;
//! which one applies depends on where the gesture appears in a command.
//!
//! On disk a keymap is a small INI document:
//!
//! ```text
//! [alias]
//! A=10
//!
//! [system]
//! BEGIN=A
//! END=11
//! CALL=12
//! CMD_SEP=13
//! PARAM_SEP=14
//! DO=       ; =BEGIN by default
//!
//! [fn]
//! 0=FORWARD
//!
//! [param]
//! 0=0
//! ```
//!
//! `[system]` right-hand sides are gesture IDs (or aliases), comma separated
//! when several gestures share a symbol. `[fn]`/`[param]` left-hand sides are
//! gesture IDs (or aliases). An empty right-hand side leaves the entry unbound.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of gesture classes the recognizer distinguishes.
pub const GESTURE_COUNT: usize = 50;

/// One classifier output class, in `0..50`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct GestureId(u8);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gesture id {0} out of range 0..{GESTURE_COUNT}")]
pub struct GestureOutOfRange(pub i64);

impl GestureId {
    pub fn new(id: u32) -> Result<Self, GestureOutOfRange> {
        if (id as usize) < GESTURE_COUNT {
            Ok(GestureId(id as u8))
        } else {
            Err(GestureOutOfRange(id as i64))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl DoubleEndedIterator<Item = GestureId> {
        (0..GESTURE_COUNT as u8).map(GestureId)
    }
}

impl TryFrom<u32> for GestureId {
    type Error = GestureOutOfRange;

    fn try_from(id: u32) -> Result<Self, Self::Error> {
        GestureId::new(id)
    }
}

impl From<GestureId> for u32 {
    fn from(g: GestureId) -> u32 {
        g.0 as u32
    }
}

impl FromStr for GestureId {
    type Err = GestureOutOfRange;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n: i64 = s.trim().parse().map_err(|_| GestureOutOfRange(-1))?;
        if (0..GESTURE_COUNT as i64).contains(&n) {
            Ok(GestureId(n as u8))
        } else {
            Err(GestureOutOfRange(n))
        }
    }
}

impl fmt::Display for GestureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Structural symbols of the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SystemSymbol {
    Begin,
    End,
    Call,
    CmdSep,
    ParamSep,
    Do,
    Def,
    Set,
}

impl SystemSymbol {
    pub const ALL: [SystemSymbol; 8] = [
        SystemSymbol::Begin,
        SystemSymbol::End,
        SystemSymbol::Call,
        SystemSymbol::CmdSep,
        SystemSymbol::ParamSep,
        SystemSymbol::Do,
        SystemSymbol::Def,
        SystemSymbol::Set,
    ];

    /// The five symbols every keymap must bind. DO, DEF and SET fall back to BEGIN.
    pub const MANDATORY: [SystemSymbol; 5] = [
        SystemSymbol::Begin,
        SystemSymbol::End,
        SystemSymbol::Call,
        SystemSymbol::CmdSep,
        SystemSymbol::ParamSep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemSymbol::Begin => "BEGIN",
            SystemSymbol::End => "END",
            SystemSymbol::Call => "CALL",
            SystemSymbol::CmdSep => "CMD_SEP",
            SystemSymbol::ParamSep => "PARAM_SEP",
            SystemSymbol::Do => "DO",
            SystemSymbol::Def => "DEF",
            SystemSymbol::Set => "SET",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        SystemSymbol::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn token(self) -> Token {
        match self {
            SystemSymbol::Begin => Token::Begin,
            SystemSymbol::End => Token::End,
            SystemSymbol::Call => Token::Call,
            SystemSymbol::CmdSep => Token::CmdSep,
            SystemSymbol::ParamSep => Token::ParamSep,
            SystemSymbol::Do => Token::Do,
            SystemSymbol::Def => Token::Def,
            SystemSymbol::Set => Token::Set,
        }
    }
}

impl fmt::Display for SystemSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A resolved grammar symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    Begin,
    End,
    Call,
    CmdSep,
    ParamSep,
    Do,
    Def,
    Set,
    Digit(u8),
    DecimalPoint,
    NegSign,
    Fn(String),
    Param(String),
    Empty,
}

impl Token {
    pub fn is_system(&self) -> bool {
        matches!(
            self,
            Token::Begin
                | Token::End
                | Token::Call
                | Token::CmdSep
                | Token::ParamSep
                | Token::Do
                | Token::Def
                | Token::Set
        )
    }

    /// Short kind name used in traces and on the wire.
    pub fn kind(&self) -> &'static str {
        match self {
            Token::Begin => "Begin",
            Token::End => "End",
            Token::Call => "Call",
            Token::CmdSep => "CmdSep",
            Token::ParamSep => "ParamSep",
            Token::Do => "Do",
            Token::Def => "Def",
            Token::Set => "Set",
            Token::Digit(_) => "Digit",
            Token::DecimalPoint => "DecimalPoint",
            Token::NegSign => "NegSign",
            Token::Fn(_) => "Fn",
            Token::Param(_) => "Param",
            Token::Empty => "Empty",
        }
    }

    /// Payload text, if the token carries one.
    pub fn text(&self) -> Option<String> {
        match self {
            Token::Digit(d) => Some(d.to_string()),
            Token::Fn(s) | Token::Param(s) => Some(s.clone()),
            _ => None,
        }
    }

    /// Specializes a PARAM definition: single digits, "-" and "." become number tokens.
    pub fn from_param_text(text: &str) -> Token {
        match text {
            "-" => Token::NegSign,
            "." => Token::DecimalPoint,
            _ => {
                let mut chars = text.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_digit() => Token::Digit(c as u8 - b'0'),
                    _ => Token::Param(text.to_string()),
                }
            }
        }
    }

    /// Parses the textual token names used in test fixtures and token scripts,
    /// e.g. `BEGIN`, `CMD_SEP`, `7`, `-`, `.`, `Fn(DOWN)`, `Param(north)`.
    pub fn parse_name(s: &str) -> Option<Token> {
        if let Some(sym) = SystemSymbol::from_name(s) {
            return Some(sym.token());
        }
        if let Some(inner) = s.strip_prefix("Fn(").and_then(|r| r.strip_suffix(')')) {
            return (!inner.is_empty()).then(|| Token::Fn(inner.to_string()));
        }
        if let Some(inner) = s.strip_prefix("Param(").and_then(|r| r.strip_suffix(')')) {
            return (!inner.is_empty()).then(|| Token::Param(inner.to_string()));
        }
        match s {
            "EMPTY" => Some(Token::Empty),
            "-" | "." => Some(Token::from_param_text(s)),
            _ if s.len() == 1 && s.as_bytes()[0].is_ascii_digit() => {
                Some(Token::Digit(s.as_bytes()[0] - b'0'))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Begin => f.write_str("BEGIN"),
            Token::End => f.write_str("END"),
            Token::Call => f.write_str("CALL"),
            Token::CmdSep => f.write_str("CMD_SEP"),
            Token::ParamSep => f.write_str("PARAM_SEP"),
            Token::Do => f.write_str("DO"),
            Token::Def => f.write_str("DEF"),
            Token::Set => f.write_str("SET"),
            Token::Digit(d) => write!(f, "{d}"),
            Token::DecimalPoint => f.write_str("."),
            Token::NegSign => f.write_str("-"),
            Token::Fn(name) => write!(f, "Fn({name})"),
            Token::Param(text) => write!(f, "Param({text})"),
            Token::Empty => f.write_str("EMPTY"),
        }
    }
}

/// Which definition table a gesture is looked up in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Position {
    /// Head of a command: the FN table.
    Fn,
    /// Arguments and numbers: the PARAM table.
    Param,
    /// Between forms: system symbols, then FN, then PARAM.
    SystemFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeymapError {
    #[error("line {line}: malformed line `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: entry outside of any section")]
    NoSection { line: usize },
    #[error("line {line}: unknown system symbol `{name}`")]
    UnknownSymbol { line: usize, name: String },
    #[error("line {line}: `{text}` is not a gesture index")]
    BadGesture { line: usize, text: String },
    #[error("mandatory symbol {0} unbound")]
    MissingSymbol(SystemSymbol),
    #[error("gesture {gesture} bound to both {first} and {second}")]
    DuplicateSystemBinding {
        gesture: GestureId,
        first: SystemSymbol,
        second: SystemSymbol,
    },
    #[error("gesture {gesture} is bound to {symbol} and also has a [{table}] definition")]
    SystemConflict {
        gesture: GestureId,
        symbol: SystemSymbol,
        table: &'static str,
    },
    #[error("unknown keymap {0}")]
    UnknownKeymap(u32),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {errors}")]
    File { path: PathBuf, errors: KeymapErrors },
}

/// All problems found in one keymap document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeymapErrors(pub Vec<KeymapError>);

impl std::error::Error for KeymapErrors {}

impl fmt::Display for KeymapErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Non-fatal findings while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeymapWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for KeymapWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    System,
    Fn,
    Param,
    Alias,
}

/// A validated keymap. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Keymap {
    index: u32,
    system: BTreeMap<SystemSymbol, Vec<GestureId>>,
    fns: BTreeMap<GestureId, String>,
    params: BTreeMap<GestureId, String>,
    aliases: BTreeMap<String, GestureId>,
    system_of: [Option<SystemSymbol>; GESTURE_COUNT],
}

/// Unvalidated keymap contents, used to assemble keymaps in code.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeymapBuilder {
    pub system: BTreeMap<SystemSymbol, Vec<GestureId>>,
    pub fns: BTreeMap<GestureId, String>,
    pub params: BTreeMap<GestureId, String>,
    pub aliases: BTreeMap<String, GestureId>,
}

impl KeymapBuilder {
    pub fn system(mut self, symbol: SystemSymbol, gesture: GestureId) -> Self {
        self.system.entry(symbol).or_default().push(gesture);
        self
    }

    pub fn func(mut self, gesture: GestureId, name: &str) -> Self {
        self.fns.insert(gesture, name.to_string());
        self
    }

    pub fn param(mut self, gesture: GestureId, text: &str) -> Self {
        self.params.insert(gesture, text.to_string());
        self
    }

    pub fn build(self, index: u32) -> Result<Keymap, KeymapErrors> {
        let mut errors = Vec::new();
        let mut system_of = [None; GESTURE_COUNT];
        for sym in SystemSymbol::MANDATORY {
            if self.system.get(&sym).is_none_or(|g| g.is_empty()) {
                errors.push(KeymapError::MissingSymbol(sym));
            }
        }
        for (&sym, gestures) in &self.system {
            for &g in gestures {
                match system_of[g.index()] {
                    Some(first) if first != sym => {
                        errors.push(KeymapError::DuplicateSystemBinding {
                            gesture: g,
                            first,
                            second: sym,
                        });
                    }
                    _ => system_of[g.index()] = Some(sym),
                }
            }
        }
        for (table, map) in [("fn", &self.fns), ("param", &self.params)] {
            for &g in map.keys() {
                if let Some(symbol) = system_of[g.index()] {
                    errors.push(KeymapError::SystemConflict {
                        gesture: g,
                        symbol,
                        table,
                    });
                }
            }
        }
        if !errors.is_empty() {
            return Err(KeymapErrors(errors));
        }
        let mut system = self.system;
        for gestures in system.values_mut() {
            gestures.sort();
            gestures.dedup();
        }
        system.retain(|_, g| !g.is_empty());
        Ok(Keymap {
            index,
            system,
            fns: self.fns,
            params: self.params,
            aliases: self.aliases,
            system_of,
        })
    }
}

impl Keymap {
    pub fn parse(text: &str, index: u32) -> Result<Keymap, KeymapErrors> {
        Self::parse_with_warnings(text, index).map(|(k, _)| k)
    }

    pub fn parse_with_warnings(
        text: &str,
        index: u32,
    ) -> Result<(Keymap, Vec<KeymapWarning>), KeymapErrors> {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        // (section, line, key, value) in file order; aliases resolved afterwards
        let mut entries: Vec<(Section, usize, String, String)> = Vec::new();
        let mut section = None;

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split(';').next().unwrap_or("").trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    errors.push(KeymapError::Malformed { line, text: raw.to_string() });
                    continue;
                };
                section = match name.trim() {
                    "system" => Some(Section::System),
                    "fn" => Some(Section::Fn),
                    "param" => Some(Section::Param),
                    "alias" => Some(Section::Alias),
                    other => {
                        errors.push(KeymapError::UnknownSection {
                            line,
                            name: other.to_string(),
                        });
                        None
                    }
                };
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                errors.push(KeymapError::Malformed { line, text: raw.to_string() });
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                errors.push(KeymapError::Malformed { line, text: raw.to_string() });
                continue;
            }
            match section {
                Some(s) => {
                    if let Some(prev) = entries.iter().find(|(ps, _, pk, _)| *ps == s && pk == key) {
                        warnings.push(KeymapWarning {
                            line,
                            message: format!("duplicate key `{key}` (line {}), last occurrence wins", prev.1),
                        });
                        entries.retain(|(ps, _, pk, _)| !(*ps == s && pk == key));
                    }
                    entries.push((s, line, key.to_string(), value.to_string()));
                }
                None => errors.push(KeymapError::NoSection { line }),
            }
        }

        let mut builder = KeymapBuilder::default();
        for (_, line, key, value) in entries.iter().filter(|e| e.0 == Section::Alias) {
            if value.is_empty() {
                continue;
            }
            match value.parse::<GestureId>() {
                Ok(g) => {
                    builder.aliases.insert(key.clone(), g);
                }
                Err(_) => errors.push(KeymapError::BadGesture { line: *line, text: value.clone() }),
            }
        }
        let lookup = |text: &str| -> Option<GestureId> {
            text.parse::<GestureId>()
                .ok()
                .or_else(|| builder.aliases.get(text).copied())
        };

        let mut system = BTreeMap::new();
        let mut fns = BTreeMap::new();
        let mut params = BTreeMap::new();
        for (section, line, key, value) in &entries {
            match section {
                Section::Alias => {}
                Section::System => {
                    let Some(sym) = SystemSymbol::from_name(key) else {
                        errors.push(KeymapError::UnknownSymbol { line: *line, name: key.clone() });
                        continue;
                    };
                    let mut gestures = Vec::new();
                    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        match lookup(part) {
                            Some(g) => gestures.push(g),
                            None => errors.push(KeymapError::BadGesture {
                                line: *line,
                                text: part.to_string(),
                            }),
                        }
                    }
                    system.insert(sym, gestures);
                }
                Section::Fn | Section::Param => {
                    let Some(g) = lookup(key) else {
                        errors.push(KeymapError::BadGesture { line: *line, text: key.clone() });
                        continue;
                    };
                    if value.is_empty() {
                        continue;
                    }
                    let table = if *section == Section::Fn { &mut fns } else { &mut params };
                    table.insert(g, value.clone());
                }
            }
        }
        if !errors.is_empty() {
            return Err(KeymapErrors(errors));
        }
        builder.system = system;
        builder.fns = fns;
        builder.params = params;
        builder.build(index).map(|k| (k, warnings))
    }

    pub fn load(path: &Path, index: u32) -> Result<Keymap, KeymapError> {
        let text = fs::read_to_string(path).map_err(|e| KeymapError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Keymap::parse(&text, index).map_err(|errors| KeymapError::File {
            path: path.to_path_buf(),
            errors,
        })
    }

    pub fn builder() -> KeymapBuilder {
        KeymapBuilder::default()
    }

    /// Copy of this keymap's bindings, for deriving modified keymaps.
    pub fn to_builder(&self) -> KeymapBuilder {
        KeymapBuilder {
            system: self.system.clone(),
            fns: self.fns.clone(),
            params: self.params.clone(),
            aliases: self.aliases.clone(),
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn with_index(mut self, index: u32) -> Keymap {
        self.index = index;
        self
    }

    pub fn system_symbol(&self, g: GestureId) -> Option<SystemSymbol> {
        self.system_of[g.index()]
    }

    pub fn system_gestures(&self, symbol: SystemSymbol) -> &[GestureId] {
        self.system.get(&symbol).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn fn_name(&self, g: GestureId) -> Option<&str> {
        self.fns.get(&g).map(String::as_str)
    }

    pub fn param_text(&self, g: GestureId) -> Option<&str> {
        self.params.get(&g).map(String::as_str)
    }

    pub fn fn_bindings(&self) -> &BTreeMap<GestureId, String> {
        &self.fns
    }

    pub fn param_bindings(&self) -> &BTreeMap<GestureId, String> {
        &self.params
    }

    pub fn aliases(&self) -> &BTreeMap<String, GestureId> {
        &self.aliases
    }

    pub fn alias(&self, name: &str) -> Option<GestureId> {
        self.aliases.get(name).copied()
    }

    /// Label for a gesture: its alias if one exists, else its index.
    pub fn label(&self, g: GestureId) -> String {
        self.aliases
            .iter()
            .find(|(_, &v)| v == g)
            .map(|(k, _)| k.clone())
            .unwrap_or_else(|| g.to_string())
    }

    pub fn resolve(&self, g: GestureId, position: Position) -> Token {
        if let Some(sym) = self.system_of[g.index()] {
            return sym.token();
        }
        let fn_token = || self.fns.get(&g).map(|name| Token::Fn(name.clone()));
        let param_token = || self.params.get(&g).map(|text| Token::from_param_text(text));
        let token = match position {
            Position::Fn => fn_token(),
            Position::Param => param_token(),
            Position::SystemFirst => fn_token().or_else(param_token),
        };
        token.unwrap_or(Token::Empty)
    }

    /// Writes the keymap back in the on-disk format. `parse` of the output
    /// reproduces this keymap.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        if !self.aliases.is_empty() {
            out.push_str("[alias]\n");
            for (name, g) in &self.aliases {
                out.push_str(&format!("{name}={g}\n"));
            }
            out.push('\n');
        }
        out.push_str("[system]\n");
        for sym in SystemSymbol::ALL {
            let ids: Vec<String> = self.system_gestures(sym).iter().map(|g| g.to_string()).collect();
            out.push_str(&format!("{}={}\n", sym.name(), ids.join(",")));
        }
        out.push_str("\n[fn]\n");
        for (g, name) in &self.fns {
            out.push_str(&format!("{g}={name}\n"));
        }
        out.push_str("\n[param]\n");
        for (g, text) in &self.params {
            out.push_str(&format!("{g}={text}\n"));
        }
        out
    }
}

/// The keymaps available to one session, and which one is active.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeymapRegistry {
    maps: BTreeMap<u32, Arc<Keymap>>,
    active: u32,
}

impl KeymapRegistry {
    /// Creates a registry with `default` registered and active at index 0.
    pub fn new(default: Keymap) -> Self {
        let mut maps = BTreeMap::new();
        maps.insert(0, Arc::new(default.with_index(0)));
        KeymapRegistry { maps, active: 0 }
    }

    /// Registers `keymap` under `index`, replacing any previous one.
    pub fn register(&mut self, index: u32, keymap: Keymap) {
        self.maps.insert(index, Arc::new(keymap.with_index(index)));
    }

    pub fn activate(&mut self, index: u32) -> Result<(), KeymapError> {
        if self.maps.contains_key(&index) {
            self.active = index;
            Ok(())
        } else {
            Err(KeymapError::UnknownKeymap(index))
        }
    }

    pub fn active_index(&self) -> u32 {
        self.active
    }

    pub fn active(&self) -> &Keymap {
        &self.maps[&self.active]
    }

    pub fn get(&self, index: u32) -> Option<&Keymap> {
        self.maps.get(&index).map(|k| k.as_ref())
    }

    pub fn contains(&self, index: u32) -> bool {
        self.maps.contains_key(&index)
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.maps.keys().copied()
    }

    pub fn resolve(&self, g: GestureId, position: Position) -> Token {
        self.active().resolve(g, position)
    }

    /// Finds an alias in the active keymap first, then in the others.
    pub fn alias(&self, name: &str) -> Option<GestureId> {
        self.active()
            .alias(name)
            .or_else(|| self.maps.values().find_map(|k| k.alias(name)))
    }

    /// Loads every `<index>.keymap` file in `dir`. Index 0 must be present.
    pub fn load_dir(dir: &Path) -> Result<KeymapRegistry, KeymapError> {
        let mut found = load_dir_files(dir)?;
        let Some(default) = found.remove(&0) else {
            return Err(KeymapError::UnknownKeymap(0));
        };
        let mut registry = KeymapRegistry::new(default);
        for (index, keymap) in found {
            registry.register(index, keymap);
        }
        Ok(registry)
    }
}

/// Every `<index>.keymap` file in `dir`, by index.
pub fn load_dir_files(dir: &Path) -> Result<BTreeMap<u32, Keymap>, KeymapError> {
    let io_err = |e: std::io::Error| KeymapError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    };
    let mut found = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("keymap") {
            continue;
        }
        let Some(index) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u32>().ok())
        else {
            continue;
        };
        found.insert(index, Keymap::load(&path, index)?);
    }
    Ok(found)
}

/// Keymaps shipped with the crate: the two-keymap demo pair and the task keymap.
pub mod builtin {
    use super::Keymap;

    pub const LEFT_KEYMAP: &str = include_str!("../keymaps/0.keymap");
    pub const RIGHT_KEYMAP: &str = include_str!("../keymaps/1.keymap");
    pub const TASK_KEYMAP: &str = include_str!("../keymaps/tasks.keymap");

    pub fn left() -> Keymap {
        Keymap::parse(LEFT_KEYMAP, 0).expect("built-in keymap 0 is valid")
    }

    pub fn right() -> Keymap {
        Keymap::parse(RIGHT_KEYMAP, 1).expect("built-in keymap 1 is valid")
    }

    pub fn tasks() -> Keymap {
        Keymap::parse(TASK_KEYMAP, 0).expect("built-in task keymap is valid")
    }
}
