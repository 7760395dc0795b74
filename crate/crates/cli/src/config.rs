//! Flat `key = value` run configuration.
//!
//! Grammar: one `key = value` per line; `#` starts a comment line; blank
//! lines are ignored; keys are the long flag names without the leading
//! dashes (`beam`, `fonts-dir`, ...). Values run to the end of the line,
//! surrounding whitespace trimmed. A key may appear once.
//!
//! Resolution order for every setting: command-line flag, then environment
//! (only `ROUNDTRIP_OCR_BIN`, for `ocr-bin`), then this file, then the
//! built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::UsageError;

#[derive(Clone, Copy)]
enum Kind {
    Text,
    Unsigned,
    Real,
    Switch,
}

/// Keys the file may set, with the type each value must parse as.
const KNOWN_KEYS: &[(&str, Kind)] = &[
    ("corpus", Kind::Text),
    ("lang", Kind::Text),
    ("fonts-dir", Kind::Text),
    ("engine", Kind::Text),
    ("seed", Kind::Unsigned),
    ("valid-size", Kind::Unsigned),
    ("test-size", Kind::Unsigned),
    ("beam", Kind::Unsigned),
    ("lambda", Kind::Real),
    ("jobs", Kind::Unsigned),
    ("ocr-bin", Kind::Text),
    ("timeout-secs", Kind::Unsigned),
    ("retries", Kind::Unsigned),
    ("font-size", Kind::Unsigned),
    ("p-sub", Kind::Real),
    ("p-del", Kind::Real),
    ("p-ins", Kind::Real),
    ("order", Kind::Unsigned),
    ("k", Kind::Real),
    ("max-edits", Kind::Unsigned),
    ("top-k", Kind::Unsigned),
    ("grapheme", Kind::Switch),
];

fn check_value(kind: Kind, value: &str) -> Result<(), String> {
    match kind {
        Kind::Text => Ok(()),
        Kind::Unsigned => value.parse::<u64>().map(drop).map_err(|e| e.to_string()),
        Kind::Real => value.parse::<f64>().map(drop).map_err(|e| e.to_string()),
        Kind::Switch => value.parse::<bool>().map(drop).map_err(|e| e.to_string()),
    }
}

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    source: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("--config {}: {e}", path.display())))?;
        let mut cfg = ConfigFile::parse(&text).map_err(|e| UsageError(format!("--config {}: {e}", path.display())))?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<ConfigFile, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`", i + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(&(_, kind)) = KNOWN_KEYS.iter().find(|(k, _)| *k == key) else {
                return Err(format!("line {}: unknown key `{key}`", i + 1));
            };
            check_value(kind, value).map_err(|e| format!("line {}: `{key} = {value}`: {e}", i + 1))?;
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("line {}: `{key}` set twice", i + 1));
            }
        }
        Ok(ConfigFile { values, source: None })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| {
                let at = self.source.as_ref().map_or(String::new(), |p| format!(" in {}", p.display()));
                UsageError(format!("config key `{key}`{at}: invalid value `{v}`: {e}"))
            }),
        }
    }

    /// Flag value, else the file's value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, UsageError>
    where
        T::Err: Display,
    {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.parse_value(key),
        }
    }

    /// Like [`pick_opt`](Self::pick_opt) but missing everywhere is a usage error.
    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, UsageError>
    where
        T::Err: Display,
    {
        self.pick_opt(flag, key)?
            .ok_or_else(|| UsageError(format!("missing required --{key} (flag or config key `{key}`)")))
    }

    /// Boolean switch: set by the flag or by `key = true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, UsageError> {
        Ok(flag || self.parse_value::<bool>(key)?.unwrap_or(false))
    }
}

/// Hex SHA-256 of the resolved settings, one `key=value` line each in key
/// order. Recorded in dataset headers.
pub fn settings_hash(settings: &BTreeMap<&str, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in settings {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_trims() {
        let cfg = ConfigFile::parse("# run\n\nbeam = 12\nlambda=0.5  \nfonts-dir = /x y\n").unwrap();
        assert_eq!(cfg.pick::<usize>(None, "beam", 8).unwrap(), 12);
        assert_eq!(cfg.pick::<usize>(Some(3), "beam", 8).unwrap(), 3);
        assert_eq!(cfg.pick::<f64>(None, "lambda", 1.0).unwrap(), 0.5);
        assert_eq!(cfg.pick::<u64>(None, "seed", 0).unwrap(), 0);
        assert_eq!(cfg.raw("fonts-dir"), Some("/x y"));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("beam 3").unwrap_err().contains("line 1"));
        assert!(ConfigFile::parse("colour = red").unwrap_err().contains("unknown key"));
        assert!(ConfigFile::parse("beam = 1\nbeam = 2").unwrap_err().contains("twice"));
        assert!(ConfigFile::parse("beam = wide").unwrap_err().contains("beam"));
        assert!(ConfigFile::parse("grapheme = yes").is_err());
        let cfg = ConfigFile::parse("lang = hi").unwrap();
        assert!(cfg.pick::<u32>(None, "lang", 0).is_err());
    }

    #[test]
    fn missing_required_names_the_flag() {
        let err = ConfigFile::default().require::<PathBuf>(None, "corpus").unwrap_err();
        assert!(err.0.contains("--corpus"));
    }

    #[test]
    fn hash_depends_on_values() {
        let mut a = BTreeMap::new();
        a.insert("seed", "7".to_string());
        let mut b = a.clone();
        b.insert("seed", "8".to_string());
        assert_ne!(settings_hash(&a), settings_hash(&b));
        assert_eq!(settings_hash(&a).len(), 64);
    }
}
