//! Plain-text key=value configuration: one pair per line, `#` comments.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub type KeyValues = BTreeMap<String, String>;

pub fn parse_kv(text: &str) -> Result<KeyValues> {
    let mut map = KeyValues::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::param(format!("config line {}: expected key=value, got {line:?}", ln + 1))
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::param(format!("config line {}: empty key", ln + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::param(format!("duplicate config key {key}")));
        }
    }
    Ok(map)
}

pub fn load_kv(path: &Path) -> Result<KeyValues> {
    parse_kv(&std::fs::read_to_string(path)?)
}

/// Reject keys outside the allowed set (the CLI passes each subcommand's
/// known keys).
pub fn check_known_keys(map: &KeyValues, allowed: &[&str]) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::param(format!("unknown config key {key}")));
        }
    }
    Ok(())
}
