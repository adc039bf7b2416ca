//! Flag / config-file / default resolution.

use std::path::Path;
use std::str::FromStr;

use sesdi_core::error::{Error, Result};
use sesdi_core::io::config::{check_known_keys, load_kv, KeyValues};

pub fn load_config(path: Option<&Path>) -> Result<KeyValues> {
    match path {
        Some(p) => load_kv(p),
        None => Ok(KeyValues::new()),
    }
}

/// Reject config keys a subcommand does not know about.
pub fn check_keys(cfg: &KeyValues, allowed: &[&str]) -> Result<()> {
    check_known_keys(cfg, allowed)
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| Error::param(format!("config key {key}: cannot parse {raw:?}")))
}

/// Flag beats config beats default.
pub fn resolve<T: FromStr>(flag: Option<T>, cfg: &KeyValues, key: &str, default: T) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => match cfg.get(key) {
            Some(raw) => parse(key, raw),
            None => Ok(default),
        },
    }
}

/// Flag beats config; may remain unset.
pub fn resolve_opt<T: FromStr>(flag: Option<T>, cfg: &KeyValues, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key).map(|raw| parse(key, raw)).transpose(),
    }
}
