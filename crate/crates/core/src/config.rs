//! Line-oriented `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a trailing comment. Keys are unique per file. Precedence when
//! building a run: built-in defaults, then file values, then command-line
//! flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::eval::SynthConfig;
use crate::train::Hyperparams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {message}")]
    BadValue { key: String, value: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Parsed key/value pairs, in key order.
pub type ConfigMap = BTreeMap<String, String>;

pub fn parse_config(text: &str) -> Result<ConfigMap, ConfigError> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: &str| ConfigError::Syntax { line: i + 1, message: message.into() };
        let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(syntax("empty key"));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(syntax(&format!("duplicate key {key:?}")));
        }
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<ConfigMap, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue { key: key.into(), value: value.into(), message: e.to_string() })
}

/// Overrides `hp` fields named in `map`; unknown keys are errors.
pub fn apply_hyperparams(hp: &mut Hyperparams, map: &ConfigMap) -> Result<(), ConfigError> {
    for (k, v) in map {
        match k.as_str() {
            "batch_size" => hp.batch_size = parse(k, v)?,
            "lr" => hp.lr = parse(k, v)?,
            "epochs" => hp.epochs = parse(k, v)?,
            "sections_per_doc" => hp.sections_per_doc = parse(k, v)?,
            "features" => hp.features = parse(k, v)?,
            "d_emb" => hp.d_emb = parse(k, v)?,
            "seed" => hp.seed = parse(k, v)?,
            "negative_strategy" => hp.negative_strategy = parse(k, v)?,
            "top_k_pool" => hp.top_k_pool = parse(k, v)?,
            "bce_eps" => hp.bce_eps = parse(k, v)?,
            "objective" => hp.objective = parse(k, v)?,
            _ => return Err(ConfigError::UnknownKey(k.clone())),
        }
    }
    hp.validate().map_err(|e| ConfigError::BadValue { key: "hyperparameters".into(), value: String::new(), message: e.to_string() })
}

/// Overrides `cfg` fields named in `map`; unknown keys are errors.
pub fn apply_synth(cfg: &mut SynthConfig, map: &ConfigMap) -> Result<(), ConfigError> {
    for (k, v) in map {
        match k.as_str() {
            "num_docs" => cfg.num_docs = parse(k, v)?,
            "sections_per_doc" => cfg.sections_per_doc = parse(k, v)?,
            "vocab_size" => cfg.vocab_size = parse(k, v)?,
            "queries_per_split" => cfg.queries_per_split = parse(k, v)?,
            "p_img" => cfg.p_img = parse(k, v)?,
            "p_tbl" => cfg.p_tbl = parse(k, v)?,
            "docs_per_entity" => cfg.docs_per_entity = parse(k, v)?,
            "seed" => cfg.seed = parse(k, v)?,
            _ => return Err(ConfigError::UnknownKey(k.clone())),
        }
    }
    cfg.validate().map_err(|message| ConfigError::BadValue { key: "synth".into(), value: String::new(), message })
}
