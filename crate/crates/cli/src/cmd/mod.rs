pub mod annotate;
pub mod augment;
pub mod clean;
pub mod eval;
pub mod ingest;
pub mod noise;
pub mod roles;
pub mod stats;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use dialsum_core::corpus::{load_any, Corpus};

use crate::manifest::write_file;
use crate::{data, CliError};

pub(crate) fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))
}

pub(crate) fn load(path: &Path) -> Result<Corpus, CliError> {
    load_any(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

pub(crate) fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(data)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub(crate) fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("config types serialize to JSON")
}

/// Parses a lowercase enum name as written in config files.
pub(crate) fn parse_name<T: DeserializeOwned>(flag: &str, value: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| crate::usage(format!("invalid value {value:?} for --{flag}")))
}

pub(crate) fn base_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
