use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{data, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File name without directories.
    pub name: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        Ok(Self {
            name: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Record of one stage run. Holds nothing run-specific such as timestamps or
/// absolute paths, so identical runs write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(mut self, path: &Path) -> Result<Self, CliError> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(self)
    }

    /// Digests the named files in `dir` and writes the manifest next to them.
    pub fn write(mut self, dir: &Path, outputs: &[&str]) -> Result<(), CliError> {
        for name in outputs {
            self.outputs.push(FileDigest::of(&dir.join(name))?);
        }
        let mut text = serde_json::to_string_pretty(&self).map_err(data)?;
        text.push('\n');
        write_file(&dir.join(MANIFEST_FILE), text.as_bytes())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    f.write_all(bytes)
        .map_err(|e| data(format!("{}: {e}", path.display())))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))
}
