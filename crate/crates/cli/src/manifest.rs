//! Run manifests: everything needed to repeat a run, written before it starts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, CliResult};
use crate::settings::{ExploreSettings, GenerateSettings, LabelSettings, StreamSettings, TokenizeSettings};
use rost_core::eval::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    /// Output files by role, relative to the manifest's directory.
    pub artifacts: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explore: Option<ExploreSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokenize: Option<TokenizeSettings>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, artifacts: &[(&str, &str)]) -> Self {
        Manifest {
            format: FORMAT,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            artifacts: artifacts.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            generate: None,
            explore: None,
            stream: None,
            evaluate: None,
            label: None,
            tokenize: None,
        }
    }

    pub fn write(&self, out: &Path) -> CliResult<()> {
        let text = toml::to_string(self).map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
        write_file(out, MANIFEST_FILE, &text)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if m.format != FORMAT {
            return Err(CliError::Config(format!("{}: unsupported manifest format {}", path.display(), m.format)));
        }
        Ok(m)
    }

    pub fn artifact(&self, dir: &Path, role: &str) -> Option<PathBuf> {
        self.artifacts.get(role).map(|p| dir.join(p))
    }
}

pub fn write_file(out: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let path = out.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

/// Reads a TOML settings file into `T`.
pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Absolute form of an input path, so manifests replay from any directory.
pub fn absolute(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| io_err(path, e))
}

/// One integer per line.
pub fn schedule_to_string(s: &[u32]) -> String {
    s.iter().map(|d| format!("{d}\n")).collect()
}

pub fn read_schedule(path: &Path) -> CliResult<Vec<u32>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| CliError::Io(format!("{}:{}: expected a draw count", path.display(), i + 1)))
        })
        .collect()
}
