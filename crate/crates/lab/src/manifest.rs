use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{LabError, Result};

/// Written next to the outputs of every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// All parameters after defaults were applied.
    pub config: serde_json::Value,
    pub version: String,
    pub seed: Option<u64>,
    pub wall_clock_s: f64,
    pub outputs: Vec<PathBuf>,
    /// Arguments after the program name; `rerun` replays them.
    pub argv: Vec<String>,
    /// Headline numbers (slopes, counts, ...).
    #[serde(default)]
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| LabError::Json { path: path.into(), source })?;
        std::fs::write(path, text + "\n").map_err(LabError::io(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        serde_json::from_str(&text).map_err(|source| LabError::Json { path: path.into(), source })
    }
}
