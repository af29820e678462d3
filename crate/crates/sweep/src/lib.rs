//! Parameter sweeps over the xychain simulators, producing CSV tables and
//! JSON metadata for plotting.

pub mod config;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{validate_config, ConfigErrors, ModelKind, ObservableKind, SweepConfig};
pub use run::{run_cut, run_sweep, Outcome, Record, RunOptions, SweepDataset, CSV_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] xychain::Error),
    #[error("{0}")]
    Runtime(String),
}

impl SweepError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SweepError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<SweepConfig, SweepError> {
    let raw = std::fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
    let mut config = validate_config(&raw)?;
    if config.name == "sweep" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            config.name = stem.to_string();
        }
    }
    Ok(config)
}
