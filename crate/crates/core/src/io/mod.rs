//! Configuration, checkpoints, metrics logs and CSV reports.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod metrics;

use std::fs;
use std::path::Path;

use crate::error::TrainError;

/// Creates `dir`, refusing to reuse a non-empty directory unless `force`.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<(), TrainError> {
    if dir.exists() {
        let non_empty = !dir.is_dir() || fs::read_dir(dir)?.next().is_some();
        if non_empty && !force {
            return Err(TrainError::OutputExists(dir.to_path_buf()));
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Refuses to replace an existing file unless `force`.
pub fn check_writable(path: &Path, force: bool) -> Result<(), TrainError> {
    if path.exists() && !force {
        return Err(TrainError::OutputExists(path.to_path_buf()));
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}
