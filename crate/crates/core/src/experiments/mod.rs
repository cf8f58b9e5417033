//! Experiment drivers behind the CLI: bound tables, λ estimation runs,
//! learning-curve sweeps, topic-count selection, and plot-data export.
//!
//! Every command takes one JSON config ([`config::ExperimentConfig`]),
//! stamps each artifact with the config's SHA-256, and writes outputs
//! whose bytes depend only on the effective configuration — wall-clock
//! metadata is quarantined in `run_meta.json` files. Error values carry
//! the process exit code: 2 config/input, 3 numerical guard, 4 partial
//! failure.

pub mod bound_table;
pub mod config;
pub mod estimate;
pub mod plot;
pub mod select;
pub mod sweep;

pub use bound_table::{bounds_to_csv, bounds_to_text, evaluate_all, GridSpec};
pub use config::{dims_slug, ExperimentConfig};
pub use estimate::{run_estimate, EstimateMethod, EstimateReport};
pub use plot::run_plot_data;
pub use select::{parse_h_range, run_select, SelectReport};
pub use sweep::{run_sweep, LearningCurveRecord, SweepOutcome, SweepSummary};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::estimator::EstimatorError;
use crate::sim::{GibbsError, QuadratureError, SimError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    /// A numerical precondition failed (dimension too large, resolution
    /// exhausted, non-convergence); rerun with adjusted settings.
    #[error("numerical guard: {0}")]
    Guard(String),
    #[error("{failed} of {total} replicates failed, above the 10% tolerance")]
    PartialFailure { failed: usize, total: usize },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_)
            | ExperimentError::Io { .. }
            | ExperimentError::Json { .. } => 2,
            ExperimentError::Guard(_) => 3,
            ExperimentError::PartialFailure { .. } => 4,
        }
    }
}

impl From<EstimatorError> for ExperimentError {
    fn from(e: EstimatorError) -> Self {
        ExperimentError::Guard(e.to_string())
    }
}

impl From<SimError> for ExperimentError {
    fn from(e: SimError) -> Self {
        ExperimentError::Guard(e.to_string())
    }
}

impl From<GibbsError> for ExperimentError {
    fn from(e: GibbsError) -> Self {
        ExperimentError::Guard(e.to_string())
    }
}

impl From<QuadratureError> for ExperimentError {
    fn from(e: QuadratureError) -> Self {
        ExperimentError::Guard(e.to_string())
    }
}

impl From<crate::sim::DatasetError> for ExperimentError {
    fn from(e: crate::sim::DatasetError) -> Self {
        ExperimentError::Guard(e.to_string())
    }
}

/// Write via a sibling temp file + rename so an interrupt never leaves a
/// truncated artifact where a resume pass would trust it.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let err = |source| ExperimentError::Io { path: path.to_path_buf(), source };
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_documented_mapping() {
        assert_eq!(ExperimentError::Config("x".into()).exit_code(), 2);
        let io = ExperimentError::Io {
            path: PathBuf::from("p"),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        };
        assert_eq!(io.exit_code(), 2);
        assert_eq!(ExperimentError::Guard("x".into()).exit_code(), 3);
        assert_eq!(ExperimentError::PartialFailure { failed: 5, total: 10 }.exit_code(), 4);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert!(!path.with_extension("tmp").exists());
    }
}
