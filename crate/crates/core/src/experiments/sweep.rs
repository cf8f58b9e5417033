//! `sweep` command: the learning-curve experiment. For every n in the
//! configured grid, replicate corpus → posterior → generalization error,
//! then put the empirical curve n·mean(Gₙ) next to the λ̄ bound and the
//! d/2 regular-model reference.
//!
//! Artifacts are designed to be diffed: one JSON file per grid point
//! (which also makes interrupted sweeps resumable), a final CSV and
//! summary JSON whose bytes depend only on the effective config, and a
//! `run_meta.json` that quarantines the wall-clock facts.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::bound_table::frac;
use super::config::ExperimentConfig;
use super::{write_atomic, ExperimentError};
use crate::bounds::{param_dim, rlct_exact, rlct_upper_bound};
use crate::sim::expected_gen_error;
use crate::ModelDims;

/// One grid point of the learning curve, in free-energy units (the
/// empirical column is n·mean(Gₙ), comparable to λ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveRecord {
    pub n: u64,
    pub empirical: f64,
    pub ci_halfwidth: f64,
    pub bound: f64,
    pub bound_frac: String,
    pub exact: Option<f64>,
    pub exact_frac: Option<String>,
    pub regular_reference: f64,
    pub divergent: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub n: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config_sha256: String,
    pub dims: ModelDims,
    pub replicates: usize,
    pub records: Vec<LearningCurveRecord>,
    pub failed_points: Vec<FailedPoint>,
    pub divergent_total: usize,
}

/// Result of a sweep plus where it was written and how much was reused.
#[derive(Debug)]
pub struct SweepOutcome {
    pub summary: SweepSummary,
    pub dir: PathBuf,
    pub points_computed: usize,
    pub points_resumed: usize,
}

/// Persisted per-point state; presence of a valid file with the matching
/// config hash means the point is done.
#[derive(Serialize, Deserialize)]
struct PointFile {
    n: u64,
    config_sha256: String,
    mean: f64,
    ci_halfwidth: f64,
    divergent_count: usize,
    per_replicate: Vec<f64>,
}

pub const CURVE_CSV_HEADER: &str =
    "n,empirical,ci_halfwidth,bound,exact,regular_reference,bound_frac,exact_frac,divergent";

fn curve_csv(summary: &SweepSummary) -> String {
    let mut out = format!("# config_sha256={}\n{CURVE_CSV_HEADER}\n", summary.config_sha256);
    for r in &summary.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.empirical,
            r.ci_halfwidth,
            r.bound,
            r.exact.map(|v| v.to_string()).unwrap_or_default(),
            r.regular_reference,
            r.bound_frac,
            r.exact_frac.clone().unwrap_or_default(),
            r.divergent,
        ));
    }
    out
}

pub fn run_sweep(
    config: &ExperimentConfig,
    out_root: &Path,
) -> Result<SweepOutcome, ExperimentError> {
    config.validate()?;
    if config.replicates < 30 {
        return Err(ExperimentError::Config(format!(
            "sweep needs at least 30 replicates per point, config has {}",
            config.replicates
        )));
    }
    let hash = config.sha256();
    let dims = config.dims;
    let truth = config.ground_truth()?;
    let dir = out_root.join(format!("sweep-{}", &hash[..12]));
    std::fs::create_dir_all(&dir)
        .map_err(|source| ExperimentError::Io { path: dir.clone(), source })?;

    let bar = rlct_upper_bound(dims);
    let exact = rlct_exact(dims);
    let bound = bar.to_f64().expect("small rational");
    let exact_dec = exact.map(|(v, _)| v.to_f64().expect("small rational"));
    if let Some(e) = exact_dec {
        debug_assert!(bound >= e - 1e-12, "bound {bound} below exact {e}");
    }
    let regular = param_dim(dims) as f64 / 2.0;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).expect("clock").as_secs();
    let mut records = Vec::new();
    let mut failed_points = Vec::new();
    let mut divergent_total = 0usize;
    let mut points_computed = 0usize;
    let mut points_resumed = 0usize;

    for &n in &config.n_grid {
        let point_path = dir.join(format!("point_{n:08}.json"));
        let existing: Option<PointFile> = std::fs::read(&point_path)
            .ok()
            .and_then(|bytes| serde_json::from_slice(&bytes).ok())
            .filter(|p: &PointFile| p.config_sha256 == hash && p.n == n);
        let point = match existing {
            Some(point) => {
                points_resumed += 1;
                point
            }
            None => {
                // Per-point seed is offset by n itself so grid points stay
                // independent even though each one spawns replicate streams
                // 1..replicates from its own seed.
                let run = expected_gen_error(
                    &truth,
                    dims.h() as usize,
                    n,
                    config.replicates,
                    &config.sampler,
                    config.master_seed.wrapping_add(n),
                );
                let summary = match run {
                    Ok(s) => s,
                    Err(e) => {
                        failed_points.push(FailedPoint { n, error: e.to_string() });
                        continue;
                    }
                };
                let point = PointFile {
                    n,
                    config_sha256: hash.clone(),
                    mean: summary.mean,
                    ci_halfwidth: summary.ci_halfwidth,
                    divergent_count: summary.divergent_count,
                    per_replicate: summary.per_replicate,
                };
                write_atomic(&point_path, &serde_json::to_vec_pretty(&point).expect("serializes"))?;
                points_computed += 1;
                point
            }
        };
        divergent_total += point.divergent_count;
        records.push(LearningCurveRecord {
            n,
            empirical: n as f64 * point.mean,
            ci_halfwidth: n as f64 * point.ci_halfwidth,
            bound,
            bound_frac: frac(&bar),
            exact: exact_dec,
            exact_frac: exact.map(|(v, _)| frac(&v)),
            regular_reference: regular,
            divergent: point.divergent_count,
        });
    }

    let summary = SweepSummary {
        config_sha256: hash,
        dims,
        replicates: config.replicates,
        records,
        failed_points,
        divergent_total,
    };
    write_atomic(
        &dir.join("summary.json"),
        &serde_json::to_vec_pretty(&summary).expect("serializes"),
    )?;
    write_atomic(&dir.join("learning_curve.csv"), curve_csv(&summary).as_bytes())?;
    let finished = SystemTime::now().duration_since(UNIX_EPOCH).expect("clock").as_secs();
    let meta = serde_json::json!({
        "started_unix_secs": started,
        "finished_unix_secs": finished,
        "points_computed": points_computed,
        "points_resumed": points_resumed,
    });
    write_atomic(&dir.join("run_meta.json"), &serde_json::to_vec_pretty(&meta).expect("json"))?;

    let total = config.n_grid.len() * config.replicates;
    let failed = divergent_total + summary.failed_points.len() * config.replicates;
    if failed * 10 > total {
        return Err(ExperimentError::PartialFailure { failed, total });
    }
    Ok(SweepOutcome { summary, dir, points_computed, points_resumed })
}
