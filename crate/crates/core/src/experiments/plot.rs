//! `plot-data` command: flatten sweep summaries into plain whitespace
//! tables (one per sweep) that gnuplot, matplotlib, or a spreadsheet can
//! read directly. Curves are emitted per-observation — mean Gₙ with its
//! confidence band against the λ̄/n and (d/2)/n references.

use std::path::{Path, PathBuf};

use super::config::dims_slug;
use super::sweep::SweepSummary;
use super::{write_atomic, ExperimentError};

pub const PLOT_HEADER: &str = "# n empirical ci_lo ci_hi bound_over_n regular_over_n";

fn render(summary: &SweepSummary) -> String {
    let mut out = format!("# config_sha256={}\n{PLOT_HEADER}\n", summary.config_sha256);
    for r in &summary.records {
        let n = r.n as f64;
        let mean = r.empirical / n;
        let half = r.ci_halfwidth / n;
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            r.n,
            mean,
            mean - half,
            mean + half,
            r.bound / n,
            r.regular_reference / n,
        ));
    }
    out
}

fn load_summary(path: &Path) -> Result<SweepSummary, ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text)
        .map_err(|source| ExperimentError::Json { path: path.to_path_buf(), source })
}

/// Collect `summary.json` files under `sweep_root`: either the root is a
/// sweep directory itself or a directory of sweep directories.
fn find_summaries(sweep_root: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let direct = sweep_root.join("summary.json");
    if direct.is_file() {
        return Ok(vec![direct]);
    }
    let entries = std::fs::read_dir(sweep_root)
        .map_err(|source| ExperimentError::Io { path: sweep_root.to_path_buf(), source })?;
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("summary.json"))
        .filter(|p| p.is_file())
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(ExperimentError::Config(format!(
            "no sweep summary.json found under {}",
            sweep_root.display()
        )));
    }
    Ok(found)
}

/// Returns the written data files, one per sweep summary.
pub fn run_plot_data(sweep_root: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let summaries = find_summaries(sweep_root)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|source| ExperimentError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::with_capacity(summaries.len());
    for path in summaries {
        let summary = load_summary(&path)?;
        let name =
            format!("curve_{}_{}.dat", dims_slug(summary.dims), &summary.config_sha256[..8]);
        let target = out_dir.join(name);
        write_atomic(&target, render(&summary).as_bytes())?;
        written.push(target);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{geometric_grid, VolumeScalingConfig};
    use crate::experiments::config::ExperimentConfig;
    use crate::experiments::sweep::run_sweep;
    use crate::sim::GibbsConfig;
    use crate::ModelDims;

    fn quick_sweep(root: &Path) -> PathBuf {
        let config = ExperimentConfig {
            dims: ModelDims::new(2, 2, 1, 1).unwrap(),
            delta: 0.05,
            n_grid: vec![50, 120, 260],
            replicates: 30,
            sampler: GibbsConfig { sweeps: 4, burnin: 1, thin: 1, alpha: 1.0, beta: 1.0 },
            estimator: VolumeScalingConfig {
                num_samples: 10_000,
                t_grid: geometric_grid(1e-1, 1e-2, 5),
                include_log_term: true,
                seed: 1,
            },
            master_seed: 3,
            output_dir: root.to_path_buf(),
        };
        run_sweep(&config, root).unwrap().dir
    }

    #[test]
    fn emits_monotone_reference_columns() {
        let root = tempfile::tempdir().unwrap();
        let sweep_dir = quick_sweep(root.path());
        let out = root.path().join("plots");
        let files = run_plot_data(&sweep_dir, &out).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(2)
            .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.len() == 6));
        for pair in rows.windows(2) {
            assert!(pair[1][0] > pair[0][0], "n must increase");
            assert!(pair[1][4] < pair[0][4], "bound_over_n must decrease");
            assert!(pair[1][5] < pair[0][5], "regular_over_n must decrease");
        }
        // ci_lo <= empirical <= ci_hi on every row.
        for r in &rows {
            assert!(r[2] <= r[1] && r[1] <= r[3]);
        }
    }

    #[test]
    fn scans_a_root_of_sweeps_and_rejects_empty_dirs() {
        let root = tempfile::tempdir().unwrap();
        quick_sweep(root.path());
        let out = root.path().join("plots");
        // Passing the root (not the sweep dir) also works.
        let files = run_plot_data(root.path(), &out).unwrap();
        assert_eq!(files.len(), 1);

        let empty = tempfile::tempdir().unwrap();
        let err = run_plot_data(empty.path(), &out).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
