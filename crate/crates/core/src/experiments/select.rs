//! `select` command: fit every candidate topic count with collapsed Gibbs
//! and pick the one minimizing the penalized score
//! `n·fit(H) + λ̄(M,N,H,H)·log n`. The corpus comes either from a dataset
//! file or is generated from the configured truth.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bound_table::parse_range;
use super::config::ExperimentConfig;
use super::{write_atomic, ExperimentError};
use crate::bounds::{select_num_topics, SelectionRow};
use crate::sim::{collapsed_gibbs, generate_dataset, WordDataset};

#[derive(Clone, Debug, Serialize)]
pub struct SelectReport {
    pub config_sha256: String,
    /// `"generated"` or the dataset file path.
    pub source: String,
    pub num_outcomes: usize,
    pub num_docs: usize,
    pub n: u64,
    pub h_range: (u32, u32),
    pub rows: Vec<SelectionRow>,
    pub chosen_h: u32,
    pub low_confidence: bool,
}

impl SelectReport {
    pub fn table(&self) -> String {
        let mut out = String::from("H  fit_per_obs  lambda_bar  score\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{:<2} {:<12.6} {:<11} {:.3}\n",
                row.h, row.fit, row.lambda_bar, row.score
            ));
        }
        out.push_str(&format!("chosen H = {}", self.chosen_h));
        if self.low_confidence {
            out.push_str("  (low confidence: sample too small for the asymptotic score)");
        }
        out.push('\n');
        out
    }
}

/// Mean negative log-likelihood per observation of a posterior predictive.
fn fit_per_obs(ds: &WordDataset, predictive: &ndarray::Array2<f64>) -> f64 {
    let mut total = 0.0;
    for ((i, j), &c) in ds.counts().indexed_iter() {
        if c > 0 {
            total -= c as f64 * predictive[(j, i)].ln();
        }
    }
    total / ds.n() as f64
}

pub fn parse_h_range(text: &str) -> Result<(u32, u32), ExperimentError> {
    let (lo, hi) = parse_range(text, "H")?;
    if lo == 0 {
        return Err(ExperimentError::Config("H range must start at 1 or above".into()));
    }
    Ok((lo, hi))
}

pub fn run_select(
    config: &ExperimentConfig,
    h_range: (u32, u32),
    data: Option<&Path>,
    out_dir: &Path,
) -> Result<SelectReport, ExperimentError> {
    config.validate()?;
    let (h_lo, h_hi) = h_range;
    if h_lo == 0 || h_lo > h_hi {
        return Err(ExperimentError::Config(format!("empty H range {h_lo}..{h_hi}")));
    }
    let (ds, source) = match data {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
            let ds: WordDataset = serde_json::from_str(&text)
                .map_err(|source| ExperimentError::Json { path: path.to_path_buf(), source })?;
            (ds, path.display().to_string())
        }
        None => {
            let truth = config.ground_truth()?;
            let n = *config.n_grid.last().expect("validated non-empty");
            let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
            let ds = generate_dataset(&truth, n, &mut rng)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            (ds, "generated".to_string())
        }
    };
    let (m, n_docs) = (ds.num_outcomes(), ds.num_docs());
    if m < 2 || n_docs < 2 {
        return Err(ExperimentError::Config(format!(
            "selection needs at least a 2x2 count table, got {m}x{n_docs}"
        )));
    }

    let s = &config.sampler;
    let mut fits = Vec::with_capacity((h_hi - h_lo + 1) as usize);
    for h in h_lo..=h_hi {
        // Independent stream per candidate so adding candidates never
        // perturbs the others.
        let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
        rng.set_stream(1000 + h as u64);
        let summary =
            collapsed_gibbs(&ds, h as usize, s.alpha, s.beta, s.sweeps, s.burnin, s.thin, &mut rng)?;
        fits.push((h, fit_per_obs(&ds, summary.predictive())));
    }
    let selection = select_num_topics(m as u32, n_docs as u32, &fits, ds.n())
        .map_err(|e| ExperimentError::Config(e.to_string()))?;

    let report = SelectReport {
        config_sha256: config.sha256(),
        source,
        num_outcomes: m,
        num_docs: n_docs,
        n: ds.n(),
        h_range,
        rows: selection.rows,
        chosen_h: selection.chosen_h,
        low_confidence: selection.low_confidence,
    };
    std::fs::create_dir_all(out_dir)
        .map_err(|source| ExperimentError::Io { path: out_dir.to_path_buf(), source })?;
    write_atomic(
        &out_dir.join("select.json"),
        &serde_json::to_vec_pretty(&report).expect("serializes"),
    )?;
    Ok(report)
}
