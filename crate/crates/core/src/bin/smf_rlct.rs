//! Command-line front-end: bound tables, λ estimation, learning-curve
//! sweeps, topic-count selection, and plot-data export. All heavy lifting
//! lives in the library; this file is argument plumbing and printing.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use smf_rlct::experiments::{
    bounds_to_csv, bounds_to_text, evaluate_all, parse_h_range, run_estimate, run_plot_data,
    run_select, run_sweep, EstimateMethod, ExperimentConfig, ExperimentError, GridSpec,
};
use smf_rlct::ModelDims;

#[derive(Parser)]
#[command(
    name = "smf-rlct",
    version,
    about = "Learning-coefficient bounds, estimators, and Bayesian learning-curve \
             experiments for stochastic matrix factorization / topic models"
)]
struct Cli {
    /// Worker threads for replicate-level parallelism (default: all cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the bound table for one shape or a grid of shapes.
    Bound {
        /// Single shape: M N H H0 (vocabulary, documents, learner topics,
        /// true topics).
        #[arg(value_names = ["M", "N", "H", "H0"], num_args = 0..=4)]
        shape: Vec<u32>,
        /// Inclusive ranges instead, e.g. --grid M=2..4 N=2..4 H0=1..2 H=H0..3
        /// (H may start at the literal `H0` to track each row's true rank).
        #[arg(long, num_args = 1.., conflicts_with = "shape")]
        grid: Vec<String>,
        /// Also write bounds.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate λ for the configured shape and compare it to the bound.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Override the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory (also: SMF_RLCT_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learning-curve sweep over the configured n grid; resumable.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit each candidate topic count and pick one by penalized score.
    Select {
        #[arg(long)]
        config: PathBuf,
        /// Candidate topic counts, inclusive, e.g. 1..4.
        #[arg(long, value_name = "LO..HI")]
        h_range: String,
        /// Score an existing dataset file instead of generating a corpus.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten sweep summaries into plain plotting tables.
    PlotData {
        /// A sweep directory, or a directory containing sweep directories.
        sweep_dir: PathBuf,
        /// Where to put the .dat files (default: SWEEP_DIR/plot_data).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Volume,
    GenError,
    FreeEnergy,
}

impl From<MethodArg> for EstimateMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Volume => EstimateMethod::Volume,
            MethodArg::GenError => EstimateMethod::GenError,
            MethodArg::FreeEnergy => EstimateMethod::FreeEnergy,
        }
    }
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn run(cmd: Cmd) -> Result<(), ExperimentError> {
    match cmd {
        Cmd::Bound { shape, grid, out } => {
            let dims = if !grid.is_empty() {
                GridSpec::parse(&grid)?.enumerate()?
            } else if shape.len() == 4 {
                vec![ModelDims::new(shape[0], shape[1], shape[2], shape[3])
                    .map_err(|e| ExperimentError::Config(e.to_string()))?]
            } else {
                return Err(ExperimentError::Config(
                    "bound needs either four values M N H H0 or --grid ranges".into(),
                ));
            };
            let rows = evaluate_all(&dims);
            print!("{}", bounds_to_text(&rows));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .map_err(|source| ExperimentError::Io { path: dir.clone(), source })?;
                let path = dir.join("bounds.csv");
                std::fs::write(&path, bounds_to_csv(&rows, None))
                    .map_err(|source| ExperimentError::Io { path: path.clone(), source })?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Cmd::Estimate { config, method, seed, out } => {
            let config = load_config(&config, seed)?;
            let out_dir = config.resolved_output_dir(out.as_deref());
            let report = run_estimate(&config, EstimateMethod::from(method), &out_dir)?;
            println!("{}", report.summary_line());
            eprintln!("artifacts in {}", out_dir.display());
            Ok(())
        }
        Cmd::Sweep { config, seed, out } => {
            let config = load_config(&config, seed)?;
            let out_dir = config.resolved_output_dir(out.as_deref());
            let outcome = run_sweep(&config, &out_dir)?;
            for r in &outcome.summary.records {
                println!(
                    "n={:<8} n*mean_G={:<8.4} ci={:<8.4} bound={} regular={}",
                    r.n, r.empirical, r.ci_halfwidth, r.bound, r.regular_reference
                );
            }
            for f in &outcome.summary.failed_points {
                eprintln!("point n={} failed: {}", f.n, f.error);
            }
            eprintln!(
                "sweep {} ({} computed, {} resumed)",
                outcome.dir.display(),
                outcome.points_computed,
                outcome.points_resumed
            );
            Ok(())
        }
        Cmd::Select { config, h_range, data, seed, out } => {
            let config = load_config(&config, seed)?;
            let out_dir = config.resolved_output_dir(out.as_deref());
            let range = parse_h_range(&h_range)?;
            let report = run_select(&config, range, data.as_deref(), &out_dir)?;
            print!("{}", report.table());
            eprintln!("report in {}", out_dir.join("select.json").display());
            Ok(())
        }
        Cmd::PlotData { sweep_dir, out } => {
            let out_dir = out.unwrap_or_else(|| sweep_dir.join("plot_data"));
            let files = run_plot_data(&sweep_dir, &out_dir)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore a second initialization (only possible in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    if let Err(e) = run(cli.cmd) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
