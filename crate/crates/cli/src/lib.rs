//! Experiment runner behind the `stablekern` binary.
//!
//! A run reads a config, executes one command and writes into the output
//! directory:
//!
//! * `manifest.toml`: the resolved config plus version and timestamp; it
//!   parses back to the same config.
//! * `results.csv`: one row per reported metric.
//! * `summary.json`: pass/fail, failed rows and rate fits.
//! * `slices/*.csv` and `panels/*.skp` when enabled in `[output]`.

pub mod config;
mod commands;
pub mod report;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub use config::{version_string, Command, ConfigError, ExperimentConfig};
pub use report::{Check, Report, ResultRow};

/// Command-line overrides of a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub elapsed: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(stablekern::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(stablekern::Error::Config(_)) => 2,
            RunError::Numeric(_) | RunError::Io(_) => 3,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    mode: &'a str,
    version: String,
    seed: u64,
    pass: bool,
    elapsed_seconds: f64,
    failures: Vec<&'a ResultRow>,
    fits: &'a std::collections::BTreeMap<String, stablekern::RateFit>,
    rows: usize,
}

/// Runs a resolved config and writes its outputs.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.experiment.seed = seed;
    }
    cfg.validate()?;
    fs::create_dir_all(&opts.out_dir)?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    fs::write(opts.out_dir.join("manifest.toml"), cfg.manifest(timestamp))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::Numeric(stablekern::Error::Config(format!("thread pool: {e}"))))?;
    let start = Instant::now();
    let report = pool
        .install(|| commands::dispatch(&cfg, &opts.out_dir))
        .map_err(RunError::Numeric)?;
    let elapsed = start.elapsed();

    report.write_csv(BufWriter::new(fs::File::create(opts.out_dir.join("results.csv"))?))?;
    let summary = Summary {
        command: cfg.experiment.command.name(),
        mode: &cfg.experiment.mode,
        version: version_string(),
        seed: cfg.experiment.seed,
        pass: report.passed(),
        elapsed_seconds: elapsed.as_secs_f64(),
        failures: report.failures(),
        fits: &report.fits,
        rows: report.rows.len(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(std::io::Error::other)?;
    fs::write(opts.out_dir.join("summary.json"), json + "\n")?;
    Ok(RunOutcome { report, elapsed })
}

/// Parses `path` and runs it. `command` must agree with the file's
/// `experiment.command` when both are given.
pub fn run_file(path: &Path, command: Option<Command>, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Syntax(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text, command)?;
    run(&cfg, opts)
}
