use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stablekern_cli::{run_file, Command, RunOptions};

/// Experiments on α-stable heat kernels and the α → 2 limit.
#[derive(Parser)]
#[command(name = "stablekern", version)]
struct Args {
    /// Command to run.
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "STABLEKERN_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = RunOptions {
        out_dir: args.out,
        seed: args.seed,
        threads: args.threads,
    };
    match run_file(&args.config, Some(args.command), &opts) {
        Ok(outcome) => {
            let r = &outcome.report;
            let failures = r.failures();
            for f in &failures {
                eprintln!("FAIL {} [{}] {} = {:e} (want {})", f.metric, f.params, f.experiment, f.value, f.threshold.as_deref().unwrap_or(""));
            }
            println!(
                "{}: {} rows, {} failed, {:.1}s -> {}",
                r.experiment,
                r.rows.len(),
                failures.len(),
                outcome.elapsed.as_secs_f64(),
                opts.out_dir.display()
            );
            if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("stablekern: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
