use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use kmexp_cli::commands::{self, TestArgs};
use kmexp_cli::{CliError, CliResult};

/// Tests of exponentiality for randomly right-censored lifetimes.
#[derive(Debug, Parser)]
#[command(name = "kmexp", version)]
struct Cli {
    /// Worker threads for bootstrap and Monte Carlo work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bootstrap p-values of the selected statistics.
    Test {
        /// CSV file with header `time,delta`.
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated statistics: ks, cm, co, ep, l, b, h or labels such as L_0.25.
        #[arg(long, value_delimiter = ',')]
        stats: Option<Vec<String>>,
        /// Comma-separated tuning values for l, b and h.
        #[arg(long = "a", value_delimiter = ',')]
        a: Option<Vec<f64>>,
        /// Bootstrap replications.
        #[arg(long = "B", default_value_t = 10_000)]
        replications: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Kaplan-Meier step table (time, delta, survival, jump) as CSV.
    Km {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run a power-study grid described by a JSON file.
    Power {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; a cell cache there lets interrupted runs resume.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let stdout = io::stdout();
    match cli.command {
        Command::Test {
            input,
            stats,
            a,
            replications,
            alpha,
            seed,
            json,
        } => {
            let statistics = commands::select_statistics(stats.as_deref(), a.as_deref())?;
            let started = Instant::now();
            let report = commands::run_test(&TestArgs {
                input,
                statistics,
                replications,
                alpha,
                seed,
            })?;
            let mut out = stdout.lock();
            let text = if json {
                report.to_json()
            } else {
                format!("{}\nwall time {:.2} s", report.to_text(), started.elapsed().as_secs_f64())
            };
            writeln!(out, "{text}").map_err(|e| CliError::io("writing report", e))?;
        }
        Command::Km { input } => commands::run_km(&input, stdout.lock())?,
        Command::Power { config, out } => {
            let summary = commands::run_power(&config, &out)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{} cells computed, {} reused from cache",
                summary.computed_cells, summary.cached_cells
            );
            let mut out = stdout.lock();
            for f in &summary.files {
                writeln!(out, "{}", f.display()).map_err(|e| CliError::io("writing file list", e))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
