//! Command-line front end: parameter sweeps to CSV, minimum-key-size search,
//! SVG plots, and the built-in verification suites.

use anyhow::Context;
use clap::{Parser, Subcommand};
use keybins_cli::check::{run_suite, SuiteKind};
use keybins_cli::config::ExperimentConfig;
use keybins_cli::plot::emit_plots;
use keybins_cli::sweep::{find_min_key, read_csv, run_sweep, write_csv};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "keybins",
    about = "Cipher-with-limited-key simulation lab: typical-set binning, \
             one-time-pad index masking, exact adversary distortion",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment grid and write one CSV row per cell.
    Sweep {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the smallest key size in the config's grid whose seed-mean
    /// adversary distortion reaches the target.
    MinKey {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Block length to search at.
        #[arg(long)]
        n: usize,
        /// Distortion level the adversary must be forced up to.
        #[arg(long)]
        target: f64,
    },
    /// Render a sweep CSV as an SVG chart.
    Plot {
        /// Input CSV written by `sweep`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in verification suite and print one line per check.
    Check {
        /// Suite name: lemmas, oracle, or figure2.
        #[arg(long)]
        suite: SuiteKind,
    },
}

fn main() -> ExitCode {
    // Honor an explicit worker count before any rayon pool spins up.
    if let Ok(value) = std::env::var("KEYBINS_WORKERS") {
        match value.parse::<usize>() {
            Ok(workers) if workers >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global()
                {
                    eprintln!("error: KEYBINS_WORKERS: {e}");
                    return ExitCode::FAILURE;
                }
            }
            _ => {
                eprintln!("error: KEYBINS_WORKERS must be a positive integer, got {value:?}");
                return ExitCode::FAILURE;
            }
        }
    }

    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = run_sweep(&cfg)?;
            println!(
                "schedule {}: {}",
                outcome.schedule_label, outcome.schedule_status
            );
            let file = std::fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            write_csv(file, &outcome.rows)?;
            println!(
                "wrote {} rows to {}",
                outcome.rows.len(),
                out.display()
            );
            for agg in &outcome.aggregates {
                println!(
                    "n={} k={}: mean distortion {:.6} (min {:.6}, mean gap {:.6}, {} seeds)",
                    agg.n, agg.k, agg.mean_distortion, agg.min_distortion, agg.mean_gap, agg.cells
                );
            }
            if outcome.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for (spec, why) in &outcome.failures {
                    eprintln!(
                        "cell n={} k={} seed={} failed: {why}",
                        spec.n, spec.k, spec.seed
                    );
                }
                eprintln!("{} cell(s) failed", outcome.failures.len());
                Ok(ExitCode::FAILURE)
            }
        }
        Command::MinKey { config, n, target } => {
            let cfg = ExperimentConfig::load(&config)?;
            let search = find_min_key(&cfg, n, target)?;
            for (k, mean) in &search.evaluated {
                println!("k={k}: seed-mean distortion {mean:.6}");
            }
            match search.result {
                Some(k) => {
                    println!(
                        "minimum key size reaching distortion {} at n={}: k={}",
                        search.target, search.n, k
                    );
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!(
                        "no key size in the grid reaches distortion {} at n={}",
                        search.target, search.n
                    );
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Plot { input, out } => {
            let rows = read_csv(&input)?;
            emit_plots(&rows, &out)?;
            println!("wrote {} from {} rows", out.display(), rows.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { suite } => {
            let lines = run_suite(suite);
            let mut ok = true;
            for line in &lines {
                println!("{line}");
                ok &= line.passed;
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
