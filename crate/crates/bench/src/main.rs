use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resn_bench::report::{pairwise_tests, summary_table};
use resn_bench::{emit_report, read_runs, run_experiment, ExperimentConfig, Metric, Result};

#[derive(Parser)]
#[command(
    name = "resn-bench",
    version,
    about = "Run and analyse architecture-search experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every method × repetition of a config and write the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print per-method summaries of a runs.csv.
    Summarize {
        #[arg(long)]
        runs: PathBuf,
    },
    /// Print pairwise rank-sum p-values of a runs.csv.
    Compare {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, default_value = "mae", value_parser = ["mae", "mse", "mape"])]
        metric: String,
    },
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.6}"))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let records = run_experiment(&cfg)?;
            emit_report(&records, &cfg.hash(), &cfg.output_dir)?;
            println!(
                "{} runs written to {}",
                records.len(),
                cfg.output_dir.display()
            );
        }
        Command::Summarize { runs } => {
            let records = read_runs(&runs)?;
            println!(
                "{:<8} {:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
                "method", "n", "metric", "mean", "median", "max", "min", "sd"
            );
            for (method, stats) in summary_table(&records)? {
                for (name, s) in ["mae", "mse", "mape", "time_min"].iter().zip(stats) {
                    println!(
                        "{:<8} {:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
                        method.to_string(),
                        s.map_or(0, |s| s.n),
                        name,
                        fmt_opt(s.map(|s| s.mean)),
                        fmt_opt(s.map(|s| s.median)),
                        fmt_opt(s.map(|s| s.max)),
                        fmt_opt(s.map(|s| s.min)),
                        fmt_opt(s.map(|s| s.sd)),
                    );
                }
            }
        }
        Command::Compare { runs, metric } => {
            let metric: Metric = metric.parse()?;
            let records = read_runs(&runs)?;
            for (a, b, p) in pairwise_tests(&records, metric)? {
                println!("{a} vs {b} ({}): p = {p:.6}", metric.name());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprint!(": {s}");
                source = s.source();
            }
            eprintln!();
            ExitCode::FAILURE
        }
    }
}
