//! `hffl` — run and inspect hierarchically fair federated learning
//! experiments.
//!
//! Exit codes: 0 on success, 2 for configuration/usage errors, 3 for
//! runtime failures.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hffl_core::bounds::{delta_for, BoundQuery};
use hffl_core::harness::{
    output_root, run_experiment, summarize, ExperimentConfig, ExperimentKind, RunRecord,
};
use hffl_core::Error;

#[derive(Parser)]
#[command(name = "hffl", version, about = "Hierarchically fair federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
    },
    /// Summarize one or more finished run directories into a CSV table.
    Summarize {
        /// Run directories containing record.json.
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a valuation experiment (a `run` restricted to shapley configs).
    Shapley {
        /// Path to the experiment config (kind must be "shapley").
        config: PathBuf,
    },
    /// Print the generalization-bound table for a grid of inputs.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Sample counts, comma separated (e.g. 200,500,2000).
    #[arg(long = "m", value_delimiter = ',', required = true)]
    samples: Vec<usize>,
    /// Error tolerances, comma separated.
    #[arg(long = "eps", value_delimiter = ',', required = true)]
    epsilons: Vec<f64>,
    /// Model family size |F|.
    #[arg(long = "family-size")]
    family_size: usize,
    /// Loss range as a,b.
    #[arg(long = "range", value_delimiter = ',', default_values_t = [0.0, 1.0])]
    range: Vec<f64>,
    /// Emit CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let usage = e
                .downcast_ref::<Error>()
                .map(Error::is_usage)
                .unwrap_or(false);
            if usage {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config } => run(config, None),
        Command::Shapley { config } => run(config, Some(ExperimentKind::Shapley)),
        Command::Summarize { run_dirs, out } => summarize_dirs(run_dirs, out),
        Command::Bounds(args) => bounds_table(args),
    }
}

fn run(config_path: PathBuf, expected_kind: Option<ExperimentKind>) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(&config_path)?;
    if let Some(kind) = expected_kind {
        if cfg.kind != kind {
            return Err(Error::Usage(format!(
                "{} expects kind = \"{}\", config says \"{}\"",
                kind.as_str(),
                kind.as_str(),
                cfg.kind.as_str()
            ))
            .into());
        }
    }
    let root = output_root();
    let record = run_experiment(&cfg, &root)?;
    let run_dir = root.join(&cfg.output_dir);
    println!("run complete: {}", run_dir.display());
    for agg in &record.aggregates {
        println!("  {}: median {} (std {})", agg.key, agg.median, agg.std);
    }
    if record.aggregates.is_empty() && !record.bound_rows.is_empty() {
        println!("  {} bound rows written", record.bound_rows.len());
    }
    Ok(())
}

fn summarize_dirs(run_dirs: Vec<PathBuf>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let records = run_dirs
        .iter()
        .map(|dir| RunRecord::load(dir))
        .collect::<Result<Vec<_>, _>>()?;
    let table = summarize(&records)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    match out {
        Some(path) => std::fs::write(path, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn bounds_table(args: BoundsArgs) -> anyhow::Result<()> {
    if args.range.len() != 2 {
        return Err(Error::Usage(format!(
            "--range takes exactly two values a,b; got {}",
            args.range.len()
        ))
        .into());
    }
    let range = (args.range[0], args.range[1]);
    let mut rows = Vec::new();
    for &m in &args.samples {
        for &eps in &args.epsilons {
            let q = BoundQuery::new(m, eps, args.family_size, range)?;
            rows.push((m, eps, args.family_size, delta_for(&q)));
        }
    }
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    if args.csv {
        writeln!(w, "samples,epsilon,family_size,delta")?;
        for (m, eps, f, delta) in rows {
            writeln!(w, "{m},{eps},{f},{delta}")?;
        }
    } else {
        writeln!(w, "{:>10} {:>12} {:>12} {:>14}", "samples", "epsilon", "family", "delta")?;
        for (m, eps, f, delta) in rows {
            writeln!(w, "{m:>10} {eps:>12} {f:>12} {delta:>14.8}")?;
        }
    }
    Ok(())
}
