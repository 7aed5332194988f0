use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use mhfem::report::{render, run, write_outputs, Denominator, Format, RunConfig};

/// Multiharmonic finite element runs with guaranteed error and cost majorants.
#[derive(Debug, Parser)]
#[command(name = "mhfem", version)]
struct Cli {
    /// Example number (1, 2 or 3).
    #[arg(long, default_value_t = 1)]
    example: u8,
    /// Comma separated grid sizes, each a multiple of 2.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    grids: Vec<usize>,
    /// Truncation index N; modes 0..=N are solved.
    #[arg(long, default_value_t = 0)]
    modes: usize,
    /// Relative MINRES tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Threads used for solving modes in parallel.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Directory for results.csv, results.jsonl and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format printed to standard output.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Append the aggregate row over all modes.
    #[arg(long)]
    overall: bool,
    /// Error measure in the efficiency index of the state/adjoint majorant.
    #[arg(long, value_enum, default_value_t = Denominator::H1semi)]
    denominator: Denominator,
    /// Include wall-clock seconds in the output (breaks byte-identical reruns).
    #[arg(long)]
    timings: bool,
    /// Refinement factor of the reference grid for example 3.
    #[arg(long, default_value_t = 2)]
    reference_factor: usize,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let config = RunConfig {
        example: cli.example,
        grids: cli.grids,
        modes: cli.modes,
        tol: cli.tol,
        max_iter: cli.max_iter,
        workers: cli.workers,
        out: cli.out,
        format: cli.format,
        overall: cli.overall,
        denominator: cli.denominator,
        timings: cli.timings,
        reference_factor: cli.reference_factor,
        ..RunConfig::default()
    };
    let report = run(&config)?;
    if let Some(dir) = &config.out {
        write_outputs(&report, dir).with_context(|| format!("writing results to {}", dir.display()))?;
    }
    print!("{}", render(&report, config.format)?);
    for f in &report.failures {
        eprintln!("solver failure: {f}");
    }
    Ok(report.success())
}
