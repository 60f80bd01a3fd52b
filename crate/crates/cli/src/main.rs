//! `qcorr`: exact and rotating-wave dynamics of two-qubit entanglement and
//! quantum discord in Lorentzian baths.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical-tolerance
//! abort.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use qcorr_cli::csvout::{converge_csv, sweep_csv, time_series_csv, write_atomic};
use qcorr_cli::{load_scenario, run_converge, run_scenario, run_sweep, Scenario};
use qcorr_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "qcorr",
    about = "Two-qubit entanglement and discord dynamics in Lorentzian baths \
             (hierarchy, rotating-wave, and pseudomode solvers)",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its time-series CSV.
    Simulate {
        /// Scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scenario across a comma-separated λ grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated coupling strengths, e.g. `0.5,1.0,2.0`.
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for the smallest converged hierarchy depth and step size.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Convergence tolerance on the concurrence and discord series.
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Simulate { config, out } => simulate(&config, out),
        Cmd::Sweep {
            config,
            lambda,
            out,
        } => sweep(&config, &lambda, out),
        Cmd::Converge { config, tol, out } => converge_cmd(&config, tol, out),
    };
    match outcome {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_numerical() { 2 } else { 1 });
        }
    }
}

fn resolve_out(sc: &Scenario, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| sc.output.clone()).ok_or_else(|| {
        Error::InvalidInput(
            "no output path: set `output` in the config or pass --out".into(),
        )
    })
}

fn simulate(config: &std::path::Path, out: Option<PathBuf>) -> Result<()> {
    let sc = load_scenario(config)?;
    let path = resolve_out(&sc, out)?;
    let series = run_scenario(&sc)?;
    write_atomic(&path, &time_series_csv(&series))?;
    println!("wrote {} ({} rows)", path.display(), series.rows.len());
    Ok(())
}

fn parse_lambda_grid(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|s| {
            let tok = s.trim();
            tok.parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("--lambda: `{tok}` is not a number"))
            })
        })
        .collect()
}

fn sweep(config: &std::path::Path, lambda: &str, out: Option<PathBuf>) -> Result<()> {
    let sc = load_scenario(config)?;
    let path = resolve_out(&sc, out)?;
    let grid = parse_lambda_grid(lambda)?;
    let result = run_sweep(&sc, &grid)?;
    for (lambda, msg) in &result.failures {
        eprintln!("sweep point lambda = {lambda} failed: {msg}");
    }
    if result.points.is_empty() {
        return Err(Error::Numerical(
            "every sweep point failed; no output written".into(),
        ));
    }
    write_atomic(&path, &sweep_csv(&result))?;
    println!(
        "wrote {} ({} of {} points)",
        path.display(),
        result.points.len(),
        grid.len()
    );
    Ok(())
}

fn converge_cmd(config: &std::path::Path, tol: f64, out: Option<PathBuf>) -> Result<()> {
    let sc = load_scenario(config)?;
    let path = resolve_out(&sc, out)?;
    let result = run_converge(&sc, tol)?;
    write_atomic(&path, &converge_csv(&result))?;
    println!(
        "converged: N = {}, dt = {} ({} probes); wrote {}",
        result.report.depth,
        result.report.dt,
        result.report.steps.len(),
        path.display()
    );
    Ok(())
}
