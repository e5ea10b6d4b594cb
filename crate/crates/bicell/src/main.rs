//! Thin command-line front end over the library.
//!
//! Exit codes: 0 all diagnostics pass, 1 a diagnostic failed, 2 usage or
//! configuration error, 3 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bicell::experiment_runner::{
    parse_config, run_experiment, sweep, write_bounds_summary, DiagnosticFlags, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "bicell",
    version,
    about = "Coupled two-cell reaction-diffusion simulator and estimate checker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system and write time series, snapshots, and a summary.
    Simulate(CommonArgs),
    /// Simulate and evaluate every diagnostic enabled in the config.
    Verify(CommonArgs),
    /// Estimate the volume-growth trace q_m along a trajectory.
    Trace(CommonArgs),
    /// Report the closed-form constants without simulating.
    Bounds(CommonArgs),
    /// Run the Cartesian product of the `sweep.<key>` axes in the config.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed` from the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps (0 or omitted picks the default).
    #[arg(long)]
    workers: Option<usize>,
}

fn load(args: &CommonArgs) -> bicell::Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> bicell::Result<u8> {
    match cli.command {
        Command::Simulate(args) => {
            let mut cfg = load(&args)?;
            cfg.checks = DiagnosticFlags::none();
            let report = run_experiment(&cfg)?;
            println!(
                "simulate: ok ({} steps to t = {}, outputs in {})",
                report.steps,
                report.final_time,
                cfg.out_dir.display()
            );
            Ok(0)
        }
        Command::Verify(args) => {
            let cfg = load(&args)?;
            let report = run_experiment(&cfg)?;
            for line in report.pass_lines() {
                println!("{line}");
            }
            if report.all_pass() {
                println!("verify: PASS");
                Ok(0)
            } else {
                println!("verify: FAIL ({})", report.failures().join(", "));
                Ok(1)
            }
        }
        Command::Trace(args) => {
            let mut cfg = load(&args)?;
            cfg.checks = DiagnosticFlags::none();
            cfg.checks.trace = true;
            let report = run_experiment(&cfg)?;
            let trace = report.trace.as_ref().expect("trace diagnostic enabled");
            println!(
                "trace: m = {}, q_m = {:.6e} over {} time units ({} intervals, gram residual {:.3e})",
                trace.m, trace.q_m, trace.duration, trace.intervals, trace.worst_gram_residual
            );
            Ok(0)
        }
        Command::Bounds(args) => {
            let cfg = load(&args)?;
            let text = write_bounds_summary(&cfg)?;
            print!("{text}");
            Ok(0)
        }
        Command::Sweep(args) => {
            let text = fs::read_to_string(&args.config)?;
            let report = sweep(
                &text,
                args.out.as_deref(),
                args.seed,
                args.workers.unwrap_or(0),
            )?;
            for row in &report.rows {
                let detail = if row.detail.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", row.detail)
                };
                println!(
                    "run {:04} [{}]: {}{detail}",
                    row.index,
                    row.assignments
                        .iter()
                        .map(|(k, v)| format!("{k} = {v}"))
                        .collect::<Vec<_>>()
                        .join(", "),
                    row.status.name()
                );
            }
            println!("sweep: aggregate written to {}", report.aggregate_path.display());
            Ok(report.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
