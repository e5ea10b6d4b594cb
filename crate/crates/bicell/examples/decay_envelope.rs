//! Checks the pointwise decay envelope for the (v, z) pair along a simulated
//! trajectory: the combined mass must stay under
//! exp(-2 gamma d2 t) ||v0, z0||^2 + b^2 |Omega| / (2 gamma d2) at all times.

use std::sync::Arc;

use bicell::discretization::Grid;
use bicell::dissipation_diagnostics::check_vz_decay;
use bicell::dynamics::{initial_data, simulate, InitialPreset, Scheme, SimulateOptions, StepperConfig};
use bicell::state_fields::ModelParams;

fn main() -> bicell::Result<()> {
    let grid = Arc::new(Grid::new(1, &[1.0], &[96])?);
    let params = ModelParams::new(0.05, 0.08, 1.0, 1.5, 0.4, 0.7)?;
    let g0 = initial_data(&grid, InitialPreset::Random, 3.0, 7);

    let cfg = StepperConfig::new(1e-3, Scheme::Imex1)?;
    let traj = simulate(&g0, &params, &cfg, 8.0, &SimulateOptions::default())?;

    let report = check_vz_decay(&traj, &params, 1e-4);
    println!("{}", report.summary_line());

    // Sparse view of observed mass vs. envelope; the envelope flattens at the
    // asymptotic floor b^2 |Omega| / (2 gamma d2) once the exponential dies.
    println!("\n  {:>6} {:>14} {:>14}", "t", "||v,z||^2", "envelope");
    let stride = report.samples.len() / 8;
    for sample in report.samples.iter().step_by(stride.max(1)) {
        println!("  {:>6.2} {:>14.6} {:>14.6}", sample.t, sample.observed, sample.bound);
    }
    let last = report.samples.last().expect("nonempty trajectory");
    println!("  {:>6.2} {:>14.6} {:>14.6}", last.t, last.observed, last.bound);

    std::process::exit(if report.pass { 0 } else { 1 });
}
