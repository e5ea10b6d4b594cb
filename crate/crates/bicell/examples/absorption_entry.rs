//! Starts well outside the absorbing ball (total mass 4 k0) and verifies the
//! trajectory enters the ball ||g||^2 <= k0 and never leaves it again.

use std::sync::Arc;

use bicell::discretization::Grid;
use bicell::dissipation_diagnostics::{absorbing_constants, check_absorption};
use bicell::dynamics::{initial_data, simulate, InitialPreset, Scheme, SimulateOptions, StepperConfig};
use bicell::state_fields::ModelParams;

fn main() -> bicell::Result<()> {
    let grid = Arc::new(Grid::new(1, &[1.0], &[96])?);
    let params = ModelParams::new(0.1, 0.1, 1.0, 1.0, 1.0, 1.0)?;
    let consts = absorbing_constants(&params, &grid);

    let raw = initial_data(&grid, InitialPreset::Random, 1.0, 11);
    let g0 = raw.scaled_to_total_l2_sq(4.0 * consts.k0);
    println!("k0             = {:.6}", consts.k0);
    println!("initial mass   = {:.6} (= 4 k0)", g0.total_l2_sq());

    let cfg = StepperConfig::new(1e-3, Scheme::Imex1)?;
    let traj = simulate(&g0, &params, &cfg, 30.0, &SimulateOptions::default())?;

    let report = check_absorption(&traj, &consts, 1e-4);
    match report.entry_time {
        Some(t) => println!("entered ball   at t = {t:.3}"),
        None => println!("never entered the ball"),
    }
    println!("sup ||g||^2    = {:.6}", report.sup_total_l2_sq);
    println!("stays inside   = {}", report.stays_inside);
    println!("absorption     : {}", if report.pass { "PASS" } else { "FAIL" });

    std::process::exit(if report.pass { 0 } else { 1 });
}
