//! Verifies the tail-mass estimates behind the asymptotic compactness
//! argument: past the truncation level M1 = k M, the mass of v and z (and of
//! u and w on nodes where the partner component is large) must fit budgets
//! proportional to the chosen accuracy epsilon.

use std::sync::Arc;

use bicell::discretization::Grid;
use bicell::dissipation_diagnostics::{
    absorbing_constants, default_burn_in, tail_bound_report, truncation_levels,
};
use bicell::dynamics::{initial_data, simulate, InitialPreset, Scheme, SimulateOptions, StepperConfig};
use bicell::state_fields::ModelParams;

fn main() -> bicell::Result<()> {
    let grid = Arc::new(Grid::new(1, &[1.0], &[96])?);
    let params = ModelParams::new(0.1, 0.1, 1.0, 1.0, 1.0, 1.0)?;
    let consts = absorbing_constants(&params, &grid);
    let epsilon = 0.1;

    let (base, multiplier, level) = truncation_levels(&consts, &params, epsilon)?;
    println!("epsilon        = {epsilon}");
    println!("base level M   = {base}");
    println!("multiplier k   = {multiplier}");
    println!("level M1 = k M = {level}");
    println!("vz budget      = {:.6} (l1 epsilon)", consts.l1 * epsilon);
    println!("uw budget      = {:.6} (l2 epsilon)", consts.l2 * epsilon);

    let g0 = initial_data(&grid, InitialPreset::Random, 4.0, 13);
    let cfg = StepperConfig::new(1e-3, Scheme::Imex1)?;
    let opts = SimulateOptions { snapshot_stride: 500 };
    let traj = simulate(&g0, &params, &cfg, 12.0, &opts)?;

    let burn_in = default_burn_in(&params, consts.measure, consts.gamma, traj.initial_vz_l2_sq());
    let report = tail_bound_report(&traj, &params, &consts, epsilon, burn_in)?;

    println!("\nburn-in        = {burn_in:.3}");
    match report.first_ok_time {
        Some(t) => println!("both tails fit from t = {t:.3}"),
        None => println!("tails never fit their budgets"),
    }
    println!("worst vz tail  = {:.3e} (budget {:.3e})", report.worst_vz, report.vz_budget);
    println!("worst uw tail  = {:.3e} (budget {:.3e})", report.worst_uw, report.uw_budget);
    println!("tail bounds    : {}", if report.pass { "PASS" } else { "FAIL" });

    std::process::exit(if report.pass { 0 } else { 1 });
}
