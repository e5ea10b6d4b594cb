//! Writes a simulation state to the binary snapshot format and reads it back
//! bit-exactly, then prints the layout so the format stays documented by a
//! running program: magic, version, dimension, per-axis counts and extents,
//! time stamp, then the four fields as little-endian f64 rows.

use std::sync::Arc;

use bicell::discretization::Grid;
use bicell::dynamics::{initial_data, simulate, InitialPreset, Scheme, SimulateOptions, StepperConfig};
use bicell::experiment_runner::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
use bicell::state_fields::ModelParams;

fn main() -> bicell::Result<()> {
    let grid = Arc::new(Grid::new(2, &[1.0, 2.0], &[12, 9])?);
    let params = ModelParams::new(0.1, 0.1, 1.0, 1.0, 1.0, 1.0)?;
    let g0 = initial_data(&grid, InitialPreset::Random, 1.5, 31);
    let cfg = StepperConfig::new(1e-3, Scheme::Imex1)?;
    let traj = simulate(&g0, &params, &cfg, 0.25, &SimulateOptions::default())?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("state.bin");
    let t = traj.last_time();
    write_snapshot(&path, t, &traj.final_state)?;

    let bytes = std::fs::read(&path)?;
    let header = 12 + 4 + 4 + grid.dim() * (8 + 8) + 8;
    println!("file size      = {} bytes ({} header + 4 fields x {} nodes x 8)",
        bytes.len(), header, grid.node_count());
    println!("magic          = {:?}", std::str::from_utf8(&SNAPSHOT_MAGIC[..11]).unwrap());
    println!("version        = {SNAPSHOT_VERSION}");
    println!("dim            = {}", grid.dim());
    println!("time stamp     = {t}");

    let (t_back, state) = read_snapshot(&path)?;
    let same_time = t_back == t;
    let mut same_values = true;
    for (a, b) in state.components().iter().zip(traj.final_state.components().iter()) {
        // Bit-exact, not approximately equal: the format must round-trip
        // every f64 payload unchanged.
        same_values &= a
            .values()
            .iter()
            .zip(b.values().iter())
            .all(|(x, y)| x.to_bits() == y.to_bits());
    }
    println!("round trip     : {}", if same_time && same_values { "bit-exact" } else { "MISMATCH" });

    std::process::exit(if same_time && same_values { 0 } else { 1 });
}
