//! Estimates the Sobolev embedding constant delta with
//! ||f||_L4^2 <= delta ||f||_H1^2 on Dirichlet grids by seeded gradient
//! ascent over the embedding ratio, and shows the estimate stabilizing
//! under refinement (and shrinking with domain dimension).

use std::sync::Arc;

use bicell::discretization::{embedding_ratio, estimate_embedding_constant, Field, Grid};

fn main() -> bicell::Result<()> {
    println!("1D unit interval:");
    println!("  {:>6} {:>12} {:>14}", "count", "delta", "mode-1 ratio");
    for count in [16usize, 32, 64, 128] {
        let grid = Arc::new(Grid::new(1, &[1.0], &[count])?);
        let delta = estimate_embedding_constant(&grid, 4, 0)?;
        // The principal eigenmode gives a cheap lower reference point.
        let mode = Field::sine_mode(&grid, &[1]);
        let ratio = embedding_ratio(&grid, &mode)?;
        println!("  {count:>6} {delta:>12.6} {ratio:>14.6}");
    }

    println!("\n2D unit square:");
    println!("  {:>10} {:>12}", "counts", "delta");
    for count in [8usize, 16, 24] {
        let grid = Arc::new(Grid::new(2, &[1.0, 1.0], &[count, count])?);
        let delta = estimate_embedding_constant(&grid, 4, 0)?;
        println!("  {:>7}x{:<2} {:>12.6}", count, count, delta);
    }

    Ok(())
}
