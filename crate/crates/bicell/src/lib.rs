//! Coupled two-cell Brusselator: simulator plus estimate-verification toolkit.
//!
//! Two identical Brusselator compartments (u, v) and (w, z) exchange mass at
//! linear rates D1 (u <-> w) and D2 (v <-> z) while each pair diffuses and
//! reacts on a 1D interval or 2D rectangle with homogeneous Dirichlet walls:
//!
//! ```text
//! u_t = d1 Lap u + a - (b+1) u + u^2 v + D1 (w - u)
//! v_t = d2 Lap v + b u - u^2 v       + D2 (z - v)
//! w_t = d1 Lap w + a - (b+1) w + w^2 z + D1 (u - w)
//! z_t = d2 Lap z + b w - w^2 z       + D2 (v - z)
//! ```
//!
//! Beyond time integration, the crate evaluates the closed-form dissipation
//! constants of this system (decay envelopes, absorbing-set radii, tail-mass
//! and truncated-gradient bounds, trace-based attractor dimension) and checks
//! each inequality along simulated trajectories.
//!
//! Module map:
//! - [`discretization`]: grids, the Dirichlet Laplacian, Helmholtz solves,
//!   quadrature, and the spectral/embedding constants every bound consumes.
//! - [`state_fields`]: the four-field state, grouping transforms, norms, and
//!   sublevel-set (tail / masked-gradient) functionals.
//! - [`dynamics`]: reaction kinetics, IMEX steppers, trajectories, initial
//!   data presets, and the decoupled single-cell reference solver.
//! - [`dissipation_diagnostics`]: absorbing-set constants and inequality
//!   checkers with per-sample margins.
//! - [`variational_dimension`]: tangent bundles along a base trajectory, the
//!   trace functional q_m, and the closed-form dimension bound.
//! - [`experiment_runner`]: config parsing, orchestration, sweeps, and the
//!   CSV / snapshot / summary file formats.
//!
//! Start with the runnable examples (`cargo run --example <name>`):
//! `absorbing_constants`, `decay_envelope`, `absorption_entry`,
//! `grouped_dissipation`, `tail_bounds`, `truncated_h1`, `embedding_constant`,
//! `single_cell_vs_coupled`, `trace_dimension`, `snapshot_roundtrip`,
//! `parameter_sweep`. The `bicell` binary exposes the same pipeline as a CLI
//! (`simulate`, `verify`, `trace`, `bounds`, `sweep`).

pub mod discretization;
pub mod dissipation_diagnostics;
pub mod dynamics;
pub mod experiment_runner;
pub mod state_fields;
pub mod variational_dimension;

mod error;

pub use error::BicellError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, BicellError>;
