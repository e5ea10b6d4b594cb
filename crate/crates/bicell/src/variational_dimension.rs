//! Linearized dynamics along a trajectory and volume-growth trace estimates.
//!
//! The first variation of the reaction term is propagated alongside a base
//! solution for a bundle of tangent frames.  Periodic reorthonormalization in
//! the product L2 inner product keeps the bundle well conditioned, and the
//! time-averaged trace of the linearized generator over the bundle estimates
//! the uniform m-dimensional volume growth rate q_m.  A closed-form routine
//! turns the analytic ingredients (gradient bound, interpolation constant,
//! spectral lower bound) into an integer bound on the attractor dimension.

use std::sync::Arc;

use crate::discretization::{check_same_grid, dirichlet_energy, inner_product, Field, Grid};
use crate::dynamics::{imex_step, implicit_diffusion, StepperConfig, Trajectory};
use crate::state_fields::{FieldQuartet, ModelParams};
use crate::{BicellError, Result};

/// Linearization of the reaction and coupling terms around `base`, applied to
/// `tangent`.
pub fn variational_rhs(
    base: &FieldQuartet,
    tangent: &FieldQuartet,
    params: &ModelParams,
) -> Result<FieldQuartet> {
    check_same_grid(&base.u, &tangent.u)?;
    let grid = base.grid().clone();
    let b1 = params.b + 1.0;
    let mut out = FieldQuartet::zeros(&grid);
    for i in 0..grid.node_count() {
        let (u, v) = (base.u.values()[i], base.v.values()[i]);
        let (w, z) = (base.w.values()[i], base.z.values()[i]);
        let (tu, tv) = (tangent.u.values()[i], tangent.v.values()[i]);
        let (tw, tz) = (tangent.w.values()[i], tangent.z.values()[i]);
        let quad_uv = 2.0 * u * v * tu + u * u * tv;
        let quad_wz = 2.0 * w * z * tw + w * w * tz;
        out.u.values_mut()[i] = -b1 * tu + quad_uv + params.big_d1 * (tw - tu);
        out.v.values_mut()[i] = params.b * tu - quad_uv + params.big_d2 * (tz - tv);
        out.w.values_mut()[i] = -b1 * tw + quad_wz + params.big_d1 * (tu - tw);
        out.z.values_mut()[i] = params.b * tw - quad_wz + params.big_d2 * (tv - tz);
    }
    Ok(out)
}

/// Inner product on quartets: sum of componentwise weighted L2 inner products.
pub fn quartet_inner(a: &FieldQuartet, b: &FieldQuartet) -> Result<f64> {
    let grid = a.grid();
    let mut total = 0.0;
    for (fa, fb) in a.components().iter().zip(b.components()) {
        total += inner_product(grid, fa, fb)?;
    }
    Ok(total)
}

/// Deterministic orthonormal tangent frames: frame j carries sine mode
/// j/4 + 1 in component j mod 4, so distinct frames never overlap.
pub fn initial_frames(grid: &Arc<Grid>, m: usize) -> Result<Vec<FieldQuartet>> {
    if m == 0 {
        return Err(BicellError::InvalidArgument(
            "frame count must be at least 1".into(),
        ));
    }
    let max_modes = grid.axis(0).count;
    if m > 4 * max_modes {
        return Err(BicellError::InvalidArgument(format!(
            "frame count {m} exceeds 4 x {max_modes} available first-axis modes"
        )));
    }
    let mut frames = Vec::with_capacity(m);
    for j in 0..m {
        let mode = vec![j / 4 + 1; grid.dim()];
        let shape = Field::sine_mode(grid, &mode);
        let norm = inner_product(grid, &shape, &shape)?.sqrt();
        let mut frame = FieldQuartet::zeros(grid);
        let unit = shape.scale(1.0 / norm);
        match j % 4 {
            0 => frame.u = unit,
            1 => frame.v = unit,
            2 => frame.w = unit,
            _ => frame.z = unit,
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Modified Gram-Schmidt in the quartet inner product; errors at `t` if a
/// frame collapses onto the span of the previous ones.
pub fn orthonormalize(frames: &mut [FieldQuartet], t: f64) -> Result<()> {
    for j in 0..frames.len() {
        for i in 0..j {
            let proj = quartet_inner(&frames[j], &frames[i])?;
            frames[j] = frames[j].add_scaled(-proj, &frames[i])?;
        }
        let norm_sq = quartet_inner(&frames[j], &frames[j])?;
        if norm_sq.is_nan() || norm_sq <= 1e-28 {
            return Err(BicellError::Degeneracy {
                t,
                detail: format!("tangent frame {j} collapsed during reorthonormalization"),
            });
        }
        frames[j] = frames[j].scale(1.0 / norm_sq.sqrt());
    }
    Ok(())
}

/// Largest deviation of the frame Gram matrix from the identity.
pub fn gram_residual(frames: &[FieldQuartet]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for i in 0..frames.len() {
        for j in i..frames.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((quartet_inner(&frames[i], &frames[j])? - target).abs());
        }
    }
    Ok(worst)
}

/// Sum over frames of the quadratic form of the linearized generator:
/// diffusion Dirichlet energies plus the reaction linearization pairing.
pub fn trace_sum(
    base: &FieldQuartet,
    frames: &[FieldQuartet],
    params: &ModelParams,
) -> Result<f64> {
    let grid = base.grid();
    let mut total = 0.0;
    for frame in frames {
        let reaction = variational_rhs(base, frame, params)?;
        total += -params.d1 * dirichlet_energy(grid, &frame.u)?
            - params.d2 * dirichlet_energy(grid, &frame.v)?
            - params.d1 * dirichlet_energy(grid, &frame.w)?
            - params.d2 * dirichlet_energy(grid, &frame.z)?
            + quartet_inner(&reaction, frame)?;
    }
    Ok(total)
}

// One tangent step: forward-Euler reaction linearization, then implicit
// diffusion over dt.  First order in dt regardless of the base scheme, which
// is enough because traces are read at reorthonormalized instants.
fn tangent_step(
    base: &FieldQuartet,
    tangent: &FieldQuartet,
    params: &ModelParams,
    dt: f64,
) -> Result<FieldQuartet> {
    let reaction = variational_rhs(base, tangent, params)?;
    let stage = tangent.add_scaled(dt, &reaction)?;
    implicit_diffusion(base.grid(), &stage, params, dt)
}

/// Phase lengths for a trace run, in model time.
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    /// Base-only integration before tangents are attached.
    pub settle: f64,
    /// Co-evolution for subspace alignment, without accumulation.
    pub align: f64,
    /// Accumulation window over which q_m is averaged.
    pub measure_for: f64,
    /// Steps between reorthonormalizations (also the trace sampling cadence).
    pub reorth_every: usize,
    /// Largest tolerated Gram deviation right after reorthonormalization.
    pub gram_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            settle: 5.0,
            align: 2.0,
            measure_for: 10.0,
            reorth_every: 10,
            gram_tol: 1e-10,
        }
    }
}

/// Result of a trace accumulation run.
#[derive(Debug, Clone)]
pub struct TraceEstimate {
    /// Number of tangent frames.
    pub m: usize,
    /// Time-averaged trace of the linearized generator over the bundle.
    pub q_m: f64,
    /// Length of the accumulation window actually integrated.
    pub duration: f64,
    /// Number of piecewise-constant accumulation intervals.
    pub intervals: usize,
    /// Worst Gram residual observed right after any reorthonormalization.
    pub worst_gram_residual: f64,
}

// Shared accumulation loop; `advance_base` evolves the base state in place
// over one dt (or leaves it frozen).
fn run_trace<FBase>(
    base0: FieldQuartet,
    params: &ModelParams,
    dt: f64,
    m: usize,
    opts: &TraceOptions,
    mut advance_base: FBase,
) -> Result<TraceEstimate>
where
    FBase: FnMut(&mut FieldQuartet, f64) -> Result<()>,
{
    if opts.reorth_every == 0 {
        return Err(BicellError::InvalidArgument(
            "reorth_every must be at least 1".into(),
        ));
    }
    if opts.measure_for <= 0.0 || !opts.measure_for.is_finite() {
        return Err(BicellError::InvalidArgument(format!(
            "accumulation window must be positive, got {}",
            opts.measure_for
        )));
    }
    let grid = base0.grid().clone();
    let mut base = base0;
    let mut frames = initial_frames(&grid, m)?;
    let mut t = 0.0;

    let align_steps = (opts.align / dt).round() as usize;
    let measure_steps = ((opts.measure_for / dt).ceil() as usize).max(1);

    for _ in 0..align_steps {
        for frame in frames.iter_mut() {
            *frame = tangent_step(&base, frame, params, dt)?;
        }
        advance_base(&mut base, t)?;
        t += dt;
        // Keep the bundle conditioned during alignment as well.
        orthonormalize(&mut frames, t)?;
    }

    let mut acc = 0.0;
    let mut duration = 0.0;
    let mut intervals = 0usize;
    let mut worst_gram = 0.0_f64;
    let mut step = 0usize;
    while step < measure_steps {
        orthonormalize(&mut frames, t)?;
        let residual = gram_residual(&frames)?;
        worst_gram = worst_gram.max(residual);
        if residual > opts.gram_tol {
            return Err(BicellError::Degeneracy {
                t,
                detail: format!(
                    "Gram residual {residual:.3e} above tolerance {:.3e}",
                    opts.gram_tol
                ),
            });
        }
        let burst = opts.reorth_every.min(measure_steps - step);
        let value = trace_sum(&base, &frames, params)?;
        acc += value * burst as f64 * dt;
        duration += burst as f64 * dt;
        intervals += 1;
        for _ in 0..burst {
            for frame in frames.iter_mut() {
                *frame = tangent_step(&base, frame, params, dt)?;
            }
            advance_base(&mut base, t)?;
            t += dt;
        }
        step += burst;
    }

    Ok(TraceEstimate {
        m,
        q_m: acc / duration,
        duration,
        intervals,
        worst_gram_residual: worst_gram,
    })
}

/// q_m estimate along a co-integrated base trajectory started from `g0`.
pub fn trace_qm(
    g0: &FieldQuartet,
    params: &ModelParams,
    cfg: &StepperConfig,
    m: usize,
    opts: &TraceOptions,
) -> Result<TraceEstimate> {
    let mut base = g0.clone();
    let settle_steps = (opts.settle / cfg.dt).round() as usize;
    let mut t = 0.0;
    for _ in 0..settle_steps {
        base = imex_step(&base, params, cfg, t)?;
        t += cfg.dt;
    }
    run_trace(base, params, cfg.dt, m, opts, |state, tb| {
        *state = imex_step(state, params, cfg, tb)?;
        Ok(())
    })
}

/// q_m estimate with the base state frozen in time (linear autonomous flow).
pub fn trace_qm_frozen(
    base: &FieldQuartet,
    params: &ModelParams,
    dt: f64,
    m: usize,
    opts: &TraceOptions,
) -> Result<TraceEstimate> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(BicellError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    run_trace(base.clone(), params, dt, m, opts, |_, _| Ok(()))
}

/// Largest post-transient squared-gradient sum observed along trajectories;
/// empirical stand-in for the analytic gradient bound on the attractor.
pub fn attractor_gradient_bound(trajectories: &[&Trajectory], burn_in: f64) -> f64 {
    let mut worst = 0.0_f64;
    for traj in trajectories {
        for obs in &traj.observables {
            if obs.t + 1e-12 >= burn_in {
                worst = worst.max(obs.grad_sq.iter().sum());
            }
        }
    }
    worst
}

/// Analytic ingredients for the closed-form dimension bound.
#[derive(Debug, Clone, Copy)]
pub struct DimensionInputs {
    /// Spatial dimension n (1, 2, or 3).
    pub n: usize,
    /// Domain measure.
    pub measure: f64,
    /// Smaller diffusion rate, min(d1, d2).
    pub d0: f64,
    /// Linear kinetic rate b.
    pub b: f64,
    /// Uniform squared-gradient bound on the attractor.
    pub k1: f64,
    /// Embedding constant bounding the squared L4 norm by the squared
    /// gradient norm.
    pub delta: f64,
    /// Interpolation constant for the quartic-gradient estimate.
    pub c_gn: f64,
    /// Spectral lower-bound constant for orthonormal families.
    pub k3: f64,
    /// Whether k3 was calibrated rather than left at its default.
    pub k3_calibrated: bool,
}

impl DimensionInputs {
    /// Inputs from model parameters, a gradient bound, and an embedding
    /// constant, with default interpolation and spectral constants
    /// (c_gn = sqrt(delta), k3 = 1, flagged uncalibrated).
    pub fn from_model(
        params: &ModelParams,
        n: usize,
        measure: f64,
        k1: f64,
        delta: f64,
    ) -> Result<Self> {
        DimensionInputs {
            n,
            measure,
            d0: params.d1.min(params.d2),
            b: params.b,
            k1,
            delta,
            c_gn: delta.sqrt(),
            k3: 1.0,
            k3_calibrated: false,
        }
        .validated()
    }

    /// Validates ranges and returns the inputs unchanged.
    pub fn validated(self) -> Result<Self> {
        if self.n == 0 || self.n > 3 {
            return Err(BicellError::InvalidArgument(format!(
                "spatial dimension must be 1, 2, or 3, got {}",
                self.n
            )));
        }
        for (name, value) in [
            ("measure", self.measure),
            ("d0", self.d0),
            ("delta", self.delta),
            ("c_gn", self.c_gn),
            ("k3", self.k3),
        ] {
            if value <= 0.0 || !value.is_finite() {
                return Err(BicellError::InvalidArgument(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        for (name, value) in [("b", self.b), ("k1", self.k1)] {
            if value < 0.0 || !value.is_finite() {
                return Err(BicellError::InvalidArgument(format!(
                    "{name} must be nonnegative and finite, got {value}"
                )));
            }
        }
        Ok(self)
    }
}

/// Closed-form dimension bound derived from the trace estimate.
#[derive(Debug, Clone, Copy)]
pub struct DimensionBound {
    /// Young-inequality remainder max_s (c s^(n/2) - (d0/2) s^2).
    pub k2: f64,
    /// Real threshold whose next integer gives the frame count.
    pub x: f64,
    /// Smallest integer m with a strictly negative trace bound.
    pub m: usize,
    /// Hausdorff dimension bound (= m).
    pub hausdorff: usize,
    /// Fractal dimension bound (= 2m).
    pub fractal: usize,
    /// Echo of the calibration flag from the inputs.
    pub k3_calibrated: bool,
}

// Peak of c s^p - kappa s^2 over s >= 0 for 0 < p < 2; zero when c <= 0.
fn young_remainder(c: f64, kappa: f64, p: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let s_star = (c * p / (2.0 * kappa)).powf(1.0 / (2.0 - p));
    c * s_star.powf(p) * (1.0 - p / 2.0)
}

fn k2_of(inputs: &DimensionInputs) -> f64 {
    young_remainder(
        5.0 * inputs.delta * inputs.k1 * inputs.c_gn * inputs.c_gn,
        inputs.d0 / 2.0,
        inputs.n as f64 / 2.0,
    )
}

/// Upper bound on q_m implied by the inputs, for a given frame count.
pub fn qm_upper_bound(inputs: &DimensionInputs, m: usize) -> f64 {
    let n = inputs.n as f64;
    let mf = m as f64;
    -(inputs.d0 * inputs.k3 / (2.0 * inputs.measure.powf(2.0 / n))) * mf.powf(1.0 + 2.0 / n)
        + (k2_of(inputs) + inputs.b) * mf
}

/// Smallest frame count with guaranteed volume contraction, and the resulting
/// Hausdorff and fractal dimension bounds.
pub fn dimension_bound(inputs: &DimensionInputs) -> Result<DimensionBound> {
    let inputs = inputs.validated()?;
    let n = inputs.n as f64;
    let k2 = k2_of(&inputs);
    let x = (2.0 * (k2 + inputs.b) / (inputs.d0 * inputs.k3)).powf(n / 2.0) * inputs.measure;
    if !x.is_finite() {
        return Err(BicellError::InvalidArgument(format!(
            "dimension threshold is not finite (k2 = {k2})"
        )));
    }
    let m = x.floor() as usize + 1;
    Ok(DimensionBound {
        k2,
        x,
        m,
        hausdorff: m,
        fractal: 2 * m,
        k3_calibrated: inputs.k3_calibrated,
    })
}
