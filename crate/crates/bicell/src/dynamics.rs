//! Reaction kinetics, IMEX time steppers, trajectory recording, initial-data
//! presets, and the decoupled single-cell reference solver.
//!
//! Diffusion is always treated implicitly (unconditionally stable), reaction
//! explicitly; the cubic kinetics are nonstiff at bounded amplitudes, so the
//! step size is not limited by the mesh.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{
    apply_laplacian, dirichlet_energy, l2_norm_sq, solve_helmholtz, Field, Grid,
};
use crate::state_fields::{grouping, norms, FieldQuartet, ModelParams};
use crate::{BicellError, Result};

/// Time stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Backward-Euler diffusion + forward-Euler reaction; first order.
    Imex1,
    /// Strang composition: Crank-Nicolson half-step diffusion, explicit
    /// midpoint reaction over the full step, second half-step diffusion;
    /// second order.
    Imex2,
}

/// Kinetics selector: `Full` is the model; the others are test regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticsMode {
    Full,
    /// Linear terms only (cubic u^2 v / w^2 z dropped).
    Linear,
    /// No reaction at all (pure diffusion).
    Off,
}

/// Step size, scheme, blowup guard, and kinetics selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub blowup_threshold: f64,
    pub kinetics: KineticsMode,
}

impl StepperConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(BicellError::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(StepperConfig {
            dt,
            scheme,
            blowup_threshold: 1e8,
            kinetics: KineticsMode::Full,
        })
    }

    /// Default step: 1e-3 * min(1, 1/(b+1), 1/(D1+D2+1)).
    pub fn default_dt(params: &ModelParams) -> f64 {
        1e-3 * 1.0_f64
            .min(1.0 / (params.b + 1.0))
            .min(1.0 / (params.big_d1 + params.big_d2 + 1.0))
    }

    pub fn with_default_dt(params: &ModelParams, scheme: Scheme) -> Self {
        StepperConfig::new(Self::default_dt(params), scheme).expect("default dt is positive")
    }

    pub fn kinetics(mut self, mode: KineticsMode) -> Self {
        self.kinetics = mode;
        self
    }

    pub fn blowup_threshold(mut self, threshold: f64) -> Self {
        assert!(threshold > 0.0, "blowup threshold must be positive");
        self.blowup_threshold = threshold;
        self
    }
}

/// Pointwise reaction vector field F(g) with full kinetics.
pub fn reaction_rhs(g: &FieldQuartet, params: &ModelParams) -> FieldQuartet {
    reaction_rhs_mode(g, params, KineticsMode::Full)
}

/// Pointwise reaction vector field under the chosen kinetics mode.
pub fn reaction_rhs_mode(
    g: &FieldQuartet,
    params: &ModelParams,
    mode: KineticsMode,
) -> FieldQuartet {
    let grid = g.grid().clone();
    let n = grid.node_count();
    let mut fu = vec![0.0; n];
    let mut fv = vec![0.0; n];
    let mut fw = vec![0.0; n];
    let mut fz = vec![0.0; n];
    let (u, v, w, z) = (g.u.values(), g.v.values(), g.w.values(), g.z.values());
    let (a, b, c1, c2) = (params.a, params.b, params.big_d1, params.big_d2);
    for i in 0..n {
        let (cubic_u, cubic_w) = match mode {
            KineticsMode::Full => (u[i] * u[i] * v[i], w[i] * w[i] * z[i]),
            KineticsMode::Linear => (0.0, 0.0),
            KineticsMode::Off => (0.0, 0.0),
        };
        if mode == KineticsMode::Off {
            continue;
        }
        fu[i] = a - (b + 1.0) * u[i] + cubic_u + c1 * (w[i] - u[i]);
        fv[i] = b * u[i] - cubic_u + c2 * (z[i] - v[i]);
        fw[i] = a - (b + 1.0) * w[i] + cubic_w + c1 * (u[i] - w[i]);
        fz[i] = b * w[i] - cubic_w + c2 * (v[i] - z[i]);
    }
    FieldQuartet {
        u: Field::from_values(&grid, fu).expect("same grid"),
        v: Field::from_values(&grid, fv).expect("same grid"),
        w: Field::from_values(&grid, fw).expect("same grid"),
        z: Field::from_values(&grid, fz).expect("same grid"),
    }
}

fn guard(g: FieldQuartet, t: f64, threshold: f64) -> Result<FieldQuartet> {
    if !g.is_finite() {
        return Err(BicellError::NonFinite { t });
    }
    let max_abs = g.max_abs();
    if max_abs > threshold {
        return Err(BicellError::Divergence { t, max_abs, threshold });
    }
    Ok(g)
}

// Componentwise implicit diffusion solve (I - alpha_c Lap) x = rhs with
// alpha_c = d1*alpha_scale for u, w and d2*alpha_scale for v, z.
pub(crate) fn implicit_diffusion(
    grid: &Grid,
    g: &FieldQuartet,
    params: &ModelParams,
    alpha_scale: f64,
) -> Result<FieldQuartet> {
    Ok(FieldQuartet {
        u: solve_helmholtz(grid, params.d1 * alpha_scale, &g.u)?,
        v: solve_helmholtz(grid, params.d2 * alpha_scale, &g.v)?,
        w: solve_helmholtz(grid, params.d1 * alpha_scale, &g.w)?,
        z: solve_helmholtz(grid, params.d2 * alpha_scale, &g.z)?,
    })
}

// Crank-Nicolson diffusion over an interval of length tau.
fn cn_diffusion(
    grid: &Grid,
    g: &FieldQuartet,
    params: &ModelParams,
    tau: f64,
) -> Result<FieldQuartet> {
    let half = 0.5 * tau;
    let mut parts = Vec::with_capacity(4);
    for (f, d) in g
        .components()
        .iter()
        .zip([params.d1, params.d2, params.d1, params.d2])
    {
        let lap = apply_laplacian(grid, f)?;
        let rhs = f.add_scaled(d * half, &lap)?;
        parts.push(solve_helmholtz(grid, d * half, &rhs)?);
    }
    let mut it = parts.into_iter();
    Ok(FieldQuartet {
        u: it.next().unwrap(),
        v: it.next().unwrap(),
        w: it.next().unwrap(),
        z: it.next().unwrap(),
    })
}

/// Advances one time step; `t` is the time at the start of the step and is
/// used for error context only.
pub fn imex_step(
    g: &FieldQuartet,
    params: &ModelParams,
    cfg: &StepperConfig,
    t: f64,
) -> Result<FieldQuartet> {
    let grid = g.grid().clone();
    let dt = cfg.dt;
    let next = match cfg.scheme {
        Scheme::Imex1 => {
            let f = reaction_rhs_mode(g, params, cfg.kinetics);
            let rhs = g.add_scaled(dt, &f)?;
            implicit_diffusion(&grid, &rhs, params, dt)?
        }
        Scheme::Imex2 => {
            let half = cn_diffusion(&grid, g, params, 0.5 * dt)?;
            let k1 = reaction_rhs_mode(&half, params, cfg.kinetics);
            let mid = half.add_scaled(0.5 * dt, &k1)?;
            let k2 = reaction_rhs_mode(&mid, params, cfg.kinetics);
            let reacted = half.add_scaled(dt, &k2)?;
            cn_diffusion(&grid, &reacted, params, 0.5 * dt)?
        }
    };
    guard(next, t + dt, cfg.blowup_threshold)
}

/// Scalar observables recorded at every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarObservables {
    pub t: f64,
    /// ||f||^2 in (u, v, w, z) order.
    pub l2_sq: [f64; 4],
    /// <-Lap f, f> in (u, v, w, z) order.
    pub grad_sq: [f64; 4],
    /// L4 norms in (u, v, w, z) order.
    pub l4: [f64; 4],
    pub total_l2_sq: f64,
    pub l2_sq_y: f64,
    pub l2_sq_psi: f64,
    pub grad_sq_y: f64,
    pub grad_sq_psi: f64,
    /// Dirichlet energy of v + z (grouped-estimate right-hand side).
    pub grad_sq_v_plus_z: f64,
    /// Dirichlet energy of v - z.
    pub grad_sq_v_minus_z: f64,
}

/// Measures every recorded observable of a state.
pub fn observe(g: &FieldQuartet, t: f64) -> ScalarObservables {
    let grid = g.grid().clone();
    let n = norms(g);
    let gr = grouping(g);
    let vpz = g.v.add_scaled(1.0, &g.z).expect("same grid");
    let vmz = g.v.add_scaled(-1.0, &g.z).expect("same grid");
    ScalarObservables {
        t,
        l2_sq: n.l2_sq,
        grad_sq: n.grad_sq,
        l4: n.l4,
        total_l2_sq: n.total_l2_sq,
        l2_sq_y: l2_norm_sq(&grid, &gr.y).expect("same grid"),
        l2_sq_psi: l2_norm_sq(&grid, &gr.psi).expect("same grid"),
        grad_sq_y: dirichlet_energy(&grid, &gr.y).expect("same grid"),
        grad_sq_psi: dirichlet_energy(&grid, &gr.psi).expect("same grid"),
        grad_sq_v_plus_z: dirichlet_energy(&grid, &vpz).expect("same grid"),
        grad_sq_v_minus_z: dirichlet_energy(&grid, &vmz).expect("same grid"),
    }
}

/// Recording options for [`simulate`].
#[derive(Debug, Clone, Copy)]
pub struct SimulateOptions {
    /// Keep a full state snapshot every this many steps (0 keeps only the
    /// initial and final states). The final state is always kept.
    pub snapshot_stride: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions { snapshot_stride: 100 }
    }
}

/// Time-stamped observables plus snapshots of a coupled run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub observables: Vec<ScalarObservables>,
    pub snapshots: Vec<(f64, FieldQuartet)>,
    pub final_state: FieldQuartet,
    pub dt: f64,
}

impl Trajectory {
    pub fn last_time(&self) -> f64 {
        self.observables.last().map(|o| o.t).unwrap_or(0.0)
    }

    /// Initial combined mass ||v0||^2 + ||z0||^2 (decay-envelope seed).
    pub fn initial_vz_l2_sq(&self) -> f64 {
        let first = &self.observables[0];
        first.l2_sq[1] + first.l2_sq[3]
    }
}

/// Integrates the coupled system from 0 to (at least) `t_end` in uniform
/// steps, recording observables each step and snapshots at the stride.
pub fn simulate(
    g0: &FieldQuartet,
    params: &ModelParams,
    cfg: &StepperConfig,
    t_end: f64,
    opts: &SimulateOptions,
) -> Result<Trajectory> {
    if t_end <= 0.0 || !t_end.is_finite() {
        return Err(BicellError::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let steps = ((t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut state = guard(g0.clone(), 0.0, cfg.blowup_threshold)?;
    let mut observables = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    observables.push(observe(&state, 0.0));
    snapshots.push((0.0, state.clone()));
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        state = imex_step(&state, params, cfg, t)?;
        let t_next = (k + 1) as f64 * cfg.dt;
        observables.push(observe(&state, t_next));
        let at_stride = opts.snapshot_stride > 0 && (k + 1) % opts.snapshot_stride == 0;
        if at_stride || k + 1 == steps {
            snapshots.push((t_next, state.clone()));
        }
    }
    Ok(Trajectory {
        observables,
        snapshots,
        final_state: state,
        dt: cfg.dt,
    })
}

/// Observables of a single-cell (uncoupled Brusselator) run.
#[derive(Debug, Clone, Copy)]
pub struct CellObservables {
    pub t: f64,
    pub l2_sq_u: f64,
    pub l2_sq_v: f64,
    pub grad_sq_u: f64,
    pub grad_sq_v: f64,
}

/// Trajectory of the two-component reference system.
#[derive(Debug, Clone)]
pub struct CellTrajectory {
    pub observables: Vec<CellObservables>,
    pub final_u: Field,
    pub final_v: Field,
}

fn cell_reaction(
    u: &Field,
    v: &Field,
    params: &ModelParams,
    mode: KineticsMode,
) -> (Field, Field) {
    let grid = u.grid().clone();
    let n = grid.node_count();
    let mut fu = vec![0.0; n];
    let mut fv = vec![0.0; n];
    for i in 0..n {
        let (ui, vi) = (u.values()[i], v.values()[i]);
        let cubic = match mode {
            KineticsMode::Full => ui * ui * vi,
            _ => 0.0,
        };
        if mode == KineticsMode::Off {
            continue;
        }
        fu[i] = params.a - (params.b + 1.0) * ui + cubic;
        fv[i] = params.b * ui - cubic;
    }
    (
        Field::from_values(&grid, fu).expect("same grid"),
        Field::from_values(&grid, fv).expect("same grid"),
    )
}

/// Integrates the classical two-component Brusselator (no cell coupling)
/// with the same IMEX schemes as the coupled solver.
pub fn simulate_single_cell(
    u0: &Field,
    v0: &Field,
    params: &ModelParams,
    cfg: &StepperConfig,
    t_end: f64,
) -> Result<CellTrajectory> {
    if t_end <= 0.0 || !t_end.is_finite() {
        return Err(BicellError::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let grid = u0.grid().clone();
    let steps = ((t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut u = u0.clone();
    let mut v = v0.clone();
    let dt = cfg.dt;
    let mut observables = Vec::with_capacity(steps + 1);
    let record = |u: &Field, v: &Field, t: f64| CellObservables {
        t,
        l2_sq_u: l2_norm_sq(&grid, u).expect("same grid"),
        l2_sq_v: l2_norm_sq(&grid, v).expect("same grid"),
        grad_sq_u: dirichlet_energy(&grid, u).expect("same grid"),
        grad_sq_v: dirichlet_energy(&grid, v).expect("same grid"),
    };
    observables.push(record(&u, &v, 0.0));
    for k in 0..steps {
        let t_next = (k + 1) as f64 * dt;
        match cfg.scheme {
            Scheme::Imex1 => {
                let (fu, fv) = cell_reaction(&u, &v, params, cfg.kinetics);
                u = solve_helmholtz(&grid, params.d1 * dt, &u.add_scaled(dt, &fu)?)?;
                v = solve_helmholtz(&grid, params.d2 * dt, &v.add_scaled(dt, &fv)?)?;
            }
            Scheme::Imex2 => {
                let cn = |f: &Field, d: f64| -> Result<Field> {
                    let lap = apply_laplacian(&grid, f)?;
                    solve_helmholtz(&grid, d * 0.25 * dt, &f.add_scaled(d * 0.25 * dt, &lap)?)
                };
                let mut uh = cn(&u, params.d1)?;
                let mut vh = cn(&v, params.d2)?;
                let (k1u, k1v) = cell_reaction(&uh, &vh, params, cfg.kinetics);
                let mu = uh.add_scaled(0.5 * dt, &k1u)?;
                let mv = vh.add_scaled(0.5 * dt, &k1v)?;
                let (k2u, k2v) = cell_reaction(&mu, &mv, params, cfg.kinetics);
                uh = uh.add_scaled(dt, &k2u)?;
                vh = vh.add_scaled(dt, &k2v)?;
                u = cn(&uh, params.d1)?;
                v = cn(&vh, params.d2)?;
            }
        }
        for f in [&u, &v] {
            if !f.is_finite() {
                return Err(BicellError::NonFinite { t: t_next });
            }
            if f.max_abs() > cfg.blowup_threshold {
                return Err(BicellError::Divergence {
                    t: t_next,
                    max_abs: f.max_abs(),
                    threshold: cfg.blowup_threshold,
                });
            }
        }
        observables.push(record(&u, &v, t_next));
    }
    Ok(CellTrajectory { observables, final_u: u, final_v: v })
}

/// Named initial-data presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPreset {
    Zero,
    /// Fixed multiples (1, -1, 1/2, 1/4) of the principal eigenmode.
    SineMode,
    /// Exchange-symmetric data: u = w, v = z.
    SymmetricPair,
    /// Smooth seeded random data: spectrally decaying sine combinations
    /// rescaled to the requested amplitude.
    Random,
}

impl InitialPreset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(InitialPreset::Zero),
            "sine-mode" => Ok(InitialPreset::SineMode),
            "symmetric-pair" => Ok(InitialPreset::SymmetricPair),
            "random" => Ok(InitialPreset::Random),
            other => Err(BicellError::InvalidArgument(format!(
                "unknown preset '{other}' (expected zero, sine-mode, symmetric-pair, random)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialPreset::Zero => "zero",
            InitialPreset::SineMode => "sine-mode",
            InitialPreset::SymmetricPair => "symmetric-pair",
            InitialPreset::Random => "random",
        }
    }
}

fn smooth_random_field(grid: &Arc<Grid>, amplitude: f64, rng: &mut ChaCha8Rng) -> Field {
    // Spectrally decaying combination: resolvable by the grid and by any
    // reasonable time step, unlike white nodal noise.
    let modes_per_axis: Vec<usize> = (0..grid.dim())
        .map(|k| grid.axis(k).count.min(if grid.dim() == 1 { 16 } else { 4 }))
        .collect();
    let mut field = Field::zeros(grid);
    match grid.dim() {
        1 => {
            for k in 1..=modes_per_axis[0] {
                let c: f64 = rng.gen_range(-1.0..1.0) / (k * k) as f64;
                let mode = Field::sine_mode(grid, &[k]);
                field = field.add_scaled(c, &mode).expect("same grid");
            }
        }
        _ => {
            for kx in 1..=modes_per_axis[0] {
                for ky in 1..=modes_per_axis[1] {
                    let c: f64 = rng.gen_range(-1.0..1.0) / (kx * kx + ky * ky) as f64;
                    let mode = Field::sine_mode(grid, &[kx, ky]);
                    field = field.add_scaled(c, &mode).expect("same grid");
                }
            }
        }
    }
    let peak = field.max_abs();
    if peak > 0.0 {
        field = field.scale(amplitude / peak);
    }
    field
}

/// Builds initial data from a preset; `seed` only matters for `Random`.
pub fn initial_data(
    grid: &Arc<Grid>,
    preset: InitialPreset,
    amplitude: f64,
    seed: u64,
) -> FieldQuartet {
    match preset {
        InitialPreset::Zero => FieldQuartet::zeros(grid),
        InitialPreset::SineMode => {
            let mode = Field::sine_mode(grid, &vec![1; grid.dim()]);
            FieldQuartet {
                u: mode.scale(amplitude),
                v: mode.scale(-amplitude),
                w: mode.scale(0.5 * amplitude),
                z: mode.scale(0.25 * amplitude),
            }
        }
        InitialPreset::SymmetricPair => {
            let m1 = Field::sine_mode(grid, &vec![1; grid.dim()]);
            let mut second = vec![1; grid.dim()];
            second[0] = 2.min(grid.axis(0).count);
            let m2 = Field::sine_mode(grid, &second);
            let uw = m1.scale(amplitude);
            let vz = m1
                .scale(-0.5 * amplitude)
                .add_scaled(0.5 * amplitude, &m2)
                .expect("same grid");
            FieldQuartet { u: uw.clone(), v: vz.clone(), w: uw, z: vz }
        }
        InitialPreset::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            FieldQuartet {
                u: smooth_random_field(grid, amplitude, &mut rng),
                v: smooth_random_field(grid, amplitude, &mut rng),
                w: smooth_random_field(grid, amplitude, &mut rng),
                z: smooth_random_field(grid, amplitude, &mut rng),
            }
        }
    }
}
