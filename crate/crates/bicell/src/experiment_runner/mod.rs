//! Experiment orchestration: configured runs, diagnostic suites, trace
//! estimates, constants-only reports, parameter sweeps, and their artifacts.

use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::discretization::estimate_embedding_constant;
use crate::dissipation_diagnostics::{
    absorbing_constants, check_absorption, check_grouped_dissipation, check_time_avg_gradients,
    check_vz_decay, default_burn_in, tail_bound_report, truncated_h1_report, truncation_levels,
    AbsorbingConstants, AbsorptionReport, InequalityReport, TailReport, TruncatedH1Report,
};
use crate::dynamics::{initial_data, simulate, SimulateOptions, Trajectory};
use crate::variational_dimension::{
    attractor_gradient_bound, dimension_bound, qm_upper_bound, trace_qm, DimensionBound,
    DimensionInputs, TraceEstimate, TraceOptions,
};
use crate::Result;

mod config;
mod formats;
mod sweep;

pub use config::{parse_config, scheme_name, DiagnosticFlags, ExperimentConfig};
pub use formats::{
    read_snapshot, render_summary, summary_excluding_timing, write_snapshot, write_timeseries,
    SNAPSHOT_MAGIC, SNAPSHOT_VERSION, TIMESERIES_HEADER,
};
pub use sweep::{sweep, RunStatus, SweepAxis, SweepReport, SweepRow};

/// Everything a finished run reports; serialized as the sorted summary.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config_lines: Vec<(String, String)>,
    pub constants: AbsorbingConstants,
    /// Transient cutoff used by windowed and tail diagnostics.
    pub burn_in: f64,
    pub inequalities: Vec<InequalityReport>,
    pub absorption: Option<AbsorptionReport>,
    pub tails: Option<TailReport>,
    pub truncated: Option<TruncatedH1Report>,
    pub trace: Option<TraceEstimate>,
    pub dimension: Option<(DimensionInputs, DimensionBound)>,
    pub sup_total_l2_sq: f64,
    pub final_time: f64,
    pub steps: usize,
    pub timings: Vec<(String, f64)>,
}

impl RunReport {
    /// True when every enabled diagnostic passed.
    pub fn all_pass(&self) -> bool {
        self.inequalities.iter().all(|r| r.pass)
            && self.absorption.as_ref().is_none_or(|r| r.pass)
            && self.tails.as_ref().is_none_or(|r| r.pass)
            && self.truncated.as_ref().is_none_or(|r| r.pass)
    }

    /// Names of diagnostics that failed.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .inequalities
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.name.clone())
            .collect();
        if self.absorption.as_ref().is_some_and(|r| !r.pass) {
            out.push("absorption".to_string());
        }
        if self.tails.as_ref().is_some_and(|r| !r.pass) {
            out.push("tail-budgets".to_string());
        }
        if self.truncated.as_ref().is_some_and(|r| !r.pass) {
            out.push("truncated-h1".to_string());
        }
        out
    }

    /// One human-readable pass/fail line per enabled diagnostic.
    pub fn pass_lines(&self) -> Vec<String> {
        fn verdict(pass: bool) -> &'static str {
            if pass {
                "PASS"
            } else {
                "FAIL"
            }
        }
        let mut lines: Vec<String> = self.inequalities.iter().map(|r| r.summary_line()).collect();
        if let Some(r) = &self.absorption {
            let entry = r
                .entry_time
                .map(|t| t.to_string())
                .unwrap_or_else(|| "never".to_string());
            lines.push(format!(
                "absorption: {} (entry t = {entry}, sup = {:.6e}, threshold = {:.6e})",
                verdict(r.pass),
                r.sup_total_l2_sq,
                r.k0
            ));
        }
        if let Some(r) = &self.tails {
            lines.push(format!(
                "tail-budgets: {} (level = {}, vz worst {:.3e} of {:.3e}, uw worst {:.3e} of {:.3e})",
                verdict(r.pass),
                r.level,
                r.worst_vz,
                r.vz_budget,
                r.worst_uw,
                r.uw_budget
            ));
        }
        if let Some(r) = &self.truncated {
            lines.push(format!(
                "truncated-h1: {} (vz worst {:.3e} of {:.3e}, uw worst ln {:.3e} of {:.3e})",
                verdict(r.pass),
                r.worst_vz,
                r.vz_grad_bound,
                r.worst_uw.max(f64::MIN_POSITIVE).ln(),
                r.uw_grad_ln_bound
            ));
        }
        lines
    }

    /// Sorted `section.key = value` lines.
    pub fn summary_lines(&self) -> Vec<(String, String)> {
        let mut lines = self.config_lines.clone();
        push_constants(&mut lines, &self.constants);
        lines.push(line("run.version", env!("CARGO_PKG_VERSION")));
        lines.push(line("run.status", "ok"));
        lines.push(line("run.final_time", self.final_time));
        lines.push(line("run.steps", self.steps));
        lines.push(line("run.sup_total_l2_sq", self.sup_total_l2_sq));
        lines.push(line("run.burn_in", self.burn_in));
        lines.push(line("run.all_pass", self.all_pass()));
        for r in &self.inequalities {
            let base = format!("check.{}", r.name);
            lines.push(line(format!("{base}.pass"), r.pass));
            lines.push(line(format!("{base}.worst_margin"), r.worst_margin));
            lines.push(line(format!("{base}.samples"), r.samples.len()));
            lines.push(line(format!("{base}.tolerance"), r.tolerance));
        }
        if let Some(r) = &self.absorption {
            lines.push(line("absorption.pass", r.pass));
            lines.push(line(
                "absorption.entry_time",
                r.entry_time.map(|t| t.to_string()).unwrap_or_else(|| "never".to_string()),
            ));
            lines.push(line("absorption.stays_inside", r.stays_inside));
            lines.push(line("absorption.sup_total_l2_sq", r.sup_total_l2_sq));
            lines.push(line("absorption.tolerance", r.tolerance));
        }
        if let Some(r) = &self.tails {
            lines.push(line("tails.pass", r.pass));
            lines.push(line("tails.epsilon", r.epsilon));
            lines.push(line("tails.base_level", r.base_level));
            lines.push(line("tails.multiplier", r.multiplier));
            lines.push(line("tails.level", r.level));
            lines.push(line("tails.vz_budget", r.vz_budget));
            lines.push(line("tails.uw_budget", r.uw_budget));
            lines.push(line("tails.worst_vz", r.worst_vz));
            lines.push(line("tails.worst_uw", r.worst_uw));
            lines.push(line("tails.samples", r.samples.len()));
            lines.push(line(
                "tails.first_ok_time",
                r.first_ok_time.map(|t| t.to_string()).unwrap_or_else(|| "never".to_string()),
            ));
        }
        if let Some(r) = &self.truncated {
            lines.push(line("truncated.pass", r.pass));
            lines.push(line("truncated.epsilon", r.epsilon));
            lines.push(line("truncated.level", r.level));
            lines.push(line("truncated.delta", r.delta));
            lines.push(line("truncated.vz_grad_bound", r.vz_grad_bound));
            lines.push(line("truncated.uw_grad_bound", r.uw_grad_bound));
            lines.push(line("truncated.uw_grad_ln_bound", r.uw_grad_ln_bound));
            lines.push(line("truncated.worst_vz", r.worst_vz));
            lines.push(line("truncated.worst_uw", r.worst_uw));
            lines.push(line("truncated.samples", r.samples.len()));
        }
        if let Some(t) = &self.trace {
            lines.push(line("trace.m", t.m));
            lines.push(line("trace.q_m", t.q_m));
            lines.push(line("trace.duration", t.duration));
            lines.push(line("trace.intervals", t.intervals));
            lines.push(line("trace.worst_gram_residual", t.worst_gram_residual));
        }
        if let Some((inputs, bound)) = &self.dimension {
            push_dimension(&mut lines, inputs, bound);
        }
        for (name, secs) in &self.timings {
            lines.push(line(format!("timing.{name}"), format!("{secs:.6}")));
        }
        lines
    }

    /// Rendered summary document.
    pub fn summary_text(&self) -> String {
        render_summary(&self.summary_lines())
    }
}

fn line(key: impl Into<String>, value: impl ToString) -> (String, String) {
    (key.into(), value.to_string())
}

fn push_constants(lines: &mut Vec<(String, String)>, c: &AbsorbingConstants) {
    lines.push(line("constants.gamma", c.gamma));
    lines.push(line("constants.measure", c.measure));
    lines.push(line("constants.r0", c.r0));
    lines.push(line("constants.r1", c.r1));
    lines.push(line("constants.r2", c.r2));
    lines.push(line("constants.k0", c.k0));
    lines.push(line("constants.c7", c.c7));
    lines.push(line("constants.c8", c.c8));
    lines.push(line("constants.l1", c.l1));
    lines.push(line("constants.gamma1", c.gamma1));
    lines.push(line("constants.gamma2", c.gamma2));
    lines.push(line("constants.l2", c.l2));
}

fn push_dimension(
    lines: &mut Vec<(String, String)>,
    inputs: &DimensionInputs,
    bound: &DimensionBound,
) {
    lines.push(line("dimension.n", inputs.n));
    lines.push(line("dimension.measure", inputs.measure));
    lines.push(line("dimension.d0", inputs.d0));
    lines.push(line("dimension.b", inputs.b));
    lines.push(line("dimension.k1", inputs.k1));
    lines.push(line("dimension.delta", inputs.delta));
    lines.push(line("dimension.c_gn", inputs.c_gn));
    lines.push(line("dimension.k3", inputs.k3));
    lines.push(line("dimension.k3_calibrated", inputs.k3_calibrated));
    lines.push(line("dimension.k2", bound.k2));
    lines.push(line("dimension.x", bound.x));
    lines.push(line("dimension.m", bound.m));
    lines.push(line("dimension.hausdorff", bound.hausdorff));
    lines.push(line("dimension.fractal", bound.fractal));
    lines.push(line("dimension.qm_bound_at_m", qm_upper_bound(inputs, bound.m)));
}

// Resolved L4 embedding constant: configured value or a seeded estimate.
fn resolve_delta(cfg: &ExperimentConfig, grid: &std::sync::Arc<crate::discretization::Grid>) -> Result<f64> {
    match cfg.embedding_delta {
        Some(v) => Ok(v),
        None => estimate_embedding_constant(grid, 4, 0),
    }
}

// Writes a minimal summary when the run failed partway, so the output
// directory still explains what was attempted.
fn write_failure_summary(
    cfg: &ExperimentConfig,
    constants: &AbsorbingConstants,
    err: &crate::BicellError,
) -> Result<()> {
    let mut lines = cfg.echo_lines();
    push_constants(&mut lines, constants);
    lines.push(line("run.version", env!("CARGO_PKG_VERSION")));
    lines.push(line("run.status", "numerical-failure"));
    lines.push(line("run.error", err));
    fs::write(cfg.out_dir.join("summary.txt"), render_summary(&lines))?;
    Ok(())
}

struct DiagnosticsOutput {
    burn_in: f64,
    inequalities: Vec<InequalityReport>,
    absorption: Option<AbsorptionReport>,
    tails: Option<TailReport>,
    truncated: Option<TruncatedH1Report>,
    trace: Option<TraceEstimate>,
    dimension: Option<(DimensionInputs, DimensionBound)>,
}

fn run_diagnostics(
    cfg: &ExperimentConfig,
    grid: &std::sync::Arc<crate::discretization::Grid>,
    consts: &AbsorbingConstants,
    traj: &Trajectory,
) -> Result<DiagnosticsOutput> {
    let burn_in = cfg.burn_in.unwrap_or_else(|| {
        default_burn_in(
            &cfg.params,
            grid.measure(),
            grid.gamma_h(),
            traj.initial_vz_l2_sq(),
        )
    });
    let mut inequalities = Vec::new();
    if cfg.checks.decay {
        inequalities.push(check_vz_decay(traj, &cfg.params, cfg.tolerance));
    }
    if cfg.checks.grouped {
        let [y_rep, psi_rep] = check_grouped_dissipation(traj, &cfg.params, cfg.tolerance);
        inequalities.push(y_rep);
        inequalities.push(psi_rep);
    }
    if cfg.checks.windows {
        inequalities.extend(check_time_avg_gradients(
            traj,
            &cfg.params,
            consts,
            burn_in,
            cfg.tolerance,
        ));
    }
    let absorption = if cfg.checks.absorption {
        Some(check_absorption(traj, consts, cfg.tolerance))
    } else {
        None
    };
    let tails = if cfg.checks.tails {
        Some(tail_bound_report(traj, &cfg.params, consts, cfg.epsilon, burn_in)?)
    } else {
        None
    };
    let delta = if cfg.checks.truncated_h1 || cfg.checks.dimension {
        Some(resolve_delta(cfg, grid)?)
    } else {
        None
    };
    let truncated = if cfg.checks.truncated_h1 {
        Some(truncated_h1_report(
            traj,
            &cfg.params,
            consts,
            cfg.epsilon,
            delta.expect("resolved above"),
            burn_in,
        )?)
    } else {
        None
    };
    let trace = if cfg.checks.trace {
        let opts = TraceOptions {
            settle: cfg.trace_settle,
            align: cfg.trace_align,
            measure_for: cfg.trace_measure,
            reorth_every: cfg.reorth_every,
            gram_tol: 1e-10,
        };
        let g0 = initial_data(grid, cfg.preset, cfg.amplitude, cfg.seed);
        let stepper = cfg.stepper()?;
        Some(trace_qm(&g0, &cfg.params, &stepper, cfg.trace_m, &opts)?)
    } else {
        None
    };
    let dimension = if cfg.checks.dimension {
        let k1 = cfg
            .k1
            .unwrap_or_else(|| attractor_gradient_bound(&[traj], burn_in));
        let mut inputs = DimensionInputs::from_model(
            &cfg.params,
            grid.dim(),
            grid.measure(),
            k1,
            delta.expect("resolved above"),
        )?;
        if let Some(k3) = cfg.k3 {
            inputs.k3 = k3;
            inputs.k3_calibrated = true;
            inputs = inputs.validated()?;
        }
        let bound = dimension_bound(&inputs)?;
        Some((inputs, bound))
    } else {
        None
    };
    Ok(DiagnosticsOutput {
        burn_in,
        inequalities,
        absorption,
        tails,
        truncated,
        trace,
        dimension,
    })
}

/// Runs the configured experiment: simulates, writes the time series, the
/// snapshots, and the summary, and evaluates every enabled diagnostic.
/// On a numerical failure the partial summary is still written before the
/// error propagates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let total_start = Instant::now();
    fs::create_dir_all(&cfg.out_dir)?;
    let grid = cfg.grid()?;
    let consts = absorbing_constants(&cfg.params, &grid);
    let stepper = cfg.stepper()?;
    let g0 = initial_data(&grid, cfg.preset, cfg.amplitude, cfg.seed);

    let sim_start = Instant::now();
    let traj = match simulate(
        &g0,
        &cfg.params,
        &stepper,
        cfg.t_end,
        &SimulateOptions { snapshot_stride: cfg.snapshot_stride },
    ) {
        Ok(t) => t,
        Err(err) => {
            write_failure_summary(cfg, &consts, &err)?;
            return Err(err);
        }
    };
    let simulate_s = sim_start.elapsed().as_secs_f64();

    write_timeseries(&cfg.out_dir.join("timeseries.csv"), &traj.observables)?;
    for (t, state) in &traj.snapshots {
        let step = (t / traj.dt).round() as u64;
        write_snapshot(&cfg.out_dir.join(format!("snap_{step:06}.bin")), *t, state)?;
    }

    let diag_start = Instant::now();
    let diag = match run_diagnostics(cfg, &grid, &consts, &traj) {
        Ok(d) => d,
        Err(err) => {
            write_failure_summary(cfg, &consts, &err)?;
            return Err(err);
        }
    };
    let diagnostics_s = diag_start.elapsed().as_secs_f64();

    let sup_total_l2_sq = traj
        .observables
        .iter()
        .fold(0.0_f64, |m, o| m.max(o.total_l2_sq));
    let report = RunReport {
        config_lines: cfg.echo_lines(),
        constants: consts,
        burn_in: diag.burn_in,
        inequalities: diag.inequalities,
        absorption: diag.absorption,
        tails: diag.tails,
        truncated: diag.truncated,
        trace: diag.trace,
        dimension: diag.dimension,
        sup_total_l2_sq,
        final_time: traj.last_time(),
        steps: traj.observables.len() - 1,
        timings: vec![
            ("simulate_s".to_string(), simulate_s),
            ("diagnostics_s".to_string(), diagnostics_s),
            ("total_s".to_string(), total_start.elapsed().as_secs_f64()),
        ],
    };
    fs::write(cfg.out_dir.join("summary.txt"), report.summary_text())?;
    Ok(report)
}

/// Closed-form constants, truncation levels, the derived burn-in, and (when
/// `k1` is configured) the dimension record, without integrating anything.
pub fn bounds_lines(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let grid = cfg.grid()?;
    let consts = absorbing_constants(&cfg.params, &grid);
    let mut lines = cfg.echo_lines();
    push_constants(&mut lines, &consts);
    lines.push(line("run.version", env!("CARGO_PKG_VERSION")));
    lines.push(line("run.status", "bounds-only"));

    let g0 = initial_data(&grid, cfg.preset, cfg.amplitude, cfg.seed);
    let init_vz = {
        let obs = crate::dynamics::observe(&g0, 0.0);
        obs.l2_sq[1] + obs.l2_sq[3]
    };
    let burn_in = cfg.burn_in.unwrap_or_else(|| {
        default_burn_in(&cfg.params, grid.measure(), grid.gamma_h(), init_vz)
    });
    lines.push(line("run.burn_in", burn_in));

    let (base_level, multiplier, level) = truncation_levels(&consts, &cfg.params, cfg.epsilon)?;
    lines.push(line("tails.epsilon", cfg.epsilon));
    lines.push(line("tails.base_level", base_level));
    lines.push(line("tails.multiplier", multiplier));
    lines.push(line("tails.level", level));
    lines.push(line("tails.vz_budget", consts.l1 * cfg.epsilon));
    lines.push(line("tails.uw_budget", consts.l2 * cfg.epsilon));

    if let Some(k1) = cfg.k1 {
        let delta = resolve_delta(cfg, &grid)?;
        let mut inputs =
            DimensionInputs::from_model(&cfg.params, grid.dim(), grid.measure(), k1, delta)?;
        if let Some(k3) = cfg.k3 {
            inputs.k3 = k3;
            inputs.k3_calibrated = true;
            inputs = inputs.validated()?;
        }
        let bound = dimension_bound(&inputs)?;
        push_dimension(&mut lines, &inputs, &bound);
    }
    Ok(lines)
}

/// Renders and writes the bounds-only summary into the output directory.
pub fn write_bounds_summary(cfg: &ExperimentConfig) -> Result<String> {
    let text = render_summary(&bounds_lines(cfg)?);
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("summary.txt"), &text)?;
    Ok(text)
}

/// Location of the run summary inside an output directory.
pub fn summary_path(dir: &Path) -> std::path::PathBuf {
    dir.join("summary.txt")
}
