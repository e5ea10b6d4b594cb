//! Cartesian parameter sweeps across a bounded worker pool.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{parse_config, ExperimentConfig};
use super::run_experiment;
use crate::{BicellError, Result};

/// One sweep axis: a config key and the values it cycles through.
#[derive(Debug, Clone)]
pub struct SweepAxis {
    pub key: String,
    /// Values kept as written, so integer keys stay integers.
    pub values: Vec<String>,
}

/// Outcome category of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Pass,
    DiagnosticFailure,
    NumericalFailure,
    ConfigError,
    Panicked,
}

impl RunStatus {
    /// Stable identifier used in the aggregate CSV.
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Pass => "pass",
            RunStatus::DiagnosticFailure => "diagnostic-failure",
            RunStatus::NumericalFailure => "numerical-failure",
            RunStatus::ConfigError => "config-error",
            RunStatus::Panicked => "panic",
        }
    }

    /// Process exit code this outcome maps to.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::DiagnosticFailure => 1,
            RunStatus::ConfigError => 2,
            RunStatus::NumericalFailure | RunStatus::Panicked => 3,
        }
    }
}

/// One row of the sweep aggregate.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub dir: PathBuf,
    pub assignments: Vec<(String, String)>,
    pub status: RunStatus,
    /// Error text for failed rows, empty otherwise.
    pub detail: String,
    pub sup_total_l2_sq: Option<f64>,
    pub k0: Option<f64>,
    pub q_m: Option<f64>,
    pub m: Option<usize>,
}

/// All sweep outcomes plus the aggregate location.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub aggregate_path: PathBuf,
}

impl SweepReport {
    /// Worst exit code across the rows (0 all pass, 1 diagnostic failure,
    /// 3 numerical failure or panic).
    pub fn exit_code(&self) -> i32 {
        self.rows.iter().map(|r| r.status.exit_code()).max().unwrap_or(0)
    }
}

// Splits a document into the base config text and the `sweep.<key>` axes,
// preserving axis order of appearance.
fn split_axes(text: &str) -> Result<(String, Vec<SweepAxis>)> {
    let mut base = String::new();
    let mut axes: Vec<SweepAxis> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = stripped.trim();
        let key = trimmed
            .find('=')
            .map(|eq| trimmed[..eq].trim().to_string());
        let is_axis = key.as_deref().is_some_and(|k| k.starts_with("sweep."));
        if !is_axis {
            base.push_str(raw);
            base.push('\n');
            continue;
        }
        let key = key.expect("axis line has a key");
        let axis_key = key.trim_start_matches("sweep.").trim().to_string();
        if axis_key.is_empty() {
            return Err(BicellError::Config(format!(
                "line {line_no}: empty sweep axis key"
            )));
        }
        if !seen.insert(axis_key.clone()) {
            return Err(BicellError::Config(format!(
                "line {line_no}: duplicate sweep axis `{axis_key}`"
            )));
        }
        let eq = trimmed.find('=').expect("axis line has `=`");
        let values: Vec<String> = trimmed[eq + 1..]
            .split(',')
            .map(|v| v.trim().to_string())
            .collect();
        if values.iter().any(|v| v.is_empty()) {
            return Err(BicellError::Config(format!(
                "line {line_no}: empty value in sweep axis `{axis_key}`"
            )));
        }
        axes.push(SweepAxis { key: axis_key, values });
    }
    Ok((base, axes))
}

// Rewrites the document with the given keys forced to new values.
fn override_keys(text: &str, assignments: &[(String, String)]) -> String {
    let keys: HashSet<&str> = assignments.iter().map(|(k, _)| k.as_str()).collect();
    let mut out = String::new();
    for raw in text.lines() {
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = stripped.trim();
        if let Some(eq) = trimmed.find('=') {
            if keys.contains(trimmed[..eq].trim()) {
                continue;
            }
        }
        out.push_str(raw);
        out.push('\n');
    }
    for (k, v) in assignments {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

// Row-major Cartesian product of the axes (last axis fastest).
fn combinations(axes: &[SweepAxis]) -> Vec<Vec<(String, String)>> {
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut combos = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut combo = Vec::with_capacity(axes.len());
        for axis in axes.iter().rev() {
            let n = axis.values.len();
            combo.push((axis.key.clone(), axis.values[idx % n].clone()));
            idx /= n;
        }
        combo.reverse();
        combos.push(combo);
    }
    combos
}

fn run_one(
    base_text: &str,
    index: usize,
    assignments: &[(String, String)],
    root: &Path,
    seed_override: Option<u64>,
) -> SweepRow {
    let dir = root.join(format!("run_{index:04}"));
    let mut row = SweepRow {
        index,
        dir: dir.clone(),
        assignments: assignments.to_vec(),
        status: RunStatus::ConfigError,
        detail: String::new(),
        sup_total_l2_sq: None,
        k0: None,
        q_m: None,
        m: None,
    };
    let combo_text = override_keys(base_text, assignments);
    let mut cfg: ExperimentConfig = match parse_config(&combo_text) {
        Ok(c) => c,
        Err(err) => {
            row.detail = err.to_string();
            return row;
        }
    };
    // A seed axis wins over the command-line override.
    if let Some(seed) = seed_override {
        if !assignments.iter().any(|(k, _)| k == "seed") {
            cfg.seed = seed;
        }
    }
    cfg.out_dir = dir;
    match catch_unwind(AssertUnwindSafe(|| run_experiment(&cfg))) {
        Err(_) => {
            row.status = RunStatus::Panicked;
            row.detail = "worker panicked".to_string();
        }
        Ok(Err(err)) => {
            row.status = if err.exit_code() == 3 {
                RunStatus::NumericalFailure
            } else {
                RunStatus::ConfigError
            };
            row.detail = err.to_string();
        }
        Ok(Ok(report)) => {
            row.sup_total_l2_sq = Some(report.sup_total_l2_sq);
            row.k0 = Some(report.constants.k0);
            row.q_m = report.trace.as_ref().map(|t| t.q_m);
            row.m = report.dimension.as_ref().map(|(_, b)| b.m);
            row.status = if report.all_pass() {
                RunStatus::Pass
            } else {
                RunStatus::DiagnosticFailure
            };
        }
    }
    row
}

fn write_aggregate(path: &Path, axes: &[SweepAxis], rows: &[SweepRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    let axis_cols: Vec<&str> = axes.iter().map(|a| a.key.as_str()).collect();
    write!(out, "run,dir")?;
    for key in &axis_cols {
        write!(out, ",{key}")?;
    }
    writeln!(out, ",status,all_pass,sup_total_l2_sq,k0,q_m,m")?;
    fn opt<T: ToString>(v: &Option<T>) -> String {
        v.as_ref().map(|x| x.to_string()).unwrap_or_default()
    }
    for row in rows {
        write!(out, "{},{}", row.index, row.dir.display())?;
        for (_, value) in &row.assignments {
            write!(out, ",{value}")?;
        }
        writeln!(
            out,
            ",{},{},{},{},{},{}",
            row.status.name(),
            row.status == RunStatus::Pass,
            opt(&row.sup_total_l2_sq),
            opt(&row.k0),
            opt(&row.q_m),
            opt(&row.m)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Runs the Cartesian product of the `sweep.<key>` axes found in `text` over
/// a pool of `workers` threads (0 picks the default). Each cell gets its own
/// `run_NNNN` directory under the sweep root; one failing cell never stops
/// the others.
pub fn sweep(
    text: &str,
    out_root: Option<&Path>,
    seed_override: Option<u64>,
    workers: usize,
) -> Result<SweepReport> {
    let (base_text, axes) = split_axes(text)?;
    if axes.is_empty() {
        return Err(BicellError::Config(
            "sweep requires at least one `sweep.<key> = v1, v2, ...` axis".to_string(),
        ));
    }
    let combos = combinations(&axes);

    // Validate the base document once, with the first combination applied,
    // so axis-covered keys may be absent from the base.
    let probe = parse_config(&override_keys(&base_text, &combos[0]))?;
    let root = out_root
        .map(Path::to_path_buf)
        .unwrap_or_else(|| probe.out_dir.clone());
    fs::create_dir_all(&root)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BicellError::Config(format!("could not build worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        combos
            .par_iter()
            .enumerate()
            .map(|(i, combo)| run_one(&base_text, i, combo, &root, seed_override))
            .collect()
    });
    rows.sort_by_key(|r| r.index);

    let aggregate_path = root.join("aggregate.csv");
    write_aggregate(&aggregate_path, &axes, &rows)?;
    Ok(SweepReport { rows, aggregate_path })
}
