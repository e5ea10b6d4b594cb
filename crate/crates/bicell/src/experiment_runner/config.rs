//! Flat `key = value` configuration documents with strict key checking.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use crate::discretization::{build_grid, Grid};
use crate::dynamics::{InitialPreset, Scheme, StepperConfig};
use crate::state_fields::ModelParams;
use crate::{BicellError, Result};

/// Which diagnostics a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosticFlags {
    pub decay: bool,
    pub absorption: bool,
    pub grouped: bool,
    pub windows: bool,
    pub tails: bool,
    pub truncated_h1: bool,
    pub trace: bool,
    pub dimension: bool,
}

impl DiagnosticFlags {
    /// Everything off (plain simulation).
    pub fn none() -> Self {
        DiagnosticFlags {
            decay: false,
            absorption: false,
            grouped: false,
            windows: false,
            tails: false,
            truncated_h1: false,
            trace: false,
            dimension: false,
        }
    }
}

impl Default for DiagnosticFlags {
    fn default() -> Self {
        DiagnosticFlags {
            decay: true,
            absorption: true,
            grouped: true,
            windows: true,
            tails: true,
            truncated_h1: true,
            trace: false,
            dimension: false,
        }
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub counts: Vec<usize>,
    pub params: ModelParams,
    pub scheme: Scheme,
    pub dt: f64,
    pub blowup_threshold: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub seed: u64,
    pub preset: InitialPreset,
    pub amplitude: f64,
    pub checks: DiagnosticFlags,
    /// Margin tolerance for inequality diagnostics.
    pub tolerance: f64,
    /// Tail-budget epsilon.
    pub epsilon: f64,
    /// L4 embedding constant; `None` means estimate it from the grid.
    pub embedding_delta: Option<f64>,
    /// Transient cutoff; `None` means derive it from the initial data.
    pub burn_in: Option<f64>,
    /// Attractor gradient bound; `None` means measure it from the run.
    pub k1: Option<f64>,
    /// Spectral lower-bound constant; `None` means the uncalibrated default 1.
    pub k3: Option<f64>,
    pub trace_m: usize,
    pub trace_measure: f64,
    pub trace_settle: f64,
    pub trace_align: f64,
    pub reorth_every: usize,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Builds the shared grid described by the config.
    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(build_grid(self.dim, &self.extents, &self.counts)?))
    }

    /// Stepper settings described by the config.
    pub fn stepper(&self) -> Result<StepperConfig> {
        let mut cfg = StepperConfig::new(self.dt, self.scheme)?;
        cfg.blowup_threshold = self.blowup_threshold;
        Ok(cfg)
    }

    /// Canonical `config.*` echo used in summaries; every derived quantity in
    /// a report is recomputable from these lines.
    pub fn echo_lines(&self) -> Vec<(String, String)> {
        fn opt(v: Option<f64>, fallback: &str) -> String {
            v.map(|x| x.to_string()).unwrap_or_else(|| fallback.to_string())
        }
        let mut lines = vec![
            ("config.dim".to_string(), self.dim.to_string()),
            ("config.extent_x".to_string(), self.extents[0].to_string()),
            ("config.count_x".to_string(), self.counts[0].to_string()),
            ("config.d1".to_string(), self.params.d1.to_string()),
            ("config.d2".to_string(), self.params.d2.to_string()),
            ("config.a".to_string(), self.params.a.to_string()),
            ("config.b".to_string(), self.params.b.to_string()),
            ("config.D1".to_string(), self.params.big_d1.to_string()),
            ("config.D2".to_string(), self.params.big_d2.to_string()),
            ("config.scheme".to_string(), scheme_name(self.scheme).to_string()),
            ("config.dt".to_string(), self.dt.to_string()),
            (
                "config.blowup_threshold".to_string(),
                self.blowup_threshold.to_string(),
            ),
            ("config.t_end".to_string(), self.t_end.to_string()),
            (
                "config.snapshot_stride".to_string(),
                self.snapshot_stride.to_string(),
            ),
            ("config.seed".to_string(), self.seed.to_string()),
            ("config.preset".to_string(), self.preset.name().to_string()),
            ("config.amplitude".to_string(), self.amplitude.to_string()),
            ("config.check_decay".to_string(), self.checks.decay.to_string()),
            (
                "config.check_absorption".to_string(),
                self.checks.absorption.to_string(),
            ),
            (
                "config.check_grouped".to_string(),
                self.checks.grouped.to_string(),
            ),
            (
                "config.check_windows".to_string(),
                self.checks.windows.to_string(),
            ),
            ("config.check_tails".to_string(), self.checks.tails.to_string()),
            (
                "config.check_truncated_h1".to_string(),
                self.checks.truncated_h1.to_string(),
            ),
            ("config.check_trace".to_string(), self.checks.trace.to_string()),
            (
                "config.check_dimension".to_string(),
                self.checks.dimension.to_string(),
            ),
            ("config.tolerance".to_string(), self.tolerance.to_string()),
            ("config.epsilon".to_string(), self.epsilon.to_string()),
            (
                "config.embedding_delta".to_string(),
                opt(self.embedding_delta, "auto"),
            ),
            ("config.burn_in".to_string(), opt(self.burn_in, "auto")),
            ("config.k1".to_string(), opt(self.k1, "auto")),
            ("config.k3".to_string(), opt(self.k3, "default")),
            ("config.trace_m".to_string(), self.trace_m.to_string()),
            (
                "config.trace_measure".to_string(),
                self.trace_measure.to_string(),
            ),
            (
                "config.trace_settle".to_string(),
                self.trace_settle.to_string(),
            ),
            ("config.trace_align".to_string(), self.trace_align.to_string()),
            (
                "config.reorth_every".to_string(),
                self.reorth_every.to_string(),
            ),
            (
                "config.out_dir".to_string(),
                self.out_dir.display().to_string(),
            ),
        ];
        if self.dim == 2 {
            lines.push(("config.extent_y".to_string(), self.extents[1].to_string()));
            lines.push(("config.count_y".to_string(), self.counts[1].to_string()));
        }
        lines
    }
}

/// Printable scheme identifier.
pub fn scheme_name(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Imex1 => "imex1",
        Scheme::Imex2 => "imex2",
    }
}

fn parse_scheme(line: usize, value: &str) -> Result<Scheme> {
    match value {
        "imex1" => Ok(Scheme::Imex1),
        "imex2" => Ok(Scheme::Imex2),
        other => Err(BicellError::Config(format!(
            "line {line}: unknown scheme `{other}` (expected imex1 or imex2)"
        ))),
    }
}

// Raw document: key -> (line number, value), with consumption tracking so
// leftovers can be reported as unknown keys.
struct Doc {
    entries: BTreeMap<String, (usize, String)>,
}

impl Doc {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, key: &str, kind: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => value.parse::<T>().map(Some).map_err(|_| {
                BicellError::Config(format!(
                    "line {line}: could not parse `{key}` value `{value}` as {kind}"
                ))
            }),
        }
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        self.parse_opt(key, "a number")
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&mut self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| BicellError::Config(format!("missing required key `{key}`")))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parse_opt(key, "a nonnegative integer")?.unwrap_or(default))
    }

    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parse_opt(key, "a nonnegative integer")?.unwrap_or(default))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some((line, value)) => match value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(BicellError::Config(format!(
                    "line {line}: could not parse `{key}` value `{other}` as true or false"
                ))),
            },
        }
    }

    fn string_or(&mut self, key: &str, default: &str) -> String {
        self.take(key).map(|(_, v)| v).unwrap_or_else(|| default.to_string())
    }
}

// Splits a document into (key, line, value) entries, rejecting duplicates.
fn scan_entries(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(BicellError::Config(format!(
                "line {line_no}: expected `key = value`, got `{line}`"
            )));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(BicellError::Config(format!(
                "line {line_no}: missing key before `=`"
            )));
        }
        if value.is_empty() {
            return Err(BicellError::Config(format!(
                "line {line_no}: empty value for key `{key}`"
            )));
        }
        if let Some((prev, _)) = entries.get(&key) {
            return Err(BicellError::Config(format!(
                "duplicate key `{key}` on lines {prev} and {line_no}"
            )));
        }
        entries.insert(key, (line_no, value));
    }
    Ok(entries)
}

/// Parses a flat `key = value` document (with `#` comments) into a resolved
/// config; unknown keys, duplicates, and malformed values are rejected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut doc = Doc { entries: scan_entries(text)? };

    let dim = doc.usize_or("dim", 1)?;
    if dim != 1 && dim != 2 {
        return Err(BicellError::Config(format!(
            "dim must be 1 or 2, got {dim}"
        )));
    }
    let count_x = doc
        .parse_opt::<usize>("count_x", "a positive integer")?
        .ok_or_else(|| BicellError::Config("missing required key `count_x`".to_string()))?;
    let extent_x = doc.f64_or("extent_x", 1.0)?;
    let (extents, counts) = if dim == 2 {
        let count_y = doc.usize_or("count_y", count_x)?;
        let extent_y = doc.f64_or("extent_y", extent_x)?;
        (vec![extent_x, extent_y], vec![count_x, count_y])
    } else {
        for key in ["count_y", "extent_y"] {
            if let Some((line, _)) = doc.take(key) {
                return Err(BicellError::Config(format!(
                    "line {line}: key `{key}` requires dim = 2"
                )));
            }
        }
        (vec![extent_x], vec![count_x])
    };

    let params = ModelParams::new(
        doc.f64_req("d1")?,
        doc.f64_req("d2")?,
        doc.f64_req("a")?,
        doc.f64_req("b")?,
        doc.f64_req("D1")?,
        doc.f64_req("D2")?,
    )?;

    let scheme = match doc.take("scheme") {
        None => Scheme::Imex1,
        Some((line, value)) => parse_scheme(line, &value)?,
    };
    let dt = doc.f64_or("dt", StepperConfig::default_dt(&params))?;
    let blowup_threshold = doc.f64_or("blowup_threshold", 1e8)?;
    let t_end = doc.f64_or("t_end", 20.0)?;
    let snapshot_stride = doc.usize_or("snapshot_stride", 100)?;
    let seed = doc.u64_or("seed", 0)?;
    let preset = match doc.take("preset") {
        None => InitialPreset::Zero,
        Some((line, value)) => InitialPreset::parse(&value).map_err(|e| {
            BicellError::Config(format!("line {line}: {e}"))
        })?,
    };
    let amplitude = doc.f64_or("amplitude", 1.0)?;

    let defaults = DiagnosticFlags::default();
    let checks = DiagnosticFlags {
        decay: doc.bool_or("check_decay", defaults.decay)?,
        absorption: doc.bool_or("check_absorption", defaults.absorption)?,
        grouped: doc.bool_or("check_grouped", defaults.grouped)?,
        windows: doc.bool_or("check_windows", defaults.windows)?,
        tails: doc.bool_or("check_tails", defaults.tails)?,
        truncated_h1: doc.bool_or("check_truncated_h1", defaults.truncated_h1)?,
        trace: doc.bool_or("check_trace", defaults.trace)?,
        dimension: doc.bool_or("check_dimension", defaults.dimension)?,
    };

    let tolerance = doc.f64_or("tolerance", 1e-4)?;
    let epsilon = doc.f64_or("epsilon", 0.1)?;
    let embedding_delta = doc.f64_opt("embedding_delta")?;
    let burn_in = doc.f64_opt("burn_in")?;
    let k1 = doc.f64_opt("k1")?;
    let k3 = doc.f64_opt("k3")?;
    let trace_m = doc.usize_or("trace_m", 1)?;
    let trace_measure = doc.f64_or("trace_measure", 10.0)?;
    let trace_settle = doc.f64_or("trace_settle", 5.0)?;
    let trace_align = doc.f64_or("trace_align", 2.0)?;
    let reorth_every = doc.usize_or("reorth_every", 10)?;
    let out_dir = PathBuf::from(doc.string_or("out_dir", "out"));

    if !doc.entries.is_empty() {
        let listing = doc
            .entries
            .iter()
            .map(|(k, (line, _))| format!("`{k}` (line {line})"))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(BicellError::Config(format!("unknown keys: {listing}")));
    }

    let cfg = ExperimentConfig {
        dim,
        extents,
        counts,
        params,
        scheme,
        dt,
        blowup_threshold,
        t_end,
        snapshot_stride,
        seed,
        preset,
        amplitude,
        checks,
        tolerance,
        epsilon,
        embedding_delta,
        burn_in,
        k1,
        k3,
        trace_m,
        trace_measure,
        trace_settle,
        trace_align,
        reorth_every,
        out_dir,
    };
    validate_resolved(&cfg)?;
    Ok(cfg)
}

fn validate_resolved(cfg: &ExperimentConfig) -> Result<()> {
    for (name, value) in [
        ("dt", cfg.dt),
        ("t_end", cfg.t_end),
        ("epsilon", cfg.epsilon),
        ("trace_measure", cfg.trace_measure),
    ] {
        if value <= 0.0 || !value.is_finite() {
            return Err(BicellError::Config(format!(
                "{name} must be positive, got {value}"
            )));
        }
    }
    for (name, value) in [
        ("amplitude", cfg.amplitude),
        ("tolerance", cfg.tolerance),
        ("trace_settle", cfg.trace_settle),
        ("trace_align", cfg.trace_align),
    ] {
        if value < 0.0 || !value.is_finite() {
            return Err(BicellError::Config(format!(
                "{name} must be nonnegative, got {value}"
            )));
        }
    }
    for (name, value) in [
        ("embedding_delta", cfg.embedding_delta),
        ("burn_in", cfg.burn_in),
        ("k1", cfg.k1),
        ("k3", cfg.k3),
    ] {
        if let Some(v) = value {
            if v < 0.0 || !v.is_finite() {
                return Err(BicellError::Config(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
    }
    if cfg.trace_m == 0 {
        return Err(BicellError::Config("trace_m must be at least 1".to_string()));
    }
    if cfg.reorth_every == 0 {
        return Err(BicellError::Config(
            "reorth_every must be at least 1".to_string(),
        ));
    }
    // Surfaces grid errors (zero counts, bad extents) at parse time.
    cfg.grid()?;
    Ok(())
}
