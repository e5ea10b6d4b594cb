//! On-disk artifacts: time-series CSV, binary state snapshots, summaries.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::discretization::{build_grid, Field};
use crate::dynamics::ScalarObservables;
use crate::state_fields::FieldQuartet;
use crate::{BicellError, Result};

/// Leading bytes of every snapshot file.
pub const SNAPSHOT_MAGIC: &[u8; 12] = b"BICELL-SNAP\0";
/// Current snapshot layout version.
pub const SNAPSHOT_VERSION: u32 = 1;

/// Fixed column order of the time-series CSV.
pub const TIMESERIES_HEADER: &str =
    "t,l2sq_u,l2sq_v,l2sq_w,l2sq_z,gradsq_u,gradsq_v,gradsq_w,gradsq_z,l2sq_y,l2sq_psi";

/// Writes the per-step observables as CSV with the pinned column order.
pub fn write_timeseries(path: &Path, observables: &[ScalarObservables]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{TIMESERIES_HEADER}")?;
    for o in observables {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            o.t,
            o.l2_sq[0],
            o.l2_sq[1],
            o.l2_sq[2],
            o.l2_sq[3],
            o.grad_sq[0],
            o.grad_sq[1],
            o.grad_sq[2],
            o.grad_sq[3],
            o.l2_sq_y,
            o.l2_sq_psi
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Writes one state snapshot: magic, version, grid shape, time stamp, then
/// the four fields as little-endian doubles in row-major order.
pub fn write_snapshot(path: &Path, t: f64, g: &FieldQuartet) -> Result<()> {
    let grid = g.grid();
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for k in 0..grid.dim() {
        out.write_all(&(grid.axis(k).count as u64).to_le_bytes())?;
    }
    for k in 0..grid.dim() {
        out.write_all(&grid.axis(k).extent.to_le_bytes())?;
    }
    out.write_all(&t.to_le_bytes())?;
    for field in g.components() {
        for v in field.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads a snapshot back into a time stamp and a state on a rebuilt grid.
pub fn read_snapshot(path: &Path) -> Result<(f64, FieldQuartet)> {
    let mut input = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 12];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(BicellError::Format(format!(
            "{}: not a snapshot file (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut input)?;
    if version != SNAPSHOT_VERSION {
        return Err(BicellError::Format(format!(
            "{}: unsupported snapshot version {version}",
            path.display()
        )));
    }
    let dim = read_u32(&mut input)? as usize;
    if dim != 1 && dim != 2 {
        return Err(BicellError::Format(format!(
            "{}: invalid dimension {dim}",
            path.display()
        )));
    }
    let mut counts = Vec::with_capacity(dim);
    for _ in 0..dim {
        let c = read_u64(&mut input)?;
        if c == 0 || c > 1 << 24 {
            return Err(BicellError::Format(format!(
                "{}: implausible axis count {c}",
                path.display()
            )));
        }
        counts.push(c as usize);
    }
    let mut extents = Vec::with_capacity(dim);
    for _ in 0..dim {
        extents.push(read_f64(&mut input)?);
    }
    let t = read_f64(&mut input)?;
    let grid = Arc::new(build_grid(dim, &extents, &counts)?);
    let n = grid.node_count();
    let mut fields = Vec::with_capacity(4);
    for _ in 0..4 {
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(read_f64(&mut input)?);
        }
        fields.push(Field::from_values(&grid, values)?);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(BicellError::Format(format!(
            "{}: trailing bytes after field data",
            path.display()
        )));
    }
    let mut it = fields.into_iter();
    let g = FieldQuartet::new(
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    )?;
    Ok((t, g))
}

/// Renders `key = value` lines sorted by key.
pub fn render_summary(lines: &[(String, String)]) -> String {
    let mut sorted: Vec<&(String, String)> = lines.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    for (k, v) in sorted {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

/// Drops `timing.*` lines, the only nondeterministic summary content.
pub fn summary_excluding_timing(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("timing."))
        .map(|l| format!("{l}\n"))
        .collect()
}
