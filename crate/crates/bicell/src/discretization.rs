//! Uniform Dirichlet grids, the second-order discrete Laplacian, quadrature,
//! and the spectral/embedding constants the estimate checkers consume.
//!
//! The stencil is the standard 3-point (1D) / 5-point (2D) one on interior
//! nodes with zero boundary values, so the principal eigenvalue `gamma_h` is
//! known in closed form and the discrete Poincare inequality
//! `<-Lap f, f> >= gamma_h ||f||^2` holds exactly, not asymptotically.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{BicellError, Result};

/// One grid axis: interval extent, interior node count, mesh width.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub extent: f64,
    pub count: usize,
    pub h: f64,
}

/// Immutable uniform box grid with homogeneous Dirichlet boundary.
///
/// Interior nodes only are stored; index order is row-major with the first
/// axis outermost (`idx = ix * ny + iy` in 2D).
#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<Axis>,
    gamma_h: f64,
    measure: f64,
    weight: f64,
    // Per-axis DST tables for the 2D Helmholtz solve; empty in 1D.
    sine: Vec<Vec<f64>>,
    eigs: Vec<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.axes == other.axes
    }
}

/// Builds a grid; `extents` and `counts` must have `dim` entries each.
pub fn build_grid(dim: usize, extents: &[f64], counts: &[usize]) -> Result<Grid> {
    Grid::new(dim, extents, counts)
}

impl Grid {
    /// Builds a `dim`-dimensional grid (dim 1 or 2) with the given axis
    /// extents and interior node counts.
    pub fn new(dim: usize, extents: &[f64], counts: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(BicellError::InvalidArgument(format!(
                "dim must be 1 or 2, got {dim}"
            )));
        }
        if extents.len() != dim || counts.len() != dim {
            return Err(BicellError::InvalidArgument(format!(
                "expected {dim} extents and counts, got {} and {}",
                extents.len(),
                counts.len()
            )));
        }
        let mut axes = Vec::with_capacity(dim);
        for k in 0..dim {
            if extents[k] <= 0.0 || !extents[k].is_finite() {
                return Err(BicellError::InvalidArgument(format!(
                    "extent[{k}] must be positive and finite, got {}",
                    extents[k]
                )));
            }
            if counts[k] < 1 {
                return Err(BicellError::InvalidArgument(format!(
                    "count[{k}] must be >= 1"
                )));
            }
            let h = extents[k] / (counts[k] + 1) as f64;
            axes.push(Axis { extent: extents[k], count: counts[k], h });
        }
        // Exact principal eigenvalue of the discrete operator: sum over axes
        // of (2/h^2)(1 - cos(pi h / extent)).
        let gamma_h = axes
            .iter()
            .map(|ax| axis_eigenvalue(ax, 1))
            .sum::<f64>();
        let measure: f64 = axes.iter().map(|ax| ax.extent).product();
        let weight: f64 = axes.iter().map(|ax| ax.h).product();
        let (sine, eigs) = if dim == 2 {
            let sine = axes.iter().map(sine_table).collect();
            let eigs = axes
                .iter()
                .map(|ax| (1..=ax.count).map(|k| axis_eigenvalue(ax, k)).collect())
                .collect();
            (sine, eigs)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Grid { axes, gamma_h, measure, weight, sine, eigs })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Smallest eigenvalue of the discrete negative Dirichlet Laplacian.
    pub fn gamma_h(&self) -> f64 {
        self.gamma_h
    }

    /// Domain measure |Omega| (product of extents).
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Quadrature weight per interior node (h^dim).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Number of interior nodes.
    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|ax| ax.count).product()
    }

    /// Physical coordinates of interior node `idx` (padded with 0 in 1D).
    pub fn position(&self, idx: usize) -> [f64; 2] {
        match self.axes.len() {
            1 => [(idx as f64 + 1.0) * self.axes[0].h, 0.0],
            _ => {
                let ny = self.axes[1].count;
                let ix = idx / ny;
                let iy = idx % ny;
                [
                    (ix as f64 + 1.0) * self.axes[0].h,
                    (iy as f64 + 1.0) * self.axes[1].h,
                ]
            }
        }
    }
}

fn axis_eigenvalue(ax: &Axis, mode: usize) -> f64 {
    let theta = mode as f64 * std::f64::consts::PI * ax.h / ax.extent;
    (2.0 / (ax.h * ax.h)) * (1.0 - theta.cos())
}

fn sine_table(ax: &Axis) -> Vec<f64> {
    let n = ax.count;
    let mut s = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            s[j * n + k] =
                ((j + 1) as f64 * (k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).sin();
        }
    }
    s
}

/// Real scalar field over the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field { grid: grid.clone(), values: vec![0.0; grid.node_count()] }
    }

    /// Samples `f(position)` at every interior node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(grid.position(i))).collect();
        Field { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(BicellError::InvalidArgument(format!(
                "field length {} does not match grid node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Field { grid: grid.clone(), values })
    }

    /// Product of per-axis sine modes; `modes[k] = 1` is the principal mode.
    pub fn sine_mode(grid: &Arc<Grid>, modes: &[usize]) -> Self {
        assert_eq!(modes.len(), grid.dim(), "one mode index per axis");
        let pi = std::f64::consts::PI;
        let factors: Vec<f64> = grid
            .axes
            .iter()
            .zip(modes)
            .map(|(ax, &m)| m as f64 * pi / ax.extent)
            .collect();
        Field::from_fn(grid, move |p| {
            factors
                .iter()
                .enumerate()
                .map(|(k, fac)| (fac * p[k]).sin())
                .product()
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Componentwise `self + c * other`; the grids must match.
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Field> {
        check_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Field { grid: self.grid.clone(), values })
    }
}

pub(crate) fn check_on_grid(grid: &Grid, f: &Field) -> Result<()> {
    if f.grid.as_ref() == grid {
        Ok(())
    } else {
        Err(BicellError::GridMismatch)
    }
}

pub(crate) fn check_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid.as_ref() == b.grid.as_ref() {
        Ok(())
    } else {
        Err(BicellError::GridMismatch)
    }
}

/// Applies the discrete Dirichlet Laplacian (zero boundary values).
pub fn apply_laplacian(grid: &Grid, f: &Field) -> Result<Field> {
    check_on_grid(grid, f)?;
    let v = &f.values;
    let mut out = vec![0.0; v.len()];
    match grid.axes.len() {
        1 => {
            let n = grid.axes[0].count;
            let ih2 = 1.0 / (grid.axes[0].h * grid.axes[0].h);
            for i in 0..n {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = (left - 2.0 * v[i] + right) * ih2;
            }
        }
        _ => {
            let nx = grid.axes[0].count;
            let ny = grid.axes[1].count;
            let ihx2 = 1.0 / (grid.axes[0].h * grid.axes[0].h);
            let ihy2 = 1.0 / (grid.axes[1].h * grid.axes[1].h);
            for ix in 0..nx {
                for iy in 0..ny {
                    let c = v[ix * ny + iy];
                    let xm = if ix > 0 { v[(ix - 1) * ny + iy] } else { 0.0 };
                    let xp = if ix + 1 < nx { v[(ix + 1) * ny + iy] } else { 0.0 };
                    let ym = if iy > 0 { v[ix * ny + iy - 1] } else { 0.0 };
                    let yp = if iy + 1 < ny { v[ix * ny + iy + 1] } else { 0.0 };
                    out[ix * ny + iy] =
                        (xm - 2.0 * c + xp) * ihx2 + (ym - 2.0 * c + yp) * ihy2;
                }
            }
        }
    }
    Ok(Field { grid: f.grid.clone(), values: out })
}

/// Solves (I - alpha * Lap) x = rhs; exact direct solve in both dimensions.
pub fn solve_helmholtz(grid: &Grid, alpha: f64, rhs: &Field) -> Result<Field> {
    check_on_grid(grid, rhs)?;
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(BicellError::InvalidArgument(format!(
            "alpha must be nonnegative and finite, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(rhs.clone());
    }
    match grid.axes.len() {
        1 => {
            let n = grid.axes[0].count;
            let r = alpha / (grid.axes[0].h * grid.axes[0].h);
            let diag = 1.0 + 2.0 * r;
            let off = -r;
            // Thomas algorithm on the constant-coefficient tridiagonal system.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            let mut denom = diag;
            c[0] = off / denom;
            d[0] = rhs.values[0] / denom;
            for i in 1..n {
                denom = diag - off * c[i - 1];
                if i + 1 < n {
                    c[i] = off / denom;
                }
                d[i] = (rhs.values[i] - off * d[i - 1]) / denom;
            }
            let mut x = vec![0.0; n];
            x[n - 1] = d[n - 1];
            for i in (0..n - 1).rev() {
                x[i] = d[i] - c[i] * x[i + 1];
            }
            Ok(Field { grid: rhs.grid.clone(), values: x })
        }
        _ => {
            // Diagonalize per axis with the discrete sine transform; S*S =
            // ((N+1)/2) I, so the inverse transform is S scaled by 2/(N+1).
            let nx = grid.axes[0].count;
            let ny = grid.axes[1].count;
            let sx = &grid.sine[0];
            let sy = &grid.sine[1];
            let mut hat = mat_mul(sx, nx, nx, &rhs.values, ny);
            hat = mat_mul_t(&hat, nx, ny, sy, ny);
            for jx in 0..nx {
                for jy in 0..ny {
                    let lam = grid.eigs[0][jx] + grid.eigs[1][jy];
                    hat[jx * ny + jy] /= 1.0 + alpha * lam;
                }
            }
            let mut x = mat_mul(sx, nx, nx, &hat, ny);
            x = mat_mul_t(&x, nx, ny, sy, ny);
            let scale = 4.0 / (((nx + 1) * (ny + 1)) as f64);
            for v in &mut x {
                *v *= scale;
            }
            Ok(Field { grid: rhs.grid.clone(), values: x })
        }
    }
}

// out = a (ra x ca) * b (ca x cb), row-major.
fn mat_mul(a: &[f64], ra: usize, ca: usize, b: &[f64], cb: usize) -> Vec<f64> {
    let mut out = vec![0.0; ra * cb];
    for i in 0..ra {
        for k in 0..ca {
            let aik = a[i * ca + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * cb..(k + 1) * cb];
            let orow = &mut out[i * cb..(i + 1) * cb];
            for j in 0..cb {
                orow[j] += aik * brow[j];
            }
        }
    }
    out
}

// out = a (ra x ca) * b^T where b is (cb x ca), row-major.
fn mat_mul_t(a: &[f64], ra: usize, ca: usize, b: &[f64], cb: usize) -> Vec<f64> {
    let mut out = vec![0.0; ra * cb];
    for i in 0..ra {
        for j in 0..cb {
            let mut acc = 0.0;
            for k in 0..ca {
                acc += a[i * ca + k] * b[j * ca + k];
            }
            out[i * cb + j] = acc;
        }
    }
    out
}

/// Composite quadrature over interior nodes with weight h^dim; boundary
/// nodes contribute zero by the Dirichlet condition.
pub fn integrate(grid: &Grid, f: &Field) -> Result<f64> {
    check_on_grid(grid, f)?;
    Ok(grid.weight * f.values.iter().sum::<f64>())
}

/// Discrete L2 inner product <f, g> = h^dim sum f_i g_i.
pub fn inner_product(grid: &Grid, f: &Field, g: &Field) -> Result<f64> {
    check_on_grid(grid, f)?;
    check_same_grid(f, g)?;
    Ok(grid.weight
        * f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| a * b)
            .sum::<f64>())
}

/// Squared L2 norm under the grid quadrature.
pub fn l2_norm_sq(grid: &Grid, f: &Field) -> Result<f64> {
    inner_product(grid, f, f)
}

/// Dirichlet form <-Lap f, f>, assembled edgewise (always >= 0).
pub fn dirichlet_energy(grid: &Grid, f: &Field) -> Result<f64> {
    check_on_grid(grid, f)?;
    let v = &f.values;
    let mut total = 0.0;
    match grid.axes.len() {
        1 => {
            let ax = &grid.axes[0];
            let n = ax.count;
            let mut acc = v[0] * v[0] + v[n - 1] * v[n - 1];
            for i in 0..n - 1 {
                let d = v[i] - v[i + 1];
                acc += d * d;
            }
            total += acc * grid.weight / (ax.h * ax.h);
        }
        _ => {
            let nx = grid.axes[0].count;
            let ny = grid.axes[1].count;
            let wx = grid.weight / (grid.axes[0].h * grid.axes[0].h);
            let wy = grid.weight / (grid.axes[1].h * grid.axes[1].h);
            let mut accx = 0.0;
            let mut accy = 0.0;
            for ix in 0..nx {
                for iy in 0..ny {
                    let c = v[ix * ny + iy];
                    if ix == 0 {
                        accx += c * c;
                    }
                    if ix + 1 < nx {
                        let d = c - v[(ix + 1) * ny + iy];
                        accx += d * d;
                    } else {
                        accx += c * c;
                    }
                    if iy == 0 {
                        accy += c * c;
                    }
                    if iy + 1 < ny {
                        let d = c - v[ix * ny + iy + 1];
                        accy += d * d;
                    } else {
                        accy += c * c;
                    }
                }
            }
            total += accx * wx + accy * wy;
        }
    }
    Ok(total)
}

/// Ratio ||f||_{L4}^2 / <-Lap f, f>, the quantity the embedding constant
/// bounds from above; scale-free in f.
pub fn embedding_ratio(grid: &Grid, f: &Field) -> Result<f64> {
    let s4: f64 = grid.weight * f.values.iter().map(|v| v * v * v * v).sum::<f64>();
    let q = dirichlet_energy(grid, f)?;
    Ok(s4.sqrt() / q)
}

/// Estimates the smallest delta with ||phi||_{L4}^2 <= delta * ||grad phi||^2
/// by projected gradient ascent from `trials` seeded random starts plus the
/// principal eigenmode start. Deterministic for a fixed seed.
pub fn estimate_embedding_constant(grid: &Arc<Grid>, trials: usize, seed: u64) -> Result<f64> {
    if trials < 1 {
        return Err(BicellError::InvalidArgument(
            "trials must be >= 1".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for trial in 0..=trials {
        let start = if trial == 0 {
            Field::sine_mode(grid, &vec![1; grid.dim()])
        } else {
            let values = (0..grid.node_count())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            Field { grid: grid.clone(), values }
        };
        let r = ascend_ratio(grid, start)?;
        if r > best {
            best = r;
        }
    }
    Ok(best)
}

fn ascend_ratio(grid: &Grid, mut phi: Field) -> Result<f64> {
    let n = phi.values.len();
    let w = grid.weight;
    let mut ratio = embedding_ratio(grid, &phi)?;
    if !ratio.is_finite() {
        return Err(BicellError::NonFinite { t: 0.0 });
    }
    let mut step = 0.1;
    for _ in 0..400 {
        let lap = apply_laplacian(grid, &phi)?;
        let s4: f64 = w * phi.values.iter().map(|v| v * v * v * v).sum::<f64>();
        let q = dirichlet_energy(grid, &phi)?;
        let s2 = s4.sqrt();
        // d/dphi_i of s2/q with s2 = sqrt(w sum phi^4), q = phi' K phi.
        let mut g = vec![0.0; n];
        let mut gnorm = 0.0;
        for ((gi, p), l) in g.iter_mut().zip(&phi.values).zip(&lap.values) {
            let ds2 = 2.0 * w * p.powi(3) / s2;
            let dq = -2.0 * w * l;
            *gi = (ds2 * q - s2 * dq) / (q * q);
            gnorm += *gi * *gi;
        }
        gnorm = gnorm.sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let scale = phi.max_abs().max(1e-12);
        let mut accepted = false;
        for _ in 0..30 {
            let cand_values: Vec<f64> = phi
                .values
                .iter()
                .zip(&g)
                .map(|(p, gi)| p + step * scale * gi / gnorm)
                .collect();
            let cand = Field { grid: phi.grid.clone(), values: cand_values };
            let r = embedding_ratio(grid, &cand)?;
            if r > ratio {
                phi = cand;
                ratio = r;
                step *= 1.2;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step < 1e-12 {
            break;
        }
    }
    Ok(ratio)
}
