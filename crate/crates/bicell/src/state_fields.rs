//! Four-field state, grouping recombinations, norms, and sublevel-set
//! (tail-mass / masked-gradient) functionals.

use std::sync::Arc;

use crate::discretization::{
    check_same_grid, dirichlet_energy, integrate, l2_norm_sq, Field, Grid,
};
use crate::{BicellError, Result};

/// The six positive model constants: diffusivities d1 (u, w) and d2 (v, z),
/// kinetic constants a and b, and the inter-cell coupling rates D1 (u <-> w)
/// and D2 (v <-> z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub d1: f64,
    pub d2: f64,
    pub a: f64,
    pub b: f64,
    pub big_d1: f64,
    pub big_d2: f64,
}

impl ModelParams {
    /// Validated constructor: every constant must be strictly positive.
    pub fn new(d1: f64, d2: f64, a: f64, b: f64, big_d1: f64, big_d2: f64) -> Result<Self> {
        let p = ModelParams { d1, d2, a, b, big_d1, big_d2 };
        for (name, v) in p.named() {
            if v <= 0.0 || !v.is_finite() {
                return Err(BicellError::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(p)
    }

    /// Unvalidated constructor for degenerate test regimes (zero diffusion
    /// or coupling); entries must still be finite and nonnegative.
    pub fn unchecked(d1: f64, d2: f64, a: f64, b: f64, big_d1: f64, big_d2: f64) -> Self {
        let p = ModelParams { d1, d2, a, b, big_d1, big_d2 };
        for (name, v) in p.named() {
            assert!(v.is_finite() && v >= 0.0, "{name} must be finite and >= 0");
        }
        p
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("d1", self.d1),
            ("d2", self.d2),
            ("a", self.a),
            ("b", self.b),
            ("D1", self.big_d1),
            ("D2", self.big_d2),
        ]
    }
}

/// State g = (u, v, w, z): four fields on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldQuartet {
    pub u: Field,
    pub v: Field,
    pub w: Field,
    pub z: Field,
}

impl FieldQuartet {
    pub fn new(u: Field, v: Field, w: Field, z: Field) -> Result<Self> {
        check_same_grid(&u, &v)?;
        check_same_grid(&u, &w)?;
        check_same_grid(&u, &z)?;
        let q = FieldQuartet { u, v, w, z };
        if !q.is_finite() {
            return Err(BicellError::NonFinite { t: f64::NAN });
        }
        Ok(q)
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        FieldQuartet {
            u: Field::zeros(grid),
            v: Field::zeros(grid),
            w: Field::zeros(grid),
            z: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn components(&self) -> [&Field; 4] {
        [&self.u, &self.v, &self.w, &self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|f| f.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.components()
            .iter()
            .fold(0.0_f64, |m, f| m.max(f.max_abs()))
    }

    pub fn scale(&self, c: f64) -> FieldQuartet {
        FieldQuartet {
            u: self.u.scale(c),
            v: self.v.scale(c),
            w: self.w.scale(c),
            z: self.z.scale(c),
        }
    }

    pub fn add_scaled(&self, c: f64, other: &FieldQuartet) -> Result<FieldQuartet> {
        Ok(FieldQuartet {
            u: self.u.add_scaled(c, &other.u)?,
            v: self.v.add_scaled(c, &other.v)?,
            w: self.w.add_scaled(c, &other.w)?,
            z: self.z.add_scaled(c, &other.z)?,
        })
    }

    /// Total squared L2 norm over the four components.
    pub fn total_l2_sq(&self) -> f64 {
        let grid = self.grid().clone();
        self.components()
            .iter()
            .map(|f| l2_norm_sq(&grid, f).expect("component on own grid"))
            .sum()
    }

    /// Rescales so the total squared L2 norm equals `target` (no-op on the
    /// zero state).
    pub fn scaled_to_total_l2_sq(&self, target: f64) -> FieldQuartet {
        let cur = self.total_l2_sq();
        if cur <= 0.0 {
            return self.clone();
        }
        self.scale((target / cur).sqrt())
    }
}

/// Linear recombinations y = u+v+w+z, psi = u+v-w-z, p = u+w, q = u-w.
#[derive(Debug, Clone)]
pub struct GroupedFields {
    pub y: Field,
    pub psi: Field,
    pub p: Field,
    pub q: Field,
}

/// Forms the grouped fields from a quartet.
pub fn grouping(g: &FieldQuartet) -> GroupedFields {
    let grid = g.grid().clone();
    let n = grid.node_count();
    let mut y = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let (u, v, w, z) = (
        g.u.values(),
        g.v.values(),
        g.w.values(),
        g.z.values(),
    );
    for i in 0..n {
        y[i] = u[i] + v[i] + w[i] + z[i];
        // Pairing like components keeps psi exactly zero on symmetric states.
        psi[i] = (u[i] - w[i]) + (v[i] - z[i]);
        p[i] = u[i] + w[i];
        q[i] = u[i] - w[i];
    }
    GroupedFields {
        y: Field::from_values(&grid, y).expect("same grid"),
        psi: Field::from_values(&grid, psi).expect("same grid"),
        p: Field::from_values(&grid, p).expect("same grid"),
        q: Field::from_values(&grid, q).expect("same grid"),
    }
}

impl GroupedFields {
    /// Inverts the grouping: u = (p+q)/2, w = (p-q)/2, v = (y+psi)/2 - u,
    /// z = (y-psi)/2 - w.
    pub fn reconstruct(&self) -> Result<FieldQuartet> {
        let grid = self.y.grid().clone();
        let n = grid.node_count();
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            u[i] = 0.5 * (self.p.values()[i] + self.q.values()[i]);
            w[i] = 0.5 * (self.p.values()[i] - self.q.values()[i]);
            v[i] = 0.5 * (self.y.values()[i] + self.psi.values()[i]) - u[i];
            z[i] = 0.5 * (self.y.values()[i] - self.psi.values()[i]) - w[i];
        }
        FieldQuartet::new(
            Field::from_values(&grid, u)?,
            Field::from_values(&grid, v)?,
            Field::from_values(&grid, w)?,
            Field::from_values(&grid, z)?,
        )
    }
}

/// All norms of a quartet under the grid quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuartetNorms {
    /// ||f||^2 per component (u, v, w, z order).
    pub l2_sq: [f64; 4],
    /// Dirichlet form <-Lap f, f> per component.
    pub grad_sq: [f64; 4],
    /// L4 norm per component.
    pub l4: [f64; 4],
    pub total_l2_sq: f64,
}

/// Computes L2, Dirichlet-form, and L4 norms for every component.
pub fn norms(g: &FieldQuartet) -> QuartetNorms {
    let grid = g.grid().clone();
    let mut l2_sq = [0.0; 4];
    let mut grad_sq = [0.0; 4];
    let mut l4 = [0.0; 4];
    for (k, f) in g.components().iter().enumerate() {
        l2_sq[k] = l2_norm_sq(&grid, f).expect("component on own grid");
        grad_sq[k] = dirichlet_energy(&grid, f).expect("component on own grid");
        let fourth = Field::from_values(
            &grid,
            f.values().iter().map(|v| v * v * v * v).collect(),
        )
        .expect("same grid");
        l4[k] = integrate(&grid, &fourth)
            .expect("component on own grid")
            .powf(0.25);
    }
    QuartetNorms {
        l2_sq,
        grad_sq,
        l4,
        total_l2_sq: l2_sq.iter().sum(),
    }
}

/// Integral of f^2 over the node set { |criterion| >= level }.
pub fn tail_mass(f: &Field, criterion: &Field, level: f64) -> Result<f64> {
    check_same_grid(f, criterion)?;
    if level.is_nan() || level < 0.0 {
        return Err(BicellError::InvalidArgument(format!(
            "level must be >= 0, got {level}"
        )));
    }
    let w = f.grid().weight();
    let mass: f64 = f
        .values()
        .iter()
        .zip(criterion.values())
        .filter(|(_, c)| c.abs() >= level)
        .map(|(v, _)| v * v)
        .sum();
    // An empty mask can sum to -0.0; adding +0.0 normalizes the sign.
    Ok(w * mass + 0.0)
}

/// Which side of the threshold a masked functional keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Nodes with |criterion| < level.
    StrictBelow,
    /// Nodes with |criterion| >= level.
    AtOrAbove,
}

/// Dirichlet-form energy restricted to masked nodes.
///
/// Each node owns half of every stencil edge to an interior neighbor and the
/// whole of each edge to the boundary, so the two mask modes partition the
/// full Dirichlet energy exactly.
pub fn masked_grad_sq(
    f: &Field,
    criterion: &Field,
    level: f64,
    mode: MaskMode,
) -> Result<f64> {
    check_same_grid(f, criterion)?;
    if level.is_nan() || level < 0.0 {
        return Err(BicellError::InvalidArgument(format!(
            "level must be >= 0, got {level}"
        )));
    }
    let grid = f.grid().clone();
    let keep = |idx: usize| {
        let inside = criterion.values()[idx].abs() >= level;
        match mode {
            MaskMode::AtOrAbove => inside,
            MaskMode::StrictBelow => !inside,
        }
    };
    let v = f.values();
    let mut total = 0.0;
    match grid.dim() {
        1 => {
            let n = grid.axis(0).count;
            let w = grid.weight() / (grid.axis(0).h * grid.axis(0).h);
            for i in 0..n {
                if !keep(i) {
                    continue;
                }
                let mut e = 0.0;
                if i > 0 {
                    e += 0.5 * (v[i] - v[i - 1]).powi(2);
                } else {
                    e += v[i] * v[i];
                }
                if i + 1 < n {
                    e += 0.5 * (v[i] - v[i + 1]).powi(2);
                } else {
                    e += v[i] * v[i];
                }
                total += w * e;
            }
        }
        _ => {
            let nx = grid.axis(0).count;
            let ny = grid.axis(1).count;
            let wx = grid.weight() / (grid.axis(0).h * grid.axis(0).h);
            let wy = grid.weight() / (grid.axis(1).h * grid.axis(1).h);
            for ix in 0..nx {
                for iy in 0..ny {
                    let idx = ix * ny + iy;
                    if !keep(idx) {
                        continue;
                    }
                    let c = v[idx];
                    let mut ex = 0.0;
                    let mut ey = 0.0;
                    ex += if ix > 0 { 0.5 * (c - v[idx - ny]).powi(2) } else { c * c };
                    ex += if ix + 1 < nx { 0.5 * (c - v[idx + ny]).powi(2) } else { c * c };
                    ey += if iy > 0 { 0.5 * (c - v[idx - 1]).powi(2) } else { c * c };
                    ey += if iy + 1 < ny { 0.5 * (c - v[idx + 1]).powi(2) } else { c * c };
                    total += wx * ex + wy * ey;
                }
            }
        }
    }
    Ok(total)
}
