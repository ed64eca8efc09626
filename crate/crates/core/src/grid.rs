//! Truncated-box grids, scalar fields and finite-difference stencils.
//!
//! Grids are uniform tensor products on `[-L, L]^d` with `d` in {1, 2}.
//! The first difference is upwinded against the advection direction, the
//! second difference is central, and the box boundary carries a homogeneous
//! Neumann closure (mirror ghost nodes), approximating reflected dynamics.

use crate::error::{Error, Result};
use crate::MAX_DIM;
use std::io::{BufRead, Write};

/// Uniform grid on `[-L, L]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    halfwidth: f64,
    points_per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, halfwidth: f64, points_per_axis: usize) -> Result<Grid> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if !(halfwidth > 0.0) {
            return Err(Error::Config("grid halfwidth must be positive".into()));
        }
        if points_per_axis < 16 {
            return Err(Error::Config("grid needs at least 16 points per axis".into()));
        }
        Ok(Grid { dim, halfwidth, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / (self.points_per_axis - 1) as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Per-axis indices of a flat node index.
    #[inline]
    pub fn axis_indices(&self, node: usize) -> [usize; MAX_DIM] {
        let n = self.points_per_axis;
        match self.dim {
            1 => [node, 0],
            _ => [node % n, node / n],
        }
    }

    #[inline]
    pub fn flat_index(&self, idx: [usize; MAX_DIM]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] + self.points_per_axis * idx[1],
        }
    }

    /// Node coordinate: x_i = -L + i * h, reproducible bit-for-bit.
    #[inline]
    pub fn coord(&self, node: usize) -> [f64; MAX_DIM] {
        let idx = self.axis_indices(node);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = -self.halfwidth + idx[k] as f64 * h;
        }
        x
    }

    /// True when every axis index is strictly inside the box.
    #[inline]
    pub fn is_interior(&self, node: usize) -> bool {
        let idx = self.axis_indices(node);
        let n = self.points_per_axis;
        (0..self.dim).all(|k| idx[k] > 0 && idx[k] < n - 1)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(move |&i| self.is_interior(i))
    }
}

/// Values of a scalar function on every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> ScalarField {
        ScalarField { grid, values: vec![0.0; grid.num_nodes()] }
    }

    pub fn constant(grid: Grid, c: f64) -> ScalarField {
        ScalarField { grid, values: vec![c; grid.num_nodes()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.num_nodes() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.num_nodes(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = (0..grid.num_nodes()).map(|i| f(&grid.coord(i)[..grid.dim()])).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn add_scaled(&mut self, other: &ScalarField, s: f64) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Write the CSV schema `x_1[,x_2],value` with a mandatory header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.grid.dim();
        let header: Vec<String> = (1..=d).map(|k| format!("x_{k}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let x = self.grid.coord(i);
            for xk in x.iter().take(d) {
                write!(w, "{xk},")?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    /// Read a field previously written by [`ScalarField::write_csv`].
    pub fn read_csv<R: BufRead>(grid: Grid, r: R) -> Result<ScalarField> {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .rsplit(',')
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: empty row", lineno + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            values.push(v);
        }
        ScalarField::from_values(grid, values)
    }
}

/// Upwind first difference of `field` at `node`, selected per axis by the
/// sign of the advection velocity `drift`. The scheme discretizes the term
/// `+drift . grad(field)`, so positive drift takes the forward difference
/// (keeping neighbor coefficients nonnegative); central when the component
/// vanishes, one-sided on the boundary.
pub fn fd_gradient(field: &ScalarField, node: usize, drift: &[f64]) -> [f64; MAX_DIM] {
    let grid = field.grid;
    let v = &field.values;
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let idx = grid.axis_indices(node);
    let mut out = [0.0; MAX_DIM];
    for k in 0..grid.dim() {
        let stride = if k == 0 { 1 } else { n };
        let i = idx[k];
        let here = v[node];
        out[k] = if i == 0 {
            (v[node + stride] - here) / h
        } else if i == n - 1 {
            (here - v[node - stride]) / h
        } else if drift[k] > 0.0 {
            (v[node + stride] - here) / h
        } else if drift[k] < 0.0 {
            (here - v[node - stride]) / h
        } else {
            (v[node + stride] - v[node - stride]) / (2.0 * h)
        };
    }
    out
}

/// Second central difference summed over axes. Boundary nodes use the
/// Neumann mirror closure (ghost value equals the interior neighbor).
pub fn fd_laplacian(field: &ScalarField, node: usize) -> f64 {
    let grid = field.grid;
    let v = &field.values;
    let n = grid.points_per_axis;
    let h2 = grid.spacing() * grid.spacing();
    let idx = grid.axis_indices(node);
    let mut acc = 0.0;
    for k in 0..grid.dim() {
        let stride = if k == 0 { 1 } else { n };
        let i = idx[k];
        let here = v[node];
        let (left, right) = if i == 0 {
            (v[node + stride], v[node + stride])
        } else if i == n - 1 {
            (v[node - stride], v[node - stride])
        } else {
            (v[node - stride], v[node + stride])
        };
        acc += (left - 2.0 * here + right) / h2;
    }
    acc
}

/// Multilinear interpolation of node values at an arbitrary point, clamped
/// to the box.
pub fn interpolate(grid: &Grid, values: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(values.len(), grid.num_nodes());
    let h = grid.spacing();
    let n = grid.points_per_axis();
    let d = grid.dim();
    let mut base = [0usize; MAX_DIM];
    let mut frac = [0.0f64; MAX_DIM];
    for k in 0..d {
        let t = ((x[k] + grid.halfwidth()) / h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        base[k] = i;
        frac[k] = t - i as f64;
    }
    match d {
        1 => {
            let i = base[0];
            (1.0 - frac[0]) * values[i] + frac[0] * values[i + 1]
        }
        _ => {
            let idx = |i: usize, j: usize| i + n * j;
            let (i, j) = (base[0], base[1]);
            let (s, t) = (frac[0], frac[1]);
            (1.0 - s) * (1.0 - t) * values[idx(i, j)]
                + s * (1.0 - t) * values[idx(i + 1, j)]
                + (1.0 - s) * t * values[idx(i, j + 1)]
                + s * t * values[idx(i + 1, j + 1)]
        }
    }
}

/// Max of |A - B| over nodes with |x| <= r.
pub fn sup_norm_on_ball(a: &ScalarField, b: &ScalarField, r: f64) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("sup_norm_on_ball needs a shared grid".into()));
    }
    let grid = a.grid;
    let d = grid.dim();
    let r2 = r * r;
    let mut m: f64 = 0.0;
    for i in 0..grid.num_nodes() {
        let x = grid.coord(i);
        let n2: f64 = x[..d].iter().map(|t| t * t).sum();
        if n2 <= r2 {
            m = m.max((a.values[i] - b.values[i]).abs());
        }
    }
    Ok(m)
}
