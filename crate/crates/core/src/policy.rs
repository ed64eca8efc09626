//! Feedback objects extracted from a solved value field: the truncated
//! exponential control density, its sampler, the exploratory diffusion
//! coefficient, and the two-valued bang-bang coefficient.

use crate::error::{Error, Result};
use crate::grid::{fd_laplacian, Grid, ScalarField};
use crate::operators::{log_partition_interval, truncated_exp_mean, ProblemSpec};
use rand::Rng;

/// Immutable feedback policy: a rate field `z = lap(v)/lambda` on a grid.
///
/// Boundary nodes carry the rate of the nearest interior node, so the policy
/// is defined everywhere a reflected path can stand.
#[derive(Debug, Clone)]
pub struct FeedbackPolicy {
    grid: Grid,
    z: Vec<f64>,
    spec: ProblemSpec,
}

pub fn build_policy(v: &ScalarField, spec: &ProblemSpec) -> Result<FeedbackPolicy> {
    if !v.is_finite() {
        return Err(Error::Config("value field contains non-finite entries".into()));
    }
    let mut z = boundary_copied_laplacian(v);
    for zi in &mut z {
        *zi /= spec.lambda;
    }
    FeedbackPolicy::from_z_field(*v.grid(), z, *spec)
}

/// Discrete Laplacian per node, with boundary nodes copying the nearest
/// interior value so derived feedback quantities are defined box-wide.
pub fn boundary_copied_laplacian(v: &ScalarField) -> Vec<f64> {
    let grid = *v.grid();
    let n = grid.points_per_axis();
    (0..grid.num_nodes())
        .map(|i| {
            let mut idx = grid.axis_indices(i);
            for k in idx.iter_mut().take(grid.dim()) {
                *k = (*k).clamp(1, n - 2);
            }
            fd_laplacian(v, grid.flat_index(idx))
        })
        .collect()
}

impl FeedbackPolicy {
    /// Build directly from a rate field; the uniform policy is `z = 0`.
    pub fn from_z_field(grid: Grid, z: Vec<f64>, spec: ProblemSpec) -> Result<FeedbackPolicy> {
        if z.len() != grid.num_nodes() {
            return Err(Error::GridMismatch("rate field does not match the grid".into()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("rate field contains non-finite entries".into()));
        }
        Ok(FeedbackPolicy { grid, z, spec })
    }

    pub fn uniform(grid: Grid, spec: ProblemSpec) -> FeedbackPolicy {
        FeedbackPolicy { grid, z: vec![0.0; grid.num_nodes()], spec }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn z(&self, node: usize) -> f64 {
        self.z[node]
    }

    /// Multilinear interpolation of the rate field at an arbitrary point
    /// (clamped to the box). Bounds on the diffusion coefficient survive
    /// interpolation because the mean formula is bounded for every rate.
    pub fn z_at(&self, x: &[f64]) -> f64 {
        crate::grid::interpolate(&self.grid, &self.z, x)
    }

    /// Normalized control density at a grid node, `exp(-z u)/Z`.
    pub fn density(&self, node: usize, u: f64) -> Result<f64> {
        if !(self.spec.a..=1.0).contains(&u) {
            return Err(Error::ControlDomain(u));
        }
        let z = self.z[node];
        Ok((-z * u - log_partition_interval(z, self.spec.a)).exp())
    }

    /// Exploratory diffusion coefficient at a grid node.
    pub fn g_lambda(&self, node: usize) -> f64 {
        g_from_rate(self.z[node], self.spec.a)
    }

    /// Exploratory diffusion coefficient at an arbitrary point.
    pub fn g_lambda_at(&self, x: &[f64]) -> f64 {
        g_from_rate(self.z_at(x), self.spec.a)
    }

    /// The diffusion coefficient as a field, for CSV export.
    pub fn g_field(&self) -> ScalarField {
        let values = (0..self.grid.num_nodes()).map(|i| self.g_lambda(i)).collect();
        ScalarField::from_values(self.grid, values).expect("rate field matches grid")
    }

    /// Inverse-CDF sample of the control density at a grid node.
    pub fn sample<R: Rng + ?Sized>(&self, node: usize, rng: &mut R) -> f64 {
        sample_truncated_exp(self.z[node], self.spec.a, rng.gen::<f64>())
    }
}

/// `sqrt(2 m(z))`, continuous in the rate and confined to
/// `[sqrt(2a), sqrt(2)]` for every finite rate.
pub fn g_from_rate(z: f64, a: f64) -> f64 {
    (2.0 * truncated_exp_mean(z, a)).sqrt()
}

/// Two-valued diffusion coefficient of the classical solution: low
/// temperature when the discrete Laplacian is nonnegative (ties included),
/// high temperature otherwise.
pub fn bangbang_diffusion(v_classical: &ScalarField, a: f64, node: usize) -> f64 {
    if fd_laplacian(v_classical, node) >= 0.0 {
        (2.0 * a).sqrt()
    } else {
        2.0f64.sqrt()
    }
}

/// Inverse-CDF transform of a uniform variate `p` to the exponential density
/// with rate `z` truncated to `[a, 1]`.
fn sample_truncated_exp(z: f64, a: f64, p: f64) -> f64 {
    let len = 1.0 - a;
    let w = z * len;
    if w.abs() < 1e-8 {
        return a + p * len;
    }
    // F(u) = (1 - e^{-z(u-a)}) / (1 - e^{-w})
    let s = -(-w).exp_m1();
    let u = a - (-p * s).ln_1p() / z;
    u.clamp(a, 1.0)
}
