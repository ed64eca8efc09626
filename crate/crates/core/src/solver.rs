//! Damped policy iteration for the stationary exploratory and classical
//! HJB equations on a truncated grid.
//!
//! Outer iterations freeze the feedback temperature field (the truncated
//! exponential mean, or the bang-bang selector) and its entropy source;
//! inner iterations relax the resulting linear equation by explicit
//! pseudo-time Jacobi sweeps. Convergence is measured by the sup norm of
//! the full nonlinear operator on interior nodes.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{fd_gradient, fd_laplacian, Grid, ScalarField};
use crate::landscape::Landscape;
use crate::operators::{
    classical_operator_tc, exploratory_operator_tc, truncated_exp_entropy, truncated_exp_mean,
    ProblemSpec,
};
use crate::MAX_DIM;

/// Which nonlinear operator the solve targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Exploratory,
    Classical,
}

/// Inner relaxation sweeps between policy refreshes and residual checks.
const SWEEPS_PER_OUTER: usize = 100;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Interior sup-norm residual target.
    pub tol: f64,
    /// Maximum number of outer (policy refresh) iterations.
    pub max_outer: usize,
    /// Pseudo-time step; `None` selects the explicit stability bound.
    pub dtau: Option<f64>,
    /// Damping factor in (0, 1] mixing the refreshed policy into the old one.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig { tol: 1e-8, max_outer: 10_000, dtau: None, damping: 1.0 }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config("solver tol must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if let Some(dt) = self.dtau {
            if !(dt > 0.0) {
                return Err(Error::Config("dtau must be positive".into()));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config("damping must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Convergence record of one solve.
///
/// `seconds` is wall-clock time and is excluded from serialization so that
/// serialized reports are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveReport {
    /// Total inner relaxation sweeps performed.
    pub iterations: usize,
    /// Final interior sup-norm residual of the nonlinear operator.
    pub residual: f64,
    /// Residual after every outer iteration (one entry per 100 sweeps).
    pub history: Vec<f64>,
    #[serde(skip)]
    pub seconds: f64,
}

pub fn solve_exploratory_hjb(
    landscape: &Landscape,
    grid: Grid,
    spec: &ProblemSpec,
    config: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    solve(landscape, grid, spec, config, OperatorKind::Exploratory)
}

pub fn solve_classical_hjb(
    landscape: &Landscape,
    grid: Grid,
    spec: &ProblemSpec,
    config: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    solve(landscape, grid, spec, config, OperatorKind::Classical)
}

struct Discretization {
    grid: Grid,
    f_vals: Vec<f64>,
    grad_f: Vec<[f64; MAX_DIM]>,
}

impl Discretization {
    fn new(landscape: &Landscape, grid: Grid) -> Result<Discretization> {
        if landscape.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "landscape dimension {} vs grid dimension {}",
                landscape.dim(),
                grid.dim()
            )));
        }
        let d = grid.dim();
        let f_vals = exec::map_collect(grid.num_nodes(), |i| landscape.f(&grid.coord(i)[..d]));
        let grad_f = exec::map_collect(grid.num_nodes(), |i| landscape.grad(&grid.coord(i)[..d]));
        if f_vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLandscape("non-finite objective on the grid".into()));
        }
        Ok(Discretization { grid, f_vals, grad_f })
    }

    /// Advection velocity of the descent dynamics at a node.
    #[inline]
    fn velocity(&self, node: usize) -> [f64; MAX_DIM] {
        let g = self.grad_f[node];
        [-g[0], -g[1]]
    }

    /// Nonlinear operator residual at a node of the current iterate.
    #[inline]
    fn residual_at(&self, kind: OperatorKind, spec: &ProblemSpec, v: &ScalarField, node: usize) -> f64 {
        let d = self.grid.dim();
        let vel = self.velocity(node);
        let gv = fd_gradient(v, node, &vel);
        let lap = fd_laplacian(v, node);
        let vv = v.values()[node];
        match kind {
            OperatorKind::Exploratory => exploratory_operator_tc(
                spec,
                vv,
                self.f_vals[node],
                &self.grad_f[node][..d],
                &gv[..d],
                lap,
            ),
            OperatorKind::Classical => classical_operator_tc(
                spec,
                vv,
                self.f_vals[node],
                &self.grad_f[node][..d],
                &gv[..d],
                lap,
            ),
        }
    }

    fn interior_sup_residual(&self, kind: OperatorKind, spec: &ProblemSpec, v: &ScalarField) -> f64 {
        exec::map_collect(self.grid.num_nodes(), |i| {
            if self.grid.is_interior(i) {
                self.residual_at(kind, spec, v, i).abs()
            } else {
                0.0
            }
        })
        .into_iter()
        .fold(0.0f64, f64::max)
    }
}

fn solve(
    landscape: &Landscape,
    grid: Grid,
    spec: &ProblemSpec,
    config: &SolverConfig,
    kind: OperatorKind,
) -> Result<(ScalarField, SolveReport)> {
    config.validate()?;
    let start = std::time::Instant::now();
    let disc = Discretization::new(landscape, grid)?;
    let d = grid.dim();
    let h = grid.spacing();
    let n = grid.num_nodes();

    // explicit stability bound with unit diffusion coefficient ceiling
    let vel_max = (0..n)
        .map(|i| disc.velocity(i)[..d].iter().map(|c| c.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let dtau = config
        .dtau
        .unwrap_or(0.9 / (spec.rho + vel_max / h + 2.0 * d as f64 / (h * h)));

    let f_min = disc.f_vals.iter().copied().fold(f64::INFINITY, f64::min);
    let mut v = ScalarField::constant(grid, f_min / spec.rho);
    let mut next = v.clone();

    // frozen policy: diffusion coefficient m and entropy source s per node
    let mut m = vec![0.0f64; n];
    let mut s = vec![0.0f64; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    for outer in 0..config.max_outer {
        let theta = if outer == 0 { 1.0 } else { config.damping };
        let fresh: Vec<(f64, f64)> = exec::map_collect(n, |i| {
            let lap = fd_laplacian(&v, i);
            match kind {
                OperatorKind::Exploratory => {
                    let z = lap / spec.lambda;
                    (
                        truncated_exp_mean(z, spec.a),
                        spec.lambda * truncated_exp_entropy(z, spec.a),
                    )
                }
                OperatorKind::Classical => (if lap >= 0.0 { spec.a } else { 1.0 }, 0.0),
            }
        });
        for i in 0..n {
            m[i] = (1.0 - theta) * m[i] + theta * fresh[i].0;
            s[i] = (1.0 - theta) * s[i] + theta * fresh[i].1;
        }

        for _ in 0..SWEEPS_PER_OUTER {
            {
                let (mr, sr, dr, vr) = (&m, &s, &disc, &v);
                exec::fill_indexed(next.values_mut(), |i| {
                    let vel = dr.velocity(i);
                    let gv = fd_gradient(vr, i, &vel);
                    let lap = fd_laplacian(vr, i);
                    let vv = vr.values()[i];
                    let advect: f64 =
                        vel[..d].iter().zip(&gv[..d]).map(|(c, g)| c * g).sum();
                    let lin = -spec.rho * vv + dr.f_vals[i] + advect + mr[i] * lap - sr[i];
                    vv + dtau * lin
                });
            }
            std::mem::swap(&mut v, &mut next);
        }
        iterations += SWEEPS_PER_OUTER;

        if !v.is_finite() {
            return Err(Error::Blowup(format!(
                "non-finite iterate after {iterations} sweeps"
            )));
        }
        let res = disc.interior_sup_residual(kind, spec, &v);
        history.push(res);
        if res <= config.tol {
            return Ok((
                v,
                SolveReport {
                    iterations,
                    residual: res,
                    history,
                    seconds: start.elapsed().as_secs_f64(),
                },
            ));
        }
    }

    let residual = *history.last().unwrap();
    Err(Error::Divergence { iterations, residual, history })
}

/// Pointwise nonlinear operator residual of `v`; zero on boundary nodes.
pub fn residual_field(
    v: &ScalarField,
    landscape: &Landscape,
    spec: &ProblemSpec,
    kind: OperatorKind,
) -> Result<ScalarField> {
    let grid = *v.grid();
    let disc = Discretization::new(landscape, grid)?;
    let values = exec::map_collect(grid.num_nodes(), |i| {
        if grid.is_interior(i) {
            disc.residual_at(kind, spec, v, i)
        } else {
            0.0
        }
    });
    ScalarField::from_values(grid, values)
}
