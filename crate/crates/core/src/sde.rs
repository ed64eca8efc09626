//! Euler-Maruyama ensembles for the three controlled diffusions, stationary
//! histograms, Gibbs comparisons, and generator diagnostics.
//!
//! Reproducibility contract: path `p` draws from `ChaCha8` seeded with the
//! master seed on stream `p`, so ensembles are bit-identical for a fixed
//! seed under any parallel schedule, and statistics are reduced in path
//! index order.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{fd_gradient, fd_laplacian, interpolate, ScalarField};
use crate::landscape::Landscape;
use crate::policy::{boundary_copied_laplacian, FeedbackPolicy};
use crate::MAX_DIM;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SdeConfig {
    /// Time step; capped at 1e-2.
    pub dt: f64,
    /// Simulation horizon T.
    pub horizon: f64,
    /// Burn-in time discarded before stationary sampling.
    pub burn_in: f64,
    /// Number of independent paths.
    pub paths: usize,
    /// Master seed; path p uses rng stream p.
    pub seed: u64,
    /// Common initial condition.
    pub x0: Vec<f64>,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    /// Reflection box `[-box_halfwidth, box_halfwidth]^d`.
    pub box_halfwidth: f64,
}

impl Default for SdeConfig {
    fn default() -> SdeConfig {
        SdeConfig {
            dt: 5e-3,
            horizon: 400.0,
            burn_in: 200.0,
            paths: 128,
            seed: 0,
            x0: vec![0.0],
            thin: 5,
            box_halfwidth: 3.0,
        }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(Error::Config(format!("dt must lie in (0, 1e-2], got {}", self.dt)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(Error::Config("burn-in must satisfy 0 <= T0 < T".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("need at least one path".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.x0.is_empty() || self.x0.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(self.x0.len()));
        }
        if !(self.box_halfwidth > 0.0) {
            return Err(Error::Config("box halfwidth must be positive".into()));
        }
        if self.x0.iter().any(|t| t.abs() > self.box_halfwidth) {
            return Err(Error::Config("initial condition outside the reflection box".into()));
        }
        Ok(())
    }
}

/// Simulation output: final states, pooled post-burn-in samples in path-major
/// order, and the ensemble-mean running minimum of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub dim: usize,
    pub dt: f64,
    pub finals: Vec<[f64; MAX_DIM]>,
    pub samples: Vec<[f64; MAX_DIM]>,
    /// (time, mean over paths of the running minimum of f).
    pub best_f_trace: Vec<(f64, f64)>,
    pub best_f_final: Vec<f64>,
}

impl PathEnsemble {
    pub fn write_finals_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x_{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in &self.finals {
            let row: Vec<String> = p[..self.dim].iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_best_f_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,best_f_mean")?;
        for (t, v) in &self.best_f_trace {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

struct PathOut {
    final_x: [f64; MAX_DIM],
    samples: Vec<[f64; MAX_DIM]>,
    best_trace: Vec<f64>,
    best: f64,
}

#[inline]
fn reflect(mut t: f64, l: f64) -> f64 {
    loop {
        if t > l {
            t = 2.0 * l - t;
        } else if t < -l {
            t = -2.0 * l - t;
        } else {
            return t;
        }
    }
}

fn run_ensemble(
    landscape: &Landscape,
    g: &(impl Fn(&[f64]) -> f64 + Sync),
    config: &SdeConfig,
) -> Result<PathEnsemble> {
    config.validate()?;
    let d = landscape.dim();
    if config.x0.len() != d {
        return Err(Error::GridMismatch(format!(
            "initial condition has dimension {}, landscape {d}",
            config.x0.len()
        )));
    }
    let steps = (config.horizon / config.dt).ceil() as usize;
    let burn = (config.burn_in / config.dt).ceil() as usize;
    let stride = (steps / 512).max(1);
    let sqrt_dt = config.dt.sqrt();

    let runs: Vec<Result<PathOut>> = exec::map_collect(config.paths, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(p as u64);
        let mut x = [0.0f64; MAX_DIM];
        x[..d].copy_from_slice(&config.x0);
        let mut best = landscape.f(&x[..d]);
        let mut best_trace = Vec::with_capacity(steps / stride + 1);
        let mut samples = Vec::with_capacity((steps - burn) / config.thin + 1);
        for k in 0..steps {
            let gx = g(&x[..d]);
            let grad = landscape.grad(&x[..d]);
            for i in 0..d {
                let xi: f64 = rng.sample(StandardNormal);
                x[i] = reflect(
                    x[i] - grad[i] * config.dt + gx * sqrt_dt * xi,
                    config.box_halfwidth,
                );
            }
            if x[..d].iter().any(|t| !t.is_finite()) {
                return Err(Error::Blowup(format!("path {p} produced NaN at step {k}")));
            }
            best = best.min(landscape.f(&x[..d]));
            if (k + 1) % stride == 0 {
                best_trace.push(best);
            }
            if k >= burn && (k - burn) % config.thin == 0 {
                samples.push(x);
            }
        }
        Ok(PathOut { final_x: x, samples, best_trace, best })
    });

    let mut finals = Vec::with_capacity(config.paths);
    let mut samples = Vec::new();
    let mut best_f_final = Vec::with_capacity(config.paths);
    let trace_len = steps / stride;
    let mut trace_sum = vec![0.0f64; trace_len];
    for run in runs {
        let out = run?;
        finals.push(out.final_x);
        samples.extend_from_slice(&out.samples);
        best_f_final.push(out.best);
        for (acc, v) in trace_sum.iter_mut().zip(&out.best_trace) {
            *acc += v;
        }
    }
    let best_f_trace = trace_sum
        .into_iter()
        .enumerate()
        .map(|(i, s)| (((i + 1) * stride) as f64 * config.dt, s / config.paths as f64))
        .collect();

    Ok(PathEnsemble { dim: d, dt: config.dt, finals, samples, best_f_trace, best_f_final })
}

/// Exploratory diffusion `dx = -grad f dt + g_lambda(x) dB`, reflected at
/// the box boundary. Every increment's coefficient is asserted to respect
/// the closed-form bounds.
pub fn simulate_exploratory(
    landscape: &Landscape,
    policy: &FeedbackPolicy,
    config: &SdeConfig,
) -> Result<PathEnsemble> {
    if policy.grid().dim() != landscape.dim() {
        return Err(Error::GridMismatch("policy and landscape dimensions differ".into()));
    }
    if config.box_halfwidth > policy.grid().halfwidth() + 1e-12 {
        return Err(Error::Config("reflection box exceeds the policy grid".into()));
    }
    let lo = (2.0 * policy.spec().a).sqrt() - 1e-12;
    let hi = std::f64::consts::SQRT_2 + 1e-12;
    run_ensemble(
        landscape,
        &|x: &[f64]| {
            let g = policy.g_lambda_at(x);
            assert!(g >= lo && g <= hi, "diffusion coefficient {g} out of bounds");
            g
        },
        config,
    )
}

/// Bang-bang diffusion driven by the sign of the (interpolated) discrete
/// Laplacian of the classical value field.
pub fn simulate_bangbang(
    landscape: &Landscape,
    v_classical: &ScalarField,
    a: f64,
    config: &SdeConfig,
) -> Result<PathEnsemble> {
    if v_classical.grid().dim() != landscape.dim() {
        return Err(Error::GridMismatch("value field and landscape dimensions differ".into()));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Config(format!("control lower bound a must lie in (0,1), got {a}")));
    }
    let grid = *v_classical.grid();
    let lap = boundary_copied_laplacian(v_classical);
    let low = (2.0 * a).sqrt();
    let high = std::f64::consts::SQRT_2;
    run_ensemble(
        landscape,
        &|x: &[f64]| {
            if interpolate(&grid, &lap, x) >= 0.0 {
                low
            } else {
                high
            }
        },
        config,
    )
}

/// Constant-temperature Langevin diffusion `dx = -grad f dt + sqrt(2 beta) dB`.
pub fn simulate_langevin(
    landscape: &Landscape,
    beta: f64,
    config: &SdeConfig,
) -> Result<PathEnsemble> {
    if !(beta > 0.0) {
        return Err(Error::Config("beta must be positive".into()));
    }
    let g = (2.0 * beta).sqrt();
    run_ensemble(landscape, &|_x: &[f64]| g, config)
}

/// One-dimensional histogram with explicit bin edges; probabilities sum to 1.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StationaryEstimate {
    pub edges: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub sample_count: usize,
    pub effective_samples: usize,
}

impl StationaryEstimate {
    pub fn bins(&self) -> usize {
        self.probabilities.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.edges[self.edges.len() - 1] - self.edges[0]) / self.bins() as f64
    }

    /// Probability density of the bin containing `x` (0 outside the box).
    pub fn density_at(&self, x: f64) -> f64 {
        let lo = self.edges[0];
        let hi = self.edges[self.edges.len() - 1];
        if x < lo || x > hi {
            return 0.0;
        }
        let w = self.bin_width();
        let i = (((x - lo) / w) as usize).min(self.bins() - 1);
        self.probabilities[i] / w
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,probability")?;
        for (i, p) in self.probabilities.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[i], self.edges[i + 1], p)?;
        }
        Ok(())
    }
}

/// Histogram of the pooled post-burn-in samples of a 1-D ensemble.
pub fn estimate_stationary(
    ensemble: &PathEnsemble,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<StationaryEstimate> {
    if ensemble.dim != 1 {
        return Err(Error::Config(
            "stationary histograms are one-dimensional; project or slice first".into(),
        ));
    }
    if ensemble.samples.is_empty() {
        return Err(Error::InsufficientData("no post-burn-in samples".into()));
    }
    if bins == 0 || !(lo < hi) {
        return Err(Error::Config("histogram needs lo < hi and at least one bin".into()));
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for s in &ensemble.samples {
        let i = (((s[0] - lo) / w).floor().max(0.0) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let total = ensemble.samples.len();
    let edges = (0..=bins).map(|i| lo + i as f64 * w).collect();
    let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(StationaryEstimate {
        edges,
        probabilities,
        sample_count: total,
        effective_samples: total,
    })
}

// midpoint quadrature of exp(-f/beta) per bin, shifted by min f for
// underflow safety, then normalized
fn gibbs_on_edges(landscape: &Landscape, beta: f64, edges: &[f64]) -> Result<Vec<f64>> {
    const SUB: usize = 8;
    let bins = edges.len() - 1;
    let mut fvals = Vec::with_capacity(bins * SUB);
    for b in 0..bins {
        let w = edges[b + 1] - edges[b];
        for s in 0..SUB {
            let x = edges[b] + (s as f64 + 0.5) / SUB as f64 * w;
            fvals.push(landscape.f(&[x]));
        }
    }
    let fmin = fvals.iter().copied().fold(f64::INFINITY, f64::min);
    let mut masses = vec![0.0f64; bins];
    for b in 0..bins {
        let w = edges[b + 1] - edges[b];
        for s in 0..SUB {
            masses[b] += (-(fvals[b * SUB + s] - fmin) / beta).exp() * w / SUB as f64;
        }
    }
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Config(format!("Gibbs weights degenerate at beta = {beta}")));
    }
    for m in &mut masses {
        *m /= total;
    }
    Ok(masses)
}

/// Binned Gibbs measure proportional to `exp(-f/beta)` on `[lo, hi]`.
pub fn gibbs_density(
    landscape: &Landscape,
    beta: f64,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<StationaryEstimate> {
    if landscape.dim() != 1 {
        return Err(Error::Config("Gibbs binning is one-dimensional".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::Config("beta must be positive".into()));
    }
    if bins == 0 || !(lo < hi) {
        return Err(Error::Config("Gibbs binning needs lo < hi and at least one bin".into()));
    }
    let w = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * w).collect();
    let probabilities = gibbs_on_edges(landscape, beta, &edges)?;
    Ok(StationaryEstimate { edges, probabilities, sample_count: 0, effective_samples: 0 })
}

/// Total variation distance between two histograms on identical bins.
pub fn tv_distance(p: &StationaryEstimate, q: &StationaryEstimate) -> Result<f64> {
    if p.edges.len() != q.edges.len()
        || p.edges.iter().zip(&q.edges).any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(Error::GridMismatch("histograms use different bin edges".into()));
    }
    Ok(0.5
        * p.probabilities
            .iter()
            .zip(&q.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Best Gibbs fit over a temperature grid, refined by golden-section search
/// on the bracketing interval. Returns `(beta_star, tv_star)`.
pub fn fit_gibbs(
    estimate: &StationaryEstimate,
    landscape: &Landscape,
    beta_grid: &[f64],
) -> Result<(f64, f64)> {
    if beta_grid.is_empty() {
        return Err(Error::Config("beta grid must be nonempty".into()));
    }
    let tv_at = |beta: f64| -> Result<f64> {
        let probs = gibbs_on_edges(landscape, beta, &estimate.edges)?;
        Ok(0.5
            * estimate
                .probabilities
                .iter()
                .zip(&probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    };
    let mut best_i = 0;
    let mut best_tv = f64::INFINITY;
    for (i, &b) in beta_grid.iter().enumerate() {
        let tv = tv_at(b)?;
        if tv < best_tv {
            best_tv = tv;
            best_i = i;
        }
    }
    let mut lo = beta_grid[best_i.saturating_sub(1)];
    let mut hi = beta_grid[(best_i + 1).min(beta_grid.len() - 1)];
    if lo >= hi {
        return Ok((beta_grid[best_i], best_tv));
    }
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = tv_at(x1)?;
    let mut f2 = tv_at(x2)?;
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = tv_at(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = tv_at(x2)?;
        }
    }
    let (beta_star, tv_star) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if tv_star <= best_tv {
        Ok((beta_star, tv_star))
    } else {
        Ok((beta_grid[best_i], best_tv))
    }
}

/// Discrete generator `L psi = -grad f . grad psi + (g^2/2) lap psi` with
/// central first differences.
pub fn generator_apply(
    landscape: &Landscape,
    g: &ScalarField,
    psi: &ScalarField,
) -> Result<ScalarField> {
    if g.grid() != psi.grid() {
        return Err(Error::GridMismatch("generator fields live on different grids".into()));
    }
    let grid = *psi.grid();
    if landscape.dim() != grid.dim() {
        return Err(Error::GridMismatch("landscape and grid dimensions differ".into()));
    }
    let d = grid.dim();
    let zero_drift = [0.0f64; MAX_DIM];
    let values = exec::map_collect(grid.num_nodes(), |i| {
        let x = grid.coord(i);
        let gf = landscape.grad(&x[..d]);
        let gp = fd_gradient(psi, i, &zero_drift);
        let drift: f64 = gf[..d].iter().zip(&gp[..d]).map(|(a, b)| -a * b).sum();
        let gi = g.values()[i];
        drift + 0.5 * gi * gi * fd_laplacian(psi, i)
    });
    ScalarField::from_values(grid, values)
}

/// Discrete adjoint `L* rho = sum_i d_i(d_i f rho) + (1/2) lap(g^2 rho)`,
/// central differences, zero at boundary nodes.
pub fn adjoint_residual(
    landscape: &Landscape,
    g: &ScalarField,
    rho: &ScalarField,
) -> Result<ScalarField> {
    if g.grid() != rho.grid() {
        return Err(Error::GridMismatch("adjoint fields live on different grids".into()));
    }
    let grid = *rho.grid();
    if landscape.dim() != grid.dim() {
        return Err(Error::GridMismatch("landscape and grid dimensions differ".into()));
    }
    let d = grid.dim();
    // flux components d_i f * rho and the diffusion payload g^2 rho
    let mut flux = Vec::with_capacity(d);
    for k in 0..d {
        flux.push(ScalarField::from_fn(grid, |x| landscape.grad(x)[k]));
    }
    for (i, &r) in rho.values().iter().enumerate() {
        for fk in flux.iter_mut() {
            fk.values_mut()[i] *= r;
        }
    }
    let mut diff = g.clone();
    for (i, v) in diff.values_mut().iter_mut().enumerate() {
        *v = *v * *v * rho.values()[i];
    }
    let zero_drift = [0.0f64; MAX_DIM];
    let values = exec::map_collect(grid.num_nodes(), |i| {
        if !grid.is_interior(i) {
            return 0.0;
        }
        let mut acc = 0.5 * fd_laplacian(&diff, i);
        for (k, fk) in flux.iter().enumerate() {
            acc += fd_gradient(fk, i, &zero_drift)[k];
        }
        acc
    });
    ScalarField::from_values(grid, values)
}

/// Drift-condition scan with the Lyapunov function `V = f + offset`
/// (offset chosen so `V >= 1` on the grid).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LyapunovReport {
    /// Negated maximum of `L V` over the shell `|x| >= radius`.
    pub m1: f64,
    /// Maximum of `L V` over the complementary compact box.
    pub m2: f64,
    pub radius: f64,
    pub offset: f64,
    pub passes: bool,
}

pub fn check_lyapunov(
    landscape: &Landscape,
    g: &ScalarField,
    shell_radius: f64,
) -> Result<LyapunovReport> {
    let grid = *g.grid();
    if landscape.dim() != grid.dim() {
        return Err(Error::GridMismatch("landscape and grid dimensions differ".into()));
    }
    if !(shell_radius > 0.0 && shell_radius < grid.halfwidth()) {
        return Err(Error::Config("shell radius must lie inside the box".into()));
    }
    let d = grid.dim();
    let f_min = (0..grid.num_nodes())
        .map(|i| landscape.f(&grid.coord(i)[..d]))
        .fold(f64::INFINITY, f64::min);
    let offset = 1.0 - f_min;
    let mut shell_max = f64::NEG_INFINITY;
    let mut inner_max = f64::NEG_INFINITY;
    for i in 0..grid.num_nodes() {
        let x = grid.coord(i);
        let gn = landscape.grad_norm(&x[..d]);
        let gi = g.values()[i];
        let lv = -gn * gn + 0.5 * gi * gi * landscape.laplacian(&x[..d]);
        let r: f64 = x[..d].iter().map(|t| t * t).sum::<f64>().sqrt();
        if r >= shell_radius {
            shell_max = shell_max.max(lv);
        } else {
            inner_max = inner_max.max(lv);
        }
    }
    if !shell_max.is_finite() {
        return Err(Error::Config("no grid nodes in the shell".into()));
    }
    Ok(LyapunovReport {
        m1: -shell_max,
        m2: inner_max,
        radius: shell_radius,
        offset,
        passes: -shell_max > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operators::ProblemSpec;
    use crate::policy::build_policy;
    use crate::solver::{solve_classical_hjb, SolverConfig};
    use approx::assert_abs_diff_eq;

    fn spec(lambda: f64) -> ProblemSpec {
        ProblemSpec::new(lambda, 1.0, 0.5).unwrap()
    }

    fn variance_1d(points: &[[f64; MAX_DIM]]) -> f64 {
        let n = points.len() as f64;
        let mean = points.iter().map(|p| p[0]).sum::<f64>() / n;
        points.iter().map(|p| (p[0] - mean).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn driftless_uniform_policy_diffuses_at_one_plus_a() {
        let zero = Landscape::builtin("zero").unwrap();
        let grid = Grid::new(1, 50.0, 21).unwrap();
        let policy = FeedbackPolicy::uniform(grid, spec(0.1));
        let cfg = SdeConfig {
            dt: 0.01,
            horizon: 1.0,
            burn_in: 0.0,
            paths: 20_000,
            seed: 1,
            box_halfwidth: 50.0,
            ..SdeConfig::default()
        };
        let e = simulate_exploratory(&zero, &policy, &cfg).unwrap();
        let var = variance_1d(&e.finals);
        assert!((var - 1.5).abs() < 0.05, "variance {var}, expected 1.5");
    }

    #[test]
    fn weak_error_is_small_in_dt() {
        let quad = Landscape::builtin("quadratic").unwrap();
        let base = SdeConfig {
            horizon: 2.0,
            burn_in: 0.0,
            paths: 20_000,
            seed: 2,
            box_halfwidth: 12.0,
            ..SdeConfig::default()
        };
        let run = |dt: f64| {
            let cfg = SdeConfig { dt, ..base.clone() };
            variance_1d(&simulate_langevin(&quad, 0.5, &cfg).unwrap().finals)
        };
        let coarse = run(0.01);
        let fine = run(0.005);
        let exact = 0.5 * (1.0 - (-4.0f64).exp());
        assert!((coarse - exact).abs() < 0.05);
        assert!((fine - exact).abs() < 0.05);
        assert!((coarse - fine).abs() < 0.03);
    }

    #[test]
    fn ensembles_are_bit_identical_per_seed() {
        let dw = Landscape::builtin("double_well_1d").unwrap();
        let cfg = SdeConfig {
            horizon: 2.0,
            burn_in: 1.0,
            paths: 8,
            seed: 7,
            ..SdeConfig::default()
        };
        let a = simulate_langevin(&dw, 0.3, &cfg).unwrap();
        let b = simulate_langevin(&dw, 0.3, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_langevin(&dw, 0.3, &SdeConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.finals, c.finals);
    }

    #[test]
    fn langevin_matches_gaussian_gibbs_variance() {
        let quad = Landscape::builtin("quadratic").unwrap();
        for &beta in &[1.0, 0.25] {
            let cfg = SdeConfig {
                dt: 0.01,
                horizon: 20.0,
                burn_in: 10.0,
                paths: 4000,
                seed: 3,
                thin: 10,
                box_halfwidth: 12.0,
                ..SdeConfig::default()
            };
            let e = simulate_langevin(&quad, beta, &cfg).unwrap();
            let var = variance_1d(&e.samples);
            assert!(
                (var - beta).abs() < 0.05 * beta + 0.01,
                "variance {var} vs beta {beta}"
            );
        }
    }

    #[test]
    fn bangbang_short_time_variance_in_convex_region() {
        let quad = Landscape::builtin("quadratic").unwrap();
        let grid = Grid::new(1, 3.0, 61).unwrap();
        let (vc, _) = solve_classical_hjb(&quad, grid, &spec(0.1), &SolverConfig::default()).unwrap();
        assert_eq!(crate::policy::bangbang_diffusion(&vc, 0.5, 30), 1.0);
        let cfg = SdeConfig {
            dt: 1e-3,
            horizon: 0.02,
            burn_in: 0.0,
            paths: 50_000,
            seed: 4,
            ..SdeConfig::default()
        };
        let e = simulate_bangbang(&quad, &vc, 0.5, &cfg).unwrap();
        let var = variance_1d(&e.finals);
        let exact = 0.5 * (1.0 - (-0.04f64).exp());
        assert!((var - exact).abs() < 2e-3, "variance {var} vs {exact}");
    }

    #[test]
    fn reflection_keeps_states_inside_the_box() {
        let zero = Landscape::builtin("zero").unwrap();
        let cfg = SdeConfig {
            dt: 0.01,
            horizon: 5.0,
            burn_in: 1.0,
            paths: 64,
            seed: 5,
            thin: 1,
            box_halfwidth: 0.5,
            ..SdeConfig::default()
        };
        let e = simulate_langevin(&zero, 1.0, &cfg).unwrap();
        for s in e.samples.iter().chain(&e.finals) {
            assert!(s[0].abs() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn best_f_trace_is_monotone_and_timed() {
        let dw = Landscape::builtin("double_well_1d").unwrap();
        let cfg = SdeConfig {
            horizon: 5.0,
            burn_in: 1.0,
            paths: 16,
            seed: 6,
            ..SdeConfig::default()
        };
        let e = simulate_langevin(&dw, 0.3, &cfg).unwrap();
        assert!(!e.best_f_trace.is_empty());
        for pair in e.best_f_trace.windows(2) {
            assert!(pair[1].1 <= pair[0].1 + 1e-12);
            assert!(pair[1].0 > pair[0].0);
        }
        assert_eq!(e.best_f_final.len(), 16);
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let zero = Landscape::builtin("zero").unwrap();
        let base = SdeConfig { horizon: 1.0, burn_in: 0.5, ..SdeConfig::default() };
        for bad in [
            SdeConfig { dt: 0.0, ..base.clone() },
            SdeConfig { dt: 0.05, ..base.clone() },
            SdeConfig { burn_in: 2.0, ..base.clone() },
            SdeConfig { paths: 0, ..base.clone() },
            SdeConfig { thin: 0, ..base.clone() },
            SdeConfig { box_halfwidth: -1.0, ..base.clone() },
            SdeConfig { x0: vec![10.0], ..base.clone() },
            SdeConfig { x0: vec![0.0; 3], ..base.clone() },
        ] {
            assert!(simulate_langevin(&zero, 1.0, &bad).is_err());
        }
        assert!(simulate_langevin(&zero, 0.0, &base).is_err());
    }

    fn synthetic_ensemble(values: Vec<f64>) -> PathEnsemble {
        PathEnsemble {
            dim: 1,
            dt: 0.01,
            finals: vec![],
            samples: values.into_iter().map(|v| [v, 0.0]).collect(),
            best_f_trace: vec![],
            best_f_final: vec![],
        }
    }

    #[test]
    fn histogram_of_a_point_mass() {
        let e = synthetic_ensemble(vec![0.42; 1000]);
        let h = estimate_stationary(&e, 0.0, 1.0, 10).unwrap();
        assert_eq!(h.probabilities[4], 1.0);
        assert_eq!(h.probabilities.iter().sum::<f64>(), 1.0);
        assert_eq!(h.sample_count, 1000);
    }

    #[test]
    fn histogram_of_uniform_samples_is_flat() {
        let n = 200_000;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let h = estimate_stationary(&synthetic_ensemble(vals), 0.0, 1.0, 20).unwrap();
        for &p in &h.probabilities {
            assert_abs_diff_eq!(p, 0.05, epsilon = 1e-3);
        }
        assert!(estimate_stationary(&synthetic_ensemble(vec![]), 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn gibbs_density_examples() {
        let quad = Landscape::builtin("quadratic").unwrap();
        let g = gibbs_density(&quad, 1.0, -6.0, 6.0, 2400).unwrap();
        assert_abs_diff_eq!(
            g.probabilities.iter().sum::<f64>(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(g.density_at(0.0), 1.0 / (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-4);

        // flat-exponent limit
        let flat = gibbs_density(&quad, 1e6, -1.0, 1.0, 40).unwrap();
        for &p in &flat.probabilities {
            assert_abs_diff_eq!(p, 1.0 / 40.0, epsilon = 1e-5);
        }

        let dw = Landscape::builtin("double_well_1d").unwrap();
        let b = gibbs_density(&dw, 0.3, -3.0, 3.0, 120).unwrap();
        let peak = b
            .probabilities
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap()
            .0;
        let center = 0.5 * (b.edges[peak] + b.edges[peak + 1]);
        assert!((center.abs() - 1.0).abs() <= b.bin_width());
        // symmetry: halves carry equal mass
        let left: f64 = b.probabilities[..60].iter().sum();
        assert_abs_diff_eq!(left, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tv_distance_examples() {
        let quad = Landscape::builtin("quadratic").unwrap();
        let p = gibbs_density(&quad, 1.0, -6.0, 6.0, 240).unwrap();
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);

        let mut a = p.clone();
        let mut b = p.clone();
        a.probabilities = vec![0.0; 240];
        b.probabilities = vec![0.0; 240];
        a.probabilities[0] = 1.0;
        b.probabilities[200] = 1.0;
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);

        // two unit-variance normals half a standard deviation apart
        let bins = 3200;
        let (lo, hi) = (-8.0f64, 8.5f64);
        let w = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * w).collect();
        let normal = |mu: f64| -> Vec<f64> {
            let mut v: Vec<f64> = (0..bins)
                .map(|i| {
                    let x = lo + (i as f64 + 0.5) * w;
                    (-(x - mu) * (x - mu) / 2.0).exp()
                })
                .collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|t| *t /= s);
            v
        };
        let mk = |mu: f64| StationaryEstimate {
            edges: edges.clone(),
            probabilities: normal(mu),
            sample_count: 0,
            effective_samples: 0,
        };
        let tv = tv_distance(&mk(0.0), &mk(0.5)).unwrap();
        assert_abs_diff_eq!(tv, 0.19741, epsilon = 1e-3);

        let other = gibbs_density(&quad, 1.0, -5.0, 6.0, 240).unwrap();
        assert!(tv_distance(&p, &other).is_err());
    }

    #[test]
    fn gibbs_self_fit_recovers_beta() {
        let dw = Landscape::builtin("double_well_1d").unwrap();
        let est = gibbs_density(&dw, 0.3, -3.0, 3.0, 120).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| 0.1 * 1.2f64.powi(i)).collect();
        let (beta, tv) = fit_gibbs(&est, &dw, &grid).unwrap();
        assert!((beta - 0.3).abs() < 0.03, "beta {beta}");
        assert!(tv < 1e-6, "tv {tv}");

        // a Dirac-like histogram fits no Gibbs measure
        let mut point = est.clone();
        point.probabilities = vec![0.0; 120];
        point.probabilities[60] = 1.0;
        let (_, tv) = fit_gibbs(&point, &dw, &grid).unwrap();
        assert!(tv > 0.9);
    }

    #[test]
    fn generator_on_constants_and_tails() {
        let dw = Landscape::builtin("double_well_1d").unwrap();
        let grid = Grid::new(1, 3.0, 61).unwrap();
        let g = ScalarField::constant(grid, 1.0);
        let psi = ScalarField::constant(grid, 5.0);
        let lp = generator_apply(&dw, &g, &psi).unwrap();
        assert!(lp.sup_norm() <= 1e-12);

        // L f is strongly negative in the tails for any admissible coefficient
        let f_field = ScalarField::from_fn(grid, |x| dw.f(x));
        for gval in [1.0, std::f64::consts::SQRT_2] {
            let gf = ScalarField::constant(grid, gval);
            let lf = generator_apply(&dw, &gf, &f_field).unwrap();
            for i in grid.interior_nodes() {
                if grid.coord(i)[0].abs() >= 2.0 {
                    assert!(lf.values()[i] < 0.0);
                }
            }
        }
    }

    #[test]
    fn adjoint_annihilates_gibbs_at_second_order() {
        let dw = Landscape::builtin("double_well_1d").unwrap();
        let beta = 0.5f64;
        let sup_residual = |n: usize| {
            let grid = Grid::new(1, 3.0, n).unwrap();
            let g = ScalarField::constant(grid, (2.0 * beta).sqrt());
            let mut rho = ScalarField::from_fn(grid, |x| (-dw.f(x) / beta).exp());
            let total: f64 = rho.values().iter().sum::<f64>() * grid.spacing();
            rho.scale(1.0 / total);
            adjoint_residual(&dw, &g, &rho).unwrap().sup_norm()
        };
        let coarse = sup_residual(81);
        let fine = sup_residual(161);
        let ratio = coarse / fine;
        assert!((2.8..=6.0).contains(&ratio), "refinement ratio {ratio}");
    }

    #[test]
    fn lyapunov_reports() {
        let dw = Landscape::builtin("double_well_1d").unwrap();
        let grid = Grid::new(1, 3.0, 61).unwrap();
        for gval in [1.0, std::f64::consts::SQRT_2] {
            let g = ScalarField::constant(grid, gval);
            let rep = check_lyapunov(&dw, &g, 2.0).unwrap();
            assert!(rep.passes, "m1 = {}", rep.m1);
            assert!(rep.m1 > 0.0 && rep.m2 > 0.0);
        }

        let zero = Landscape::builtin("zero").unwrap();
        let g = ScalarField::constant(grid, 1.0);
        let rep = check_lyapunov(&zero, &g, 2.0).unwrap();
        assert!(!rep.passes);

        let quad = Landscape::builtin("quadratic").unwrap();
        let rep = check_lyapunov(&quad, &g, 2.0).unwrap();
        assert_abs_diff_eq!(rep.m1, 4.0 - 0.5, epsilon = 1e-9);
        assert!(rep.passes);
    }

    #[test]
    fn exploratory_runs_on_a_solved_policy() {
        use crate::solver::solve_exploratory_hjb;
        let dw = Landscape::builtin("double_well_1d").unwrap();
        let grid = Grid::new(1, 3.0, 81).unwrap();
        let sp = spec(0.1);
        let (v, _) = solve_exploratory_hjb(&dw, grid, &sp, &SolverConfig::default()).unwrap();
        let policy = build_policy(&v, &sp).unwrap();
        let cfg = SdeConfig {
            horizon: 10.0,
            burn_in: 5.0,
            paths: 32,
            seed: 11,
            ..SdeConfig::default()
        };
        let e = simulate_exploratory(&dw, &policy, &cfg).unwrap();
        assert_eq!(e.finals.len(), 32);
        assert!(!e.samples.is_empty());
        let h = estimate_stationary(&e, -3.0, 3.0, 60).unwrap();
        assert_abs_diff_eq!(h.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn csv_writers_emit_headers() {
        let e = synthetic_ensemble(vec![0.1, 0.2]);
        let mut buf = Vec::new();
        e.write_finals_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x_1\n"));
        let h = estimate_stationary(&e, 0.0, 1.0, 4).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bin_lo,bin_hi,probability\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
