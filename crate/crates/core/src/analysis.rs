//! Orchestrated experiments: the lambda sweep against the classical limit,
//! the discounted-cost Monte Carlo oracle, and stationary-law stability in
//! lambda.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{sup_norm_on_ball, Grid};
use crate::landscape::Landscape;
use crate::operators::{log_partition_interval, truncated_exp_mean, ProblemSpec};
use crate::policy::{build_policy, FeedbackPolicy};
use crate::sde::{estimate_stationary, simulate_exploratory, tv_distance, SdeConfig};
use crate::solver::{solve_classical_hjb, solve_exploratory_hjb, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// FNV-1a hash of the textual encodings of a run's inputs, recorded in
/// experiment outputs for provenance.
pub fn fingerprint(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for b in part.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// Sup distance between the exploratory and classical solutions on the
    /// measurement ball.
    pub sup_error: f64,
    /// `sup_error / (lambda ln(1/lambda))`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `ln e` against `ln lambda`; `None` with fewer
    /// than two completed points.
    pub slope: Option<f64>,
    /// Max relative change of the errors when the domain halfwidth doubles
    /// at fixed spacing and measurement ball.
    pub doubling_max_rel_change: Option<f64>,
    /// First solve failure, if any; completed points are preserved.
    pub failure: Option<String>,
    pub fingerprint: u64,
}

fn fit_slope(points: &[SweepPoint]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.lambda.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.sup_error.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn sweep_errors(
    landscape: &Landscape,
    grid: Grid,
    template: &ProblemSpec,
    lambdas: &[f64],
    r: f64,
    solver: &SolverConfig,
) -> (Vec<SweepPoint>, Option<String>) {
    let classical = match solve_classical_hjb(landscape, grid, template, solver) {
        Ok((v, _)) => v,
        Err(e) => return (Vec::new(), Some(format!("classical solve: {e}"))),
    };
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let spec = ProblemSpec { lambda, ..*template };
        match solve_exploratory_hjb(landscape, grid, &spec, solver) {
            Ok((v, _)) => {
                let e = sup_norm_on_ball(&v, &classical, r).expect("shared grid");
                points.push(SweepPoint {
                    lambda,
                    sup_error: e,
                    ratio: e / (lambda * (1.0 / lambda).ln()),
                });
            }
            Err(e) => return (points, Some(format!("lambda = {lambda}: {e}"))),
        }
    }
    (points, None)
}

/// Solve the classical equation once and the exploratory equation per
/// lambda, measuring the gap on the ball of radius `r`. With
/// `doubling_control` the whole sweep is repeated on a box of twice the
/// halfwidth (same spacing) to bound the truncation error.
pub fn lambda_sweep(
    landscape: &Landscape,
    grid: Grid,
    template: &ProblemSpec,
    lambdas: &[f64],
    r: f64,
    solver: &SolverConfig,
    doubling_control: bool,
) -> Result<SweepResult> {
    if lambdas.is_empty() {
        return Err(Error::Config("lambda list must be nonempty".into()));
    }
    for pair in lambdas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Config("lambda list must be strictly decreasing".into()));
        }
    }
    if lambdas.iter().any(|&l| !(0.0 < l && l < 1.0)) {
        return Err(Error::Config("lambda values must lie in (0, 1)".into()));
    }
    if !(r > 0.0 && r <= grid.halfwidth() / 2.0) {
        return Err(Error::Config("measurement radius must satisfy 0 < r <= L/2".into()));
    }

    let fp = fingerprint(&[
        &landscape.name(),
        &format!("{grid:?}"),
        &format!("{template:?}"),
        &format!("{lambdas:?}"),
        &r.to_string(),
    ]);
    let (points, failure) = sweep_errors(landscape, grid, template, lambdas, r, solver);
    let slope = fit_slope(&points);

    let mut doubling_max_rel_change = None;
    if doubling_control && failure.is_none() {
        let wide = Grid::new(grid.dim(), 2.0 * grid.halfwidth(), 2 * grid.points_per_axis() - 1)?;
        let (wide_points, wide_failure) = sweep_errors(landscape, wide, template, lambdas, r, solver);
        if wide_failure.is_none() && wide_points.len() == points.len() {
            doubling_max_rel_change = Some(
                points
                    .iter()
                    .zip(&wide_points)
                    .map(|(a, b)| (a.sup_error - b.sup_error).abs() / a.sup_error)
                    .fold(0.0f64, f64::max),
            );
        }
    }

    Ok(SweepResult { points, slope, doubling_max_rel_change, failure, fingerprint: fp })
}

/// Monte Carlo estimate of the discounted exploratory cost from `x0` under
/// the given feedback policy: the objective integrand is
/// `f(x) - lambda * (z m(z) + ln Z(z))`, the landscape cost plus the
/// closed-form negative entropy of the control density multiplied by
/// lambda. Returns the mean and the 99% normal
/// confidence half-width over paths.
///
/// Time discretization uses exact exponential weights per step plus a
/// frozen-tail correction beyond the horizon, so constant integrands are
/// integrated exactly.
pub fn mc_value_oracle(
    landscape: &Landscape,
    policy: &FeedbackPolicy,
    spec: &ProblemSpec,
    x0: &[f64],
    config: &SdeConfig,
) -> Result<(f64, f64)> {
    if spec.rho * config.horizon < 14.0 {
        return Err(Error::Config(
            "oracle horizon too short: require rho * T >= 14 for a negligible discount tail".into(),
        ));
    }
    if x0.len() != landscape.dim() {
        return Err(Error::GridMismatch("initial condition dimension mismatch".into()));
    }
    let mut cfg = config.clone();
    cfg.x0 = x0.to_vec();
    cfg.validate()?;

    let d = landscape.dim();
    let steps = (cfg.horizon / cfg.dt).ceil() as usize;
    let sqrt_dt = cfg.dt.sqrt();
    let rho = spec.rho;
    let lambda = spec.lambda;
    let a = spec.a;

    let costs: Vec<f64> = exec::map_collect(cfg.paths, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(p as u64);
        let mut x = [0.0f64; crate::MAX_DIM];
        x[..d].copy_from_slice(&cfg.x0);
        let mut acc = 0.0;
        let mut integrand = 0.0;
        for k in 0..steps {
            let z = policy.z_at(&x[..d]);
            integrand = landscape.f(&x[..d])
                - lambda * (z * truncated_exp_mean(z, a) + log_partition_interval(z, a));
            let t = k as f64 * cfg.dt;
            let weight = ((-rho * t).exp() - (-rho * (t + cfg.dt)).exp()) / rho;
            acc += weight * integrand;
            let g = policy.g_lambda_at(&x[..d]);
            let grad = landscape.grad(&x[..d]);
            for i in 0..d {
                let xi: f64 = rng.sample(StandardNormal);
                x[i] -= grad[i] * cfg.dt;
                x[i] += g * sqrt_dt * xi;
                // reflect into the box
                while x[i].abs() > cfg.box_halfwidth {
                    x[i] = x[i].signum() * 2.0 * cfg.box_halfwidth - x[i];
                }
            }
        }
        // frozen-integrand tail beyond the horizon
        acc + (-rho * cfg.horizon).exp() / rho * integrand
    });

    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let half_width = 2.5758 * (var / n).sqrt();
    Ok((mean, half_width))
}

/// TV distance between the estimated exploratory stationary laws at two
/// lambda values. The second run uses `seed + 1`, so calling with an equal
/// pair measures the pure sampling noise floor.
#[allow(clippy::too_many_arguments)]
pub fn stationary_stability(
    landscape: &Landscape,
    grid: Grid,
    template: &ProblemSpec,
    lambda_pair: (f64, f64),
    solver: &SolverConfig,
    sde: &SdeConfig,
    bins: usize,
) -> Result<f64> {
    let lo = -sde.box_halfwidth;
    let hi = sde.box_halfwidth;
    let mut estimates = Vec::with_capacity(2);
    for (i, lambda) in [lambda_pair.0, lambda_pair.1].into_iter().enumerate() {
        let spec = ProblemSpec { lambda, ..*template };
        let (v, _) = solve_exploratory_hjb(landscape, grid, &spec, solver)?;
        let policy = build_policy(&v, &spec)?;
        let cfg = SdeConfig { seed: sde.seed + i as u64, ..sde.clone() };
        let ensemble = simulate_exploratory(landscape, &policy, &cfg)?;
        estimates.push(estimate_stationary(&ensemble, lo, hi, bins)?);
    }
    tv_distance(&estimates[0], &estimates[1])
}
