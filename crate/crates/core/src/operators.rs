//! Pointwise HJB operators for the temperature-control problem, the
//! closed-form log-partition machinery of the truncated exponential family,
//! general-control softmax quadrature, and the operator gap bound.
//!
//! Throughout, `z = tr(hess v) / lambda` is the rate of the truncated
//! exponential density on the control interval `[a, 1]`, and the drift term
//! of every residual is the generator term `-grad f . grad v` of the descent
//! dynamics.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre_on;

/// Optimization direction for the general-control operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Parameters of the exploratory temperature-control problem.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProblemSpec {
    /// Exploration weight.
    pub lambda: f64,
    /// Discount factor.
    pub rho: f64,
    /// Lower control bound; the control space is `[a, 1]`.
    pub a: f64,
    /// Fixed to `Minimize` for the temperature-control operators.
    pub direction: Direction,
}

impl ProblemSpec {
    pub fn new(lambda: f64, rho: f64, a: f64) -> Result<ProblemSpec> {
        if !(lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        if !(rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("control lower bound a must lie in (0,1), got {a}")));
        }
        Ok(ProblemSpec { lambda, rho, a, direction: Direction::Minimize })
    }

    /// `ln(1/(1-a))`, the constant-solution entropy-cost scale.
    pub fn entropy_scale(&self) -> f64 {
        -(1.0 - self.a).ln()
    }
}

/// Series/direct branch threshold for the log-partition machinery.
const SMALL_Z: f64 = 1e-4;

/// `ln \int_a^1 exp(-z u) du`, evaluated stably on all finite inputs.
///
/// For small |z| a cumulant expansion around the uniform density is used;
/// otherwise the integral is factored around its dominant endpoint so the
/// expression never overflows.
pub fn log_partition_interval(z: f64, a: f64) -> f64 {
    debug_assert!(a > 0.0 && a < 1.0);
    let len = 1.0 - a;
    if z.abs() < SMALL_Z {
        // ln(1-a) - z*mean + z^2*variance/2 of the uniform density on [a,1]
        let mean = 0.5 * (1.0 + a);
        let var = len * len / 12.0;
        return len.ln() - z * mean + 0.5 * z * z * var;
    }
    let w = z.abs() * len;
    let shift = if z > 0.0 { -a * z } else { -z };
    // ln(1 - e^{-w}) through expm1, exact for w near zero
    shift + (-(-w).exp_m1()).ln() - z.abs().ln()
}

/// Mean of the exponential density with rate `z` restricted to `[a, 1]`.
///
/// Written as `a + phi(w)/z` with `w = z (1-a)` and `phi(w) = 1 - w/(e^w - 1)`,
/// which is cancellation-free for every rate; `phi` switches to its Bernoulli
/// series near zero.
pub fn truncated_exp_mean(z: f64, a: f64) -> f64 {
    debug_assert!(a > 0.0 && a < 1.0);
    let len = 1.0 - a;
    if z == 0.0 {
        return 0.5 * (1.0 + a);
    }
    let w = z * len;
    let phi = if w.abs() < 1e-2 {
        0.5 * w - w * w / 12.0 + w.powi(4) / 720.0
    } else {
        1.0 - w / w.exp_m1()
    };
    (a + phi / z).clamp(a, 1.0)
}

/// Differential entropy of the truncated exponential density with rate `z`:
/// `ln Z(z) + z * mean(z)`.
pub fn truncated_exp_entropy(z: f64, a: f64) -> f64 {
    log_partition_interval(z, a) + z * truncated_exp_mean(z, a)
}

/// Residual of the exploratory HJB equation at a point:
/// `-rho v + f - grad f . grad v - lambda ln \int_a^1 exp(-u lap v / lambda) du`.
/// Zero residual characterizes the solution.
pub fn exploratory_operator_tc(
    spec: &ProblemSpec,
    v_val: f64,
    f_val: f64,
    grad_f: &[f64],
    grad_v: &[f64],
    lap_v: f64,
) -> f64 {
    let advect: f64 = grad_f.iter().zip(grad_v).map(|(a, b)| a * b).sum();
    -spec.rho * v_val + f_val - advect
        - spec.lambda * log_partition_interval(lap_v / spec.lambda, spec.a)
}

/// Residual of the classical HJB equation at a point:
/// `-rho v + f - grad f . grad v + min(a lap v, lap v)`.
pub fn classical_operator_tc(
    spec: &ProblemSpec,
    v_val: f64,
    f_val: f64,
    grad_f: &[f64],
    grad_v: &[f64],
    lap_v: f64,
) -> f64 {
    let advect: f64 = grad_f.iter().zip(grad_v).map(|(a, b)| a * b).sum();
    -spec.rho * v_val + f_val - advect + (spec.a * lap_v).min(lap_v)
}

/// Pointwise difference `F_lambda - F` between the exploratory and classical
/// operators; depends only on the Laplacian, `lambda` and `a`.
pub fn operator_gap(spec: &ProblemSpec, lap_v: f64) -> f64 {
    spec.lambda * log_partition_interval(lap_v / spec.lambda, spec.a)
        + (spec.a * lap_v).min(lap_v)
}

/// Upper bound `C lambda + lambda ln(|lap v| / lambda)` (log term only when
/// `|lap v| > lambda`), with `C = 1 + ln(1/(1-a))`.
pub fn gap_bound(spec: &ProblemSpec, lap_v: f64) -> f64 {
    let c = 1.0 + spec.entropy_scale();
    let mut bound = c * spec.lambda;
    if lap_v.abs() > spec.lambda {
        bound += spec.lambda * (lap_v.abs() / spec.lambda).ln();
    }
    bound
}

type StateControlScalar = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type StateControlVector = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A general controlled-diffusion problem, used for residual evaluation of
/// the general exploratory operator. The temperature-control case has its
/// own closed forms and does not go through this type.
pub struct GeneralProblem {
    /// State dimension d.
    pub state_dim: usize,
    /// Control dimension l.
    pub control_dim: usize,
    /// Bounded control box, one (lo, hi) pair per control axis.
    pub control_box: Vec<(f64, f64)>,
    /// Reward h(x, u).
    pub reward: StateControlScalar,
    /// Drift b(x, u), length d.
    pub drift: StateControlVector,
    /// Diffusion factor sigma(x, u), d*d row-major.
    pub diffusion: StateControlVector,
    pub direction: Direction,
    /// Gauss-Legendre nodes per control axis.
    pub quad_nodes: usize,
    /// Optional ellipticity window for sigma sigma^T eigenvalues.
    pub ellipticity: Option<(f64, f64)>,
}

impl GeneralProblem {
    pub fn validate(&self) -> Result<()> {
        if self.quad_nodes < 2 {
            return Err(Error::Config("quadrature needs at least 2 nodes per control axis".into()));
        }
        if self.control_box.len() != self.control_dim || self.control_dim == 0 {
            return Err(Error::Config("control box must have one bounded interval per axis".into()));
        }
        for &(lo, hi) in &self.control_box {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config("control box must be bounded with lo < hi".into()));
            }
        }
        if let Some((lam1, lam2)) = self.ellipticity {
            // probe sigma sigma^T at the box center and corners, state x = 0
            let x = vec![0.0; self.state_dim];
            let mut probes: Vec<Vec<f64>> = vec![self
                .control_box
                .iter()
                .map(|&(lo, hi)| 0.5 * (lo + hi))
                .collect()];
            for corner in 0..(1usize << self.control_dim.min(10)) {
                probes.push(
                    self.control_box
                        .iter()
                        .enumerate()
                        .map(|(k, &(lo, hi))| if corner >> k & 1 == 1 { hi } else { lo })
                        .collect(),
                );
            }
            for u in &probes {
                let sig = (self.diffusion)(&x, u);
                let (emin, emax) = sym_eigen_range(&sig, self.state_dim)?;
                if emin < lam1 - 1e-12 || emax > lam2 + 1e-12 {
                    return Err(Error::Config(format!(
                        "sigma sigma^T eigenvalues [{emin:.4}, {emax:.4}] outside [{lam1}, {lam2}] at control {u:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

// eigenvalue range of sigma sigma^T for d in {1, 2}
fn sym_eigen_range(sigma: &[f64], d: usize) -> Result<(f64, f64)> {
    if sigma.len() != d * d {
        return Err(Error::Config("diffusion factor has wrong shape".into()));
    }
    match d {
        1 => {
            let v = sigma[0] * sigma[0];
            Ok((v, v))
        }
        2 => {
            let (s00, s01, s10, s11) = (sigma[0], sigma[1], sigma[2], sigma[3]);
            let a = s00 * s00 + s01 * s01;
            let b = s00 * s10 + s01 * s11;
            let c = s10 * s10 + s11 * s11;
            let mean = 0.5 * (a + c);
            let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            Ok((mean - disc, mean + disc))
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Softmax integral of the general exploratory operator:
/// `lambda ln \int_U exp((h + b.p + tr(sigma sigma^T X)/2) / lambda) du`
/// for the maximize direction, and the matching softmin for minimize.
/// Evaluated by tensor-product Gauss-Legendre quadrature in log space.
pub fn softmax_integral_general(
    problem: &GeneralProblem,
    lambda: f64,
    x: &[f64],
    grad_v: &[f64],
    hess_v: &[f64],
) -> Result<f64> {
    problem.validate()?;
    if !(lambda > 0.0) {
        return Err(Error::Config("lambda must be positive".into()));
    }
    let d = problem.state_dim;
    let l = problem.control_dim;
    let mut axes = Vec::with_capacity(l);
    for &(lo, hi) in &problem.control_box {
        axes.push(gauss_legendre_on(problem.quad_nodes, lo, hi));
    }

    let sign = match problem.direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };

    // enumerate the tensor product
    let total = problem.quad_nodes.pow(l as u32);
    let mut max_exp = f64::NEG_INFINITY;
    let mut exps = Vec::with_capacity(total);
    let mut wts = Vec::with_capacity(total);
    let mut u = vec![0.0; l];
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for k in 0..l {
            let i = rem % problem.quad_nodes;
            rem /= problem.quad_nodes;
            u[k] = axes[k].0[i];
            w *= axes[k].1[i];
        }
        let h = (problem.reward)(x, &u);
        let b = (problem.drift)(x, &u);
        let sig = (problem.diffusion)(x, &u);
        let mut quad_term = 0.0;
        for i in 0..d {
            for j in 0..d {
                // (sigma sigma^T)_{ij} = sum_k sigma_ik sigma_jk
                let mut aij = 0.0;
                for k in 0..d {
                    aij += sig[i * d + k] * sig[j * d + k];
                }
                quad_term += aij * hess_v[i * d + j];
            }
        }
        let drift_term: f64 = b.iter().zip(grad_v).map(|(bi, pi)| bi * pi).sum();
        let g = sign * (h + drift_term + 0.5 * quad_term);
        max_exp = max_exp.max(g);
        exps.push(g);
        wts.push(w);
    }

    let sum: f64 = exps
        .iter()
        .zip(&wts)
        .map(|(&g, &w)| w * ((g - max_exp) / lambda).exp())
        .sum();
    Ok(sign * (max_exp + lambda * sum.ln()))
}

/// Convenience constructor: a problem whose exponent is a pure function of a
/// scalar control on [0, 1] (zero drift and diffusion contributions).
pub fn scalar_exponent_problem(
    g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    quad_nodes: usize,
) -> GeneralProblem {
    GeneralProblem {
        state_dim: 1,
        control_dim: 1,
        control_box: vec![(0.0, 1.0)],
        reward: Box::new(move |_x, u| g(u[0])),
        drift: Box::new(|_x, _u| vec![0.0]),
        diffusion: Box::new(|_x, _u| vec![0.0]),
        direction: Direction::Maximize,
        quad_nodes,
        ellipticity: None,
    }
}
