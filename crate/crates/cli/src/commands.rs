//! The four pipelines behind the subcommands. Each writes its outputs, the
//! resolved configuration, and a content-hash manifest; `--check` turns the
//! quantitative claims of each pipeline into a pass/fail verdict.

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::CliError;
use exhjb::analysis::lambda_sweep;
use exhjb::policy::{bangbang_diffusion, boundary_copied_laplacian, build_policy};
use exhjb::sde::{
    estimate_stationary, fit_gibbs, simulate_bangbang, simulate_exploratory, simulate_langevin,
    PathEnsemble, StationaryEstimate,
};
use exhjb::solver::{solve_classical_hjb, solve_exploratory_hjb, SolveReport};
use exhjb::{Error, ScalarField};
use std::path::Path;

fn check_verdict(failures: Vec<String>) -> Result<(), CliError> {
    if failures.is_empty() {
        println!("check: pass");
        Ok(())
    } else {
        for f in &failures {
            println!("check: FAIL {f}");
        }
        Err(CliError::Check(failures.join("; ")))
    }
}

pub fn cmd_solve(cfg: &RunConfig, out_path: &Path, check: bool) -> Result<(), CliError> {
    let landscape = cfg.landscape()?;
    let grid = cfg.grid()?;
    let spec = cfg.spec()?;
    let mut out = OutDir::create(out_path)?;
    out.write_json("resolved-config.json", cfg)?;

    let solve = match cfg.experiment.kind.as_str() {
        "exploratory" => solve_exploratory_hjb(&landscape, grid, &spec, &cfg.solver),
        "classical" => solve_classical_hjb(&landscape, grid, &spec, &cfg.solver),
        other => {
            return Err(CliError::Config(format!(
                "experiment.kind must be `exploratory` or `classical`, got `{other}`"
            )))
        }
    };

    let (v, report) = match solve {
        Ok(pair) => pair,
        Err(Error::Divergence { iterations, residual, history }) => {
            let report = SolveReport { iterations, residual, history, seconds: 0.0 };
            out.write_json("report.json", &report)?;
            out.finish()?;
            return Err(CliError::Numerical(format!(
                "solver did not converge (residual {residual:.3e})"
            )));
        }
        Err(e) => return Err(e.into()),
    };

    out.write_csv_with("value.csv", |w| v.write_csv(w))?;
    let mut failures = Vec::new();
    match cfg.experiment.kind.as_str() {
        "exploratory" => {
            let policy = build_policy(&v, &spec)?;
            let g = policy.g_field();
            out.write_csv_with("g_lambda.csv", |w| g.write_csv(w))?;
            if check {
                let lo = (2.0 * spec.a).sqrt() - 1e-12;
                let hi = std::f64::consts::SQRT_2 + 1e-12;
                if g.values().iter().any(|&x| x < lo || x > hi) {
                    failures.push("diffusion coefficient leaves its closed-form bounds".into());
                }
            }
        }
        _ => {
            let g_vals: Vec<f64> =
                (0..grid.num_nodes()).map(|i| bangbang_diffusion(&v, spec.a, i)).collect();
            let distinct: std::collections::BTreeSet<u64> =
                g_vals.iter().map(|x| x.to_bits()).collect();
            let g = ScalarField::from_values(grid, g_vals)?;
            out.write_csv_with("g_lambda.csv", |w| g.write_csv(w))?;
            let lap = boundary_copied_laplacian(&v);
            let regions = ScalarField::from_values(
                grid,
                lap.iter().map(|&l| if l >= 0.0 { 1.0 } else { -1.0 }).collect(),
            )?;
            out.write_csv_with("bangbang_regions.csv", |w| regions.write_csv(w))?;
            if check && distinct.len() > 2 {
                failures.push(format!(
                    "bang-bang coefficient took {} distinct values",
                    distinct.len()
                ));
            }
        }
    }
    out.write_json("report.json", &report)?;
    out.write_json("timing.json", &serde_json::json!({ "seconds": report.seconds }))?;
    out.finish()?;

    if check {
        if report.residual > cfg.solver.tol {
            failures.push(format!("residual {} above tolerance", report.residual));
        }
        check_verdict(failures)?;
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, out_path: &Path, check: bool) -> Result<(), CliError> {
    let landscape = cfg.landscape()?;
    let grid = cfg.grid()?;
    let spec = cfg.spec()?;
    let mut out = OutDir::create(out_path)?;
    out.write_json("resolved-config.json", cfg)?;

    let result = lambda_sweep(
        &landscape,
        grid,
        &spec,
        &cfg.experiment.lambdas,
        cfg.experiment.radius,
        &cfg.solver,
        cfg.experiment.doubling_control,
    )?;

    let mut csv = String::from("lambda,sup_error,ratio\n");
    for p in &result.points {
        csv.push_str(&format!("{},{},{}\n", p.lambda, p.sup_error, p.ratio));
    }
    out.write_bytes("sweep.csv", csv.as_bytes())?;

    let ratio_spread = if result.points.is_empty() {
        None
    } else {
        let max = result.points.iter().map(|p| p.ratio).fold(f64::MIN, f64::max);
        let min = result.points.iter().map(|p| p.ratio).fold(f64::MAX, f64::min);
        Some(max / min)
    };
    out.write_json(
        "sweep_summary.json",
        &serde_json::json!({
            "slope": result.slope,
            "ratio_spread": ratio_spread,
            "doubling_max_rel_change": result.doubling_max_rel_change,
            "failure": result.failure,
            "fingerprint": format!("{:016x}", result.fingerprint),
        }),
    )?;
    out.finish()?;

    if let Some(f) = result.failure {
        return Err(CliError::Numerical(format!("sweep aborted: {f}")));
    }
    if check {
        let mut failures = Vec::new();
        if result.points.windows(2).any(|w| w[1].sup_error >= w[0].sup_error) {
            failures.push("sup errors are not strictly decreasing in lambda".into());
        }
        if let Some(s) = ratio_spread {
            if result.points.len() > 1 && s > 3.0 {
                failures.push(format!("ratio spread {s:.3} exceeds 3"));
            }
        }
        if let Some(d) = result.doubling_max_rel_change {
            if d >= 0.10 {
                failures.push(format!("domain doubling moved errors by {:.1}%", 100.0 * d));
            }
        }
        check_verdict(failures)?;
    }
    Ok(())
}

fn fit_summary(
    estimate: &StationaryEstimate,
    landscape: &exhjb::Landscape,
    beta_grid: &[f64],
) -> Result<(f64, f64), CliError> {
    Ok(fit_gibbs(estimate, landscape, beta_grid)?)
}

pub fn cmd_stationary(cfg: &RunConfig, out_path: &Path, check: bool) -> Result<(), CliError> {
    let landscape = cfg.landscape()?;
    let grid = cfg.grid()?;
    let spec = cfg.spec()?;
    let mut out = OutDir::create(out_path)?;
    out.write_json("resolved-config.json", cfg)?;

    let (v, _) = solve_exploratory_hjb(&landscape, grid, &spec, &cfg.solver)?;
    let policy = build_policy(&v, &spec)?;
    let ensemble = simulate_exploratory(&landscape, &policy, &cfg.sde)?;
    let lo = -cfg.sde.box_halfwidth;
    let hi = cfg.sde.box_halfwidth;
    let bins = cfg.experiment.bins;
    let estimate = estimate_stationary(&ensemble, lo, hi, bins)?;
    out.write_csv_with("histogram.csv", |w| estimate.write_csv(w))?;

    let (beta_star, tv_star) = fit_summary(&estimate, &landscape, &cfg.experiment.beta_grid)?;

    // control: a Langevin run at a known temperature measures the sampling
    // noise floor of the fitting pipeline
    let control = simulate_langevin(&landscape, cfg.experiment.beta, &cfg.sde)?;
    let control_est = estimate_stationary(&control, lo, hi, bins)?;
    let (control_beta_star, noise_floor) =
        fit_summary(&control_est, &landscape, &cfg.experiment.beta_grid)?;

    out.write_json(
        "gibbs_fit.json",
        &serde_json::json!({
            "beta_star": beta_star,
            "tv_star": tv_star,
            "noise_floor": noise_floor,
            "control_beta_input": cfg.experiment.beta,
            "control_beta_star": control_beta_star,
            "effective_samples": estimate.effective_samples,
        }),
    )?;

    let minimizer = landscape.minimizer()[0];
    let delta = cfg.experiment.delta;
    let mass_outside: f64 = estimate
        .probabilities
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let mid = 0.5 * (estimate.edges[*i] + estimate.edges[*i + 1]);
            (mid - minimizer).abs() > delta
        })
        .map(|(_, p)| p)
        .sum();
    out.write_json(
        "dirac_check.json",
        &serde_json::json!({
            "delta": delta,
            "mass_outside_delta_ball": mass_outside,
            "minimizer": minimizer,
        }),
    )?;
    out.finish()?;

    if check {
        let mut failures = Vec::new();
        if tv_star < 3.0 * noise_floor {
            failures.push(format!(
                "Gibbs fit too good: tv_star {tv_star:.4} < 3 x noise floor {noise_floor:.4}"
            ));
        }
        if mass_outside < 0.05 {
            failures.push(format!("mass outside the {delta} ball is only {mass_outside:.4}"));
        }
        let rel = (control_beta_star - cfg.experiment.beta).abs() / cfg.experiment.beta;
        if rel > 0.10 {
            failures.push(format!(
                "control fit recovered beta {control_beta_star:.4}, {:.0}% off",
                100.0 * rel
            ));
        }
        check_verdict(failures)?;
    }
    Ok(())
}

pub fn cmd_anneal(cfg: &RunConfig, out_path: &Path, check: bool) -> Result<(), CliError> {
    let landscape = cfg.landscape()?;
    let grid = cfg.grid()?;
    let spec = cfg.spec()?;
    let mut out = OutDir::create(out_path)?;
    out.write_json("resolved-config.json", cfg)?;

    let (v_ex, _) = solve_exploratory_hjb(&landscape, grid, &spec, &cfg.solver)?;
    let (v_cl, _) = solve_classical_hjb(&landscape, grid, &spec, &cfg.solver)?;
    let policy = build_policy(&v_ex, &spec)?;

    // identical seeds and budgets across the three methods
    let exploratory = simulate_exploratory(&landscape, &policy, &cfg.sde)?;
    let bangbang = simulate_bangbang(&landscape, &v_cl, spec.a, &cfg.sde)?;
    let langevin = simulate_langevin(&landscape, cfg.experiment.beta, &cfg.sde)?;

    out.write_csv_with("finals.csv", |w| exploratory.write_finals_csv(w))?;

    let mut trace = String::from("time,exploratory,bangbang,langevin\n");
    for i in 0..exploratory.best_f_trace.len() {
        trace.push_str(&format!(
            "{},{},{},{}\n",
            exploratory.best_f_trace[i].0,
            exploratory.best_f_trace[i].1,
            bangbang.best_f_trace[i].1,
            langevin.best_f_trace[i].1,
        ));
    }
    out.write_bytes("best_f_trace.csv", trace.as_bytes())?;

    let stats = |e: &PathEnsemble| {
        let n = e.best_f_final.len() as f64;
        let mean = e.best_f_final.iter().sum::<f64>() / n;
        let min = e.best_f_final.iter().copied().fold(f64::INFINITY, f64::min);
        let max = e.best_f_final.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let reached =
            e.best_f_final.iter().filter(|&&b| b <= cfg.experiment.target_f).count() as f64 / n;
        serde_json::json!({
            "best_f_mean": mean,
            "best_f_min": min,
            "best_f_max": max,
            "fraction_reaching_target": reached,
        })
    };
    out.write_json(
        "summary.json",
        &serde_json::json!({
            "target_f": cfg.experiment.target_f,
            "exploratory": stats(&exploratory),
            "bangbang": stats(&bangbang),
            "langevin": stats(&langevin),
        }),
    )?;
    out.finish()?;

    if check {
        let mut failures = Vec::new();
        for (name, e) in
            [("exploratory", &exploratory), ("bangbang", &bangbang), ("langevin", &langevin)]
        {
            let best = e.best_f_final.iter().copied().fold(f64::INFINITY, f64::min);
            if best > cfg.experiment.target_f {
                failures.push(format!("{name} never reached f <= {}", cfg.experiment.target_f));
            }
        }
        check_verdict(failures)?;
    }
    Ok(())
}
