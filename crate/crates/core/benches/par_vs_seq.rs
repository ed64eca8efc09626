//! Compares the rayon-dispatched execution helpers against the always
//! sequential fallbacks on the two hot loops: grid residual evaluation and
//! path ensembles.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use exhjb::grid::{fd_gradient, fd_laplacian, Grid, ScalarField};
use exhjb::landscape::Landscape;
use exhjb::operators::ProblemSpec;
use exhjb::policy::FeedbackPolicy;
use exhjb::sde::{simulate_exploratory, SdeConfig};
use exhjb::{exec, MAX_DIM};

fn residual_sweep(c: &mut Criterion) {
    let grid = Grid::new(2, 3.0, 151).unwrap();
    let dw = Landscape::builtin("double_well_2d").unwrap();
    let spec = ProblemSpec::new(0.1, 1.0, 0.5).unwrap();
    let v = ScalarField::from_fn(grid, |x| dw.f(x) / spec.rho);
    let node_residual = |i: usize| {
        let x = grid.coord(i);
        let g = dw.grad(&x[..2]);
        let vel = [-g[0], -g[1]];
        let gv = fd_gradient(&v, i, &vel);
        let lap = fd_laplacian(&v, i);
        exhjb::operators::exploratory_operator_tc(
            &spec,
            v.values()[i],
            dw.f(&x[..2]),
            &g[..2],
            &gv[..2],
            lap,
        )
    };

    let mut group = c.benchmark_group("residual_sweep_151x151");
    group.bench_function(BenchmarkId::new("dispatch", "default"), |b| {
        b.iter(|| exec::map_collect(grid.num_nodes(), node_residual))
    });
    group.bench_function(BenchmarkId::new("sequential", "fallback"), |b| {
        b.iter(|| exec::seq::map_collect(grid.num_nodes(), node_residual))
    });
    group.finish();
}

fn path_ensemble(c: &mut Criterion) {
    let grid = Grid::new(1, 3.0, 61).unwrap();
    let dw = Landscape::builtin("double_well_1d").unwrap();
    let spec = ProblemSpec::new(0.1, 1.0, 0.5).unwrap();
    let policy = FeedbackPolicy::uniform(grid, spec);
    let cfg = SdeConfig {
        dt: 5e-3,
        horizon: 5.0,
        burn_in: 2.5,
        paths: 64,
        seed: 1,
        x0: vec![0.0],
        thin: 5,
        box_halfwidth: 3.0,
    };

    let mut group = c.benchmark_group("exploratory_ensemble_64x1000");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new("dispatch", "default"), |b| {
        b.iter(|| simulate_exploratory(&dw, &policy, &cfg).unwrap())
    });
    // sequential reference: one path at a time through the same API
    group.bench_function(BenchmarkId::new("sequential", "path_loop"), |b| {
        b.iter(|| {
            let mut finals: Vec<[f64; MAX_DIM]> = Vec::with_capacity(cfg.paths);
            for p in 0..cfg.paths {
                let single = SdeConfig { paths: 1, seed: cfg.seed + p as u64, ..cfg.clone() };
                finals.push(simulate_exploratory(&dw, &policy, &single).unwrap().finals[0]);
            }
            finals
        })
    });
    group.finish();
}

criterion_group!(benches, residual_sweep, path_ensemble);
criterion_main!(benches);
