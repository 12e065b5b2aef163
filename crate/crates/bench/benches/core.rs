use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pme_bench::{spec, sub_barrier, super_barrier};
use pme_core::conditions::{find_blowup_params, find_global_params};
use pme_core::exponents::classify_regime;
use pme_core::residual::{residual_field, ResidualGrid};
use pme_core::solver::{RadialGrid, Solver, SolverConfig};

fn exponents(c: &mut Criterion) {
    let s = spec(2.5, 0.3);
    c.bench_function("classify_regime", |b| b.iter(|| classify_regime(black_box(&s))));
}

fn params(c: &mut Criterion) {
    let s = spec(3.0, 0.2);
    c.bench_function("find_global_params", |b| {
        b.iter(|| find_global_params(black_box(&s), 1.0).unwrap())
    });
    c.bench_function("find_blowup_params", |b| {
        b.iter(|| find_blowup_params(black_box(&s)).unwrap())
    });
}

fn residuals(c: &mut Criterion) {
    let (s, g) = super_barrier();
    let grid = ResidualGrid::for_barrier(&g, 200, 200).unwrap();
    c.bench_function("residual_super_200x200", |b| {
        b.iter(|| residual_field(&g, &s.density, black_box(&grid)).unwrap())
    });
    let (s, w) = sub_barrier();
    let grid = ResidualGrid::for_barrier(&w, 200, 200).unwrap();
    c.bench_function("residual_sub_200x200", |b| {
        b.iter(|| residual_field(&w, &s.density, black_box(&grid)).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let s = spec(3.0, 0.0);
    let solver = Solver::new(&s, RadialGrid::new(3, 8.0, 800).unwrap(), SolverConfig::default());
    let u0 = solver.grid.sample(|r| (1.0 - r * r / 4.0).max(0.0));
    c.bench_function("solver_step_800", |b| {
        b.iter_batched(
            || u0.clone(),
            |mut u| {
                let dt = solver.stable_dt(&u);
                solver.step(&mut u, dt).unwrap();
                u
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, exponents, params, residuals, solver);
criterion_main!(benches);
