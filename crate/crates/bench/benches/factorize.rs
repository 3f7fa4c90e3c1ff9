use blr_bench::grid_problem;
use blr_core::harness::Epsilon;
use blr_core::{factorize, Schedule};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn factorisation(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorize");
    group.sample_size(10);
    for (n_flux, n_tht) in [(16, 20), (32, 40)] {
        let (a, an, cfg) = grid_problem(n_flux, n_tht);
        for eps in [Epsilon::NONE, Epsilon::value(1e-8), Epsilon::value(1e-4)] {
            let opts = cfg.blr.factor_options(eps);
            let id = BenchmarkId::new(format!("{n_flux}x{n_tht}"), eps);
            group.bench_with_input(id, &opts, |bench, opts| {
                bench.iter(|| factorize(black_box(&a), &an, opts).unwrap())
            });
        }
    }
    group.finish();
}

fn schedules(c: &mut Criterion) {
    let mut group = c.benchmark_group("schedule");
    group.sample_size(10);
    let (a, an, cfg) = grid_problem(22, 28);
    for schedule in [Schedule::FanIn, Schedule::FanOut] {
        let mut opts = cfg.blr.factor_options(Epsilon::value(1e-8));
        opts.schedule = schedule;
        group.bench_function(format!("{schedule:?}"), |bench| {
            bench.iter(|| factorize(black_box(&a), &an, &opts).unwrap())
        });
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    let (a, an, cfg) = grid_problem(32, 40);
    let b = vec![1.0; a.n()];
    for eps in [Epsilon::NONE, Epsilon::value(1e-4)] {
        let f = factorize(&a, &an, &cfg.blr.factor_options(eps)).unwrap();
        group.bench_function(BenchmarkId::from_parameter(eps), |bench| {
            bench.iter(|| f.solve(black_box(&b)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, factorisation, schedules, solve);
criterion_main!(benches);
