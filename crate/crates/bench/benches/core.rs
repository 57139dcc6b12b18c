use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hawkes_core::nonparam::{estimate_autocovariance, invert_kernel};
use hawkes_core::{log_likelihood, simulate, EventSeries, HawkesParams, KernelSpec, SimulationConfig};

fn params(n: f64) -> HawkesParams {
    HawkesParams::new(0.5, KernelSpec::approx_power_law(n, 0.2, 0.01, 5.0, 15).unwrap()).unwrap()
}

fn series(horizon: f64) -> EventSeries {
    simulate(&SimulationConfig::new(params(0.8), horizon, 1)).unwrap()
}

fn likelihood(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_likelihood");
    for horizon in [1e3, 1e4, 1e5] {
        let s = series(horizon);
        let p = params(0.7);
        group.bench_with_input(BenchmarkId::from_parameter(s.len()), &s, |b, s| {
            b.iter(|| log_likelihood(black_box(s), &p, None).unwrap())
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for horizon in [1e3, 1e4] {
        let cfg = SimulationConfig::new(params(0.8), horizon, 7);
        group.bench_with_input(BenchmarkId::from_parameter(horizon), &cfg, |b, cfg| {
            b.iter(|| simulate(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn inversion(c: &mut Criterion) {
    let s = series(2e4);
    let cov = estimate_autocovariance(&s, 0.01, 100.0, None).unwrap();
    let mut group = c.benchmark_group("nonparam");
    group.sample_size(10);
    group.bench_function("autocovariance", |b| {
        b.iter(|| estimate_autocovariance(black_box(&s), 0.01, 100.0, None).unwrap())
    });
    group.bench_function("invert_kernel", |b| b.iter(|| invert_kernel(black_box(&cov)).unwrap()));
    group.finish();
}

criterion_group!(benches, likelihood, simulation, inversion);
criterion_main!(benches);
