use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use geomarch::fit::default_seed;
use geomarch::{ball_fit_objective, fast_march, subgradient_march, vjp, FitConfig, ScalarField};
use geomarch_bench::{disk_target, smooth_instance};

fn bench_fast_march(c: &mut Criterion) {
    let mut group = c.benchmark_group("fast_march");
    for n in [64, 128, 256] {
        let (phi, seeds) = smooth_instance(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| fast_march(black_box(&phi), black_box(&seeds)).unwrap())
        });
    }
    group.finish();
}

fn bench_vjp(c: &mut Criterion) {
    let mut group = c.benchmark_group("vjp");
    for n in [64, 128, 256] {
        let (phi, seeds) = smooth_instance(n);
        let field = fast_march(&phi, &seeds).unwrap();
        let u_bar = ScalarField::constant(*phi.grid(), 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| vjp(black_box(&field), black_box(&phi), black_box(&u_bar)).unwrap())
        });
    }
    group.finish();
}

fn bench_subgradient_rows(c: &mut Criterion) {
    let (phi, seeds) = smooth_instance(64);
    let corner = [0, phi.grid().len() - 1];
    c.bench_function("subgradient_march/64/two_targets", |b| {
        b.iter(|| subgradient_march(black_box(&phi), black_box(&seeds), black_box(&corner)).unwrap())
    });
}

fn bench_fit_step(c: &mut Criterion) {
    let target = disk_target(64);
    let seeds = default_seed(&target).unwrap();
    let raw = ScalarField::constant(*target.grid(), 1.5);
    let cfg = FitConfig::default();
    c.bench_function("ball_fit_objective/64", |b| {
        b.iter(|| ball_fit_objective(black_box(&raw), black_box(&target), black_box(&seeds), &cfg).unwrap())
    });
}

criterion_group!(benches, bench_fast_march, bench_vjp, bench_subgradient_rows, bench_fit_step);
criterion_main!(benches);
