use std::hint::black_box;

use apdist_core::coeffs::{hecke_normalized, ramanujan_tau, sym2_divisor, sym2_euler};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn tau(c: &mut Criterion) {
    let mut group = c.benchmark_group("ramanujan tau");
    group.sample_size(10);
    for n in [10_000usize, 100_000, 1_000_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| ramanujan_tau(black_box(n)).unwrap())
        });
    }
    group.finish();
}

fn sym2(c: &mut Criterion) {
    let n = 100_000;
    let lambda_f = hecke_normalized(&ramanujan_tau(n).unwrap()).unwrap();
    let mut group = c.benchmark_group("sym2");
    group.sample_size(10);
    group.bench_function("euler", |b| b.iter(|| sym2_euler(black_box(&lambda_f), n).unwrap()));
    group.bench_function("divisor", |b| b.iter(|| sym2_divisor(black_box(&lambda_f), n).unwrap()));
    group.finish();
}

criterion_group!(benches, tau, sym2);
criterion_main!(benches);
