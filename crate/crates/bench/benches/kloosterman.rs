use std::hint::black_box;

use apdist_bench::{context, MODULI};
use apdist_core::expsum::{gauss_sum, gauss_sums, kl_table_fft, kl_table_recursive};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn kl4_tables(c: &mut Criterion) {
    let mut group = c.benchmark_group("kl4 table");
    for q in MODULI {
        let ctx = context(q);
        group.bench_with_input(BenchmarkId::new("fft", q), &ctx, |b, ctx| {
            b.iter(|| kl_table_fft(4, black_box(ctx)).unwrap())
        });
        if q <= 1009 {
            group.bench_with_input(BenchmarkId::new("recursive", q), &ctx, |b, ctx| {
                b.iter(|| kl_table_recursive(4, black_box(ctx)).unwrap())
            });
        }
    }
    group.finish();
}

fn gauss(c: &mut Criterion) {
    let mut group = c.benchmark_group("gauss sums");
    for q in MODULI {
        let ctx = context(q);
        group.bench_with_input(BenchmarkId::new("all via fft", q), &ctx, |b, ctx| {
            b.iter(|| gauss_sums(black_box(ctx)))
        });
        if q <= 1009 {
            group.bench_with_input(BenchmarkId::new("all direct", q), &ctx, |b, ctx| {
                b.iter(|| ctx.characters().map(|chi| gauss_sum(&chi)).collect::<Vec<_>>())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, kl4_tables, gauss);
criterion_main!(benches);
