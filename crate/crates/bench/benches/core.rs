use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use maxdet::{canonical_key, determinant, switch_neighbors};
use maxdet_bench::{order26, paley};

fn bench_determinant(c: &mut Criterion) {
    let mut g = c.benchmark_group("determinant");
    for q in [11, 19, 43] {
        let h = paley(q);
        g.bench_with_input(BenchmarkId::from_parameter(q + 1), &h, |b, h| {
            b.iter(|| determinant(black_box(h)).unwrap())
        });
    }
    g.finish();
}

fn bench_canonical_key(c: &mut Criterion) {
    let mut g = c.benchmark_group("canonical_key");
    g.sample_size(20);
    let h20 = paley(19);
    g.bench_function("paley20", |b| b.iter(|| canonical_key(black_box(&h20))));
    let r26 = order26();
    g.bench_function("design26", |b| b.iter(|| canonical_key(black_box(&r26))));
    g.finish();
}

fn bench_switch_neighbors(c: &mut Criterion) {
    let r26 = order26();
    c.bench_function("switch_neighbors/design26", |b| {
        b.iter(|| switch_neighbors(black_box(&r26)))
    });
}

criterion_group!(benches, bench_determinant, bench_canonical_key, bench_switch_neighbors);
criterion_main!(benches);
