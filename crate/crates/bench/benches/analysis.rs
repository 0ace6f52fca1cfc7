use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use umwelt_bench::{random_matrix, sample_text};
use umwelt_core::ensemble::{enumerate_subsets, shapley};
use umwelt_core::stats::fisher_exact;
use umwelt_core::{check_eprime, check_nohave, extract_answer, AnswerFormat, CoverageMatrix};

fn bench_shapley(c: &mut Criterion) {
    let mut group = c.benchmark_group("shapley");
    group.bench_function("reference_16x51", |b| {
        let m = CoverageMatrix::reference();
        b.iter(|| shapley(black_box(&m)).unwrap())
    });
    for n in [8, 12, 20] {
        let m = random_matrix(n, 64, 0.4, 7);
        group.bench_with_input(BenchmarkId::new("random", n), &m, |b, m| b.iter(|| shapley(black_box(m)).unwrap()));
    }
    group.finish();
}

fn bench_subsets(c: &mut Criterion) {
    let m = CoverageMatrix::reference();
    let mut group = c.benchmark_group("enumerate_subsets");
    for k in [3, 5] {
        group.bench_with_input(BenchmarkId::new("reference", k), &k, |b, &k| {
            b.iter(|| enumerate_subsets(black_box(&m), k).unwrap())
        });
    }
    group.finish();
}

fn bench_fisher(c: &mut Criterion) {
    c.bench_function("fisher/small", |b| {
        b.iter(|| fisher_exact(black_box(3), black_box(9), black_box(11), black_box(2)))
    });
    c.bench_function("fisher/pooled_cell", |b| {
        b.iter(|| fisher_exact(black_box(153), black_box(7), black_box(134), black_box(41)))
    });
}

fn bench_checkers(c: &mut Criterion) {
    let text = sample_text(20);
    let mut group = c.benchmark_group("checkers");
    group.bench_function("eprime", |b| b.iter(|| check_eprime(black_box(&text))));
    group.bench_function("nohave", |b| b.iter(|| check_nohave(black_box(&text))));
    group.bench_function("extract_answer", |b| b.iter(|| extract_answer(black_box(&text), AnswerFormat::Letter4)));
    group.finish();
}

criterion_group!(benches, bench_shapley, bench_subsets, bench_fisher, bench_checkers);
criterion_main!(benches);
