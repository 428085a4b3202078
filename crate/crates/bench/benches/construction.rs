use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oadesign::{
    hilbert_kamke_rule, psl28, rational_weight_rule, solve_weights, trace_code_generators,
    verify_strength_exhaustive, verify_strength_linear, Budget, MeasureTag, OrthogonalArray,
};
use oadesign_bench::certified_oa;
use std::hint::black_box;

fn rules(c: &mut Criterion) {
    let mut g = c.benchmark_group("rules1d");
    for m in [3usize, 10, 20] {
        g.bench_with_input(BenchmarkId::new("hilbert_kamke", m), &m, |b, &m| {
            b.iter(|| hilbert_kamke_rule(black_box(m)).unwrap())
        });
    }
    let nodes: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
    g.bench_function("solve_weights_9", |b| {
        b.iter(|| solve_weights(black_box(&nodes), &MeasureTag::Gaussian).unwrap())
    });
    g.bench_function("rational_weight_t3_q16", |b| {
        b.iter(|| rational_weight_rule(3, black_box(16)).unwrap())
    });
    g.finish();
}

fn arrays(c: &mut Criterion) {
    let budget = Budget::default();
    let mut g = c.benchmark_group("oa");
    for (q, m, t) in [(7u64, 1u32, 5usize), (3, 2, 5), (2, 4, 4)] {
        let id = format!("{q}^{m} t={t}");
        g.bench_function(BenchmarkId::new("generators", &id), |b| {
            b.iter(|| trace_code_generators(black_box(q), m, t).unwrap())
        });
        let gen = trace_code_generators(q, m, t).unwrap();
        g.bench_function(BenchmarkId::new("certify_linear", &id), |b| {
            b.iter(|| verify_strength_linear(black_box(&gen), t, &budget).unwrap())
        });
    }
    let oa: OrthogonalArray = certified_oa(3, 2, 5);
    g.sample_size(10);
    g.bench_function("certify_exhaustive 3^2 t=5", |b| {
        b.iter(|| verify_strength_exhaustive(black_box(&oa), 5, &budget).unwrap())
    });
    g.finish();
}

fn groups(c: &mut Criterion) {
    c.bench_function("psl28_closure", |b| b.iter(psl28));
}

criterion_group!(benches, rules, arrays, groups);
criterion_main!(benches);
