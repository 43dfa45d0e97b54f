use std::hint::black_box;

use boolvol_core::make_instance;
use boolvol_core::oracle::{exact_influence_report, exact_noise_covariance};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for spec in ["maj:15", "dap:15", "andor:3"] {
        let inst = make_instance(spec.parse().unwrap()).unwrap();
        group.bench_function(BenchmarkId::new("influence", spec), |b| {
            b.iter(|| black_box(exact_influence_report(&inst, 0.5).unwrap()))
        });
        group.bench_function(BenchmarkId::new("noise", spec), |b| {
            b.iter(|| black_box(exact_noise_covariance(&inst, 0.5, 0.1).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, oracle);
criterion_main!(benches);
