use std::hint::black_box;

use boolvol_core::dynamics::{simulate_trajectory, DynamicsParams};
use boolvol_core::make_instance;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn trajectory(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory");
    group.sample_size(20);
    for spec in ["maj:101", "itermaj3:6", "andor:10", "dap:64"] {
        let inst = make_instance(spec.parse().unwrap()).unwrap();
        let params = DynamicsParams::new(0.5, 1.0, 1, 1).unwrap();
        let mut r = 0u64;
        group.bench_function(BenchmarkId::from_parameter(spec), |b| {
            b.iter(|| {
                r += 1;
                black_box(simulate_trajectory(&inst, &params, r).unwrap());
            })
        });
    }
    group.finish();
}

criterion_group!(benches, trajectory);
criterion_main!(benches);
