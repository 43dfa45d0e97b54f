use std::hint::black_box;

use boolvol_core::{build_state, make_instance, BitConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn apply_update(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_update");
    for spec in ["maj:1001", "itermaj3:8", "andor:14", "perc:[3,3,3,3,3,3,3]:7", "parity:4096"] {
        let inst = make_instance(spec.parse().unwrap()).unwrap();
        let n = inst.arity();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let config = BitConfig::new((0..n).map(|_| rng.random_range(0..2u8)).collect()).unwrap();
        let mut state = build_state(&inst, &config).unwrap();
        group.bench_function(BenchmarkId::from_parameter(spec), |b| {
            b.iter(|| {
                let i = rng.random_range(0..n);
                let v = rng.random_bool(0.5);
                black_box(state.apply_update(i, v).unwrap());
            })
        });
    }
    group.finish();
}

criterion_group!(benches, apply_update);
criterion_main!(benches);
