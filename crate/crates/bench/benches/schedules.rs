use std::hint::black_box;

use blindcast_bench::simultaneous;
use blindcast_core::{
    exactly_one_probability, prf_uniform, simulate_mac, sync_bit, ts_bit, MasterKey, Mode, NodeId,
    ScheduleSeed, StreamTag,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bits(c: &mut Criterion) {
    let key = MasterKey::default();
    let seed = ScheduleSeed::default();
    let v = NodeId::new(123_457).unwrap();
    c.bench_function("prf_uniform", |b| {
        let mut j = 0u64;
        b.iter(|| {
            j += 1;
            prf_uniform(&key, StreamTag::Sync, black_box(77), j)
        })
    });
    c.bench_function("sync_bit", |b| {
        let mut j = 0u64;
        b.iter(|| {
            j += 1;
            sync_bit(&seed, v, j)
        })
    });
    c.bench_function("ts_bit", |b| {
        let mut j = 0u64;
        b.iter(|| {
            j += 1;
            ts_bit(&seed, v, 3, j)
        })
    });
}

fn channel(c: &mut Criterion) {
    let seed = ScheduleSeed::default();
    let mut group = c.benchmark_group("simulate_mac");
    group.sample_size(20);
    for mode in Mode::ALL {
        for k in [16u64, 256] {
            let inst = simultaneous(k, k);
            let horizon = 2 * inst.budget(&seed.params, mode).value;
            group.bench_with_input(BenchmarkId::new(mode.as_str(), k), &inst, |b, inst| {
                b.iter(|| simulate_mac(inst, &seed, mode, horizon, false))
            });
        }
    }
    group.finish();
}

fn colhit(c: &mut Criterion) {
    let probs: Vec<f64> = (1..=6).map(|i| i as f64 / 20.0).collect();
    c.bench_function("exactly_one_probability/6", |b| {
        b.iter(|| exactly_one_probability(black_box(&probs)))
    });
}

criterion_group!(benches, bits, channel, colhit);
criterion_main!(benches);
