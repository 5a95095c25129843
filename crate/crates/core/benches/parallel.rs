use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use decaylife_core::distributions::DecayModel;
use decaylife_core::exec::{par_map, seq_map};
use decaylife_core::lifetime::RegimeConfig;
use decaylife_core::montecarlo::sample;
use decaylife_core::optimize::{extremize, log_grid};
use decaylife_core::system::{BasisMap, StateSpec, SystemParams};

fn envelope_points(c: &mut Criterion) {
    let ks = log_grid(1.0, 1e4, 32).unwrap();
    let mut g = c.benchmark_group("envelope_32k");
    for dm in [1e-3, 1.0] {
        let point = move |_: usize, k: &f64| extremize(&RegimeConfig::new(dm, *k).unwrap()).unwrap().r_max;
        g.bench_with_input(BenchmarkId::new("sequential", dm), &ks, |b, ks| b.iter(|| seq_map(black_box(ks), point)));
        g.bench_with_input(BenchmarkId::new("parallel", dm), &ks, |b, ks| b.iter(|| par_map(black_box(ks), point)));
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let sys = SystemParams::from_regime(26.89, 1.0).unwrap();
    let m = DecayModel::unconditional(&sys, &BasisMap::symmetric(), &StateSpec::p()).unwrap();
    let seeds: Vec<u64> = (0..8).collect();
    let mut g = c.benchmark_group("sample_8x20000");
    g.bench_function("sequential", |b| b.iter(|| seq_map(&seeds, |_, s| sample(&m, 20_000, *s).unwrap().times.len())));
    g.bench_function("parallel", |b| b.iter(|| par_map(&seeds, |_, s| sample(&m, 20_000, *s).unwrap().times.len())));
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = envelope_points, sampling
}
criterion_main!(benches);
