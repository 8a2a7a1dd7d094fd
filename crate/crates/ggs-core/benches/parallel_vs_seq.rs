//! Compares the rayon-backed batch drivers against their sequential
//! counterparts on the three workloads that dominate real runs: pure
//! classification sweeps, the identity battery, and abelianization of finite
//! quotients.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ggs_core::sweep;
use ggs_core::{DefiningVector, DEFAULT_DEGREE_CAP};

fn sampled_vectors(p: u64, n: u32, count: usize, seed: u64) -> Vec<DefiningVector> {
    let m = p.pow(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let entries: Vec<u64> = (0..m - 1).map(|_| rng.random_range(0..m)).collect();
        if entries.iter().any(|&e| e != 0) {
            out.push(DefiningVector::new(p, n, entries).unwrap());
        }
    }
    out
}

fn bench_classify(c: &mut Criterion) {
    let vectors = sampled_vectors(2, 3, 20_000, 1);
    let mut group = c.benchmark_group("classify_sweep");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("parallel", vectors.len()), &vectors, |b, vs| {
        b.iter(|| sweep::classify_many(vs))
    });
    group.bench_with_input(BenchmarkId::new("sequential", vectors.len()), &vectors, |b, vs| {
        b.iter(|| sweep::classify_many_seq(vs))
    });
    group.finish();
}

fn bench_battery(c: &mut Criterion) {
    let vectors: Vec<DefiningVector> = vec![
        DefiningVector::new(2, 2, vec![1, 0, 0]).unwrap(),
        DefiningVector::new(2, 2, vec![1, 0, 1]).unwrap(),
        DefiningVector::new(2, 2, vec![0, 1, 0]).unwrap(),
        DefiningVector::new(3, 1, vec![1, 2]).unwrap(),
        DefiningVector::new(3, 1, vec![1, 1]).unwrap(),
        DefiningVector::new(2, 2, vec![1, 1, 1]).unwrap(),
        DefiningVector::new(5, 1, vec![1, 2, 4, 3]).unwrap(),
    ];
    let mut group = c.benchmark_group("identity_battery");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| sweep::battery_many(&vectors, 4)));
    group.bench_function("sequential", |b| {
        b.iter(|| sweep::battery_many_seq(&vectors, 4))
    });
    group.finish();
}

fn bench_abelianization(c: &mut Criterion) {
    let vectors = sweep::enumerate_vectors(2, 2).unwrap();
    let mut group = c.benchmark_group("abelianization_depth3");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| sweep::abelianization_many(&vectors, 3, DEFAULT_DEGREE_CAP))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| sweep::abelianization_many_seq(&vectors, 3, DEFAULT_DEGREE_CAP))
    });
    group.finish();
}

criterion_group!(benches, bench_classify, bench_battery, bench_abelianization);
criterion_main!(benches);
