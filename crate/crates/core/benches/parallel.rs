//! One worker thread vs. the full rayon pool on the data-parallel hot spots.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graphlimit::cuts::min_balanced_cut_exact;
use graphlimit::experiments::{run_components_experiment, ExperimentConfig};
use graphlimit::graph::cut_norm_distance;
use graphlimit::kernel::constant_kernel;
use graphlimit::sampler::sample_graph;
use graphlimit::{GraphLimit, Seed};
use rayon::ThreadPoolBuilder;

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let full = rayon::current_num_threads();
    [("one-thread", 1), ("all-threads", full)]
        .into_iter()
        .map(|(name, t)| (format!("{name}/{t}"), ThreadPoolBuilder::new().num_threads(t).build().unwrap()))
        .collect()
}

fn replicates(c: &mut Criterion) {
    let limit = GraphLimit::sum(vec![
        (0.6, GraphLimit::constant(0.5).unwrap()),
        (0.3, GraphLimit::constant(0.7).unwrap()),
    ])
    .unwrap();
    let cfg = ExperimentConfig::new(limit, vec![500], 32, Seed(1));
    let mut group = c.benchmark_group("components_experiment");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| run_components_experiment(black_box(&cfg)).unwrap()))
        });
    }
    group.finish();
}

fn cut_norm(c: &mut Criterion) {
    let w = constant_kernel(0.5).unwrap();
    let g = sample_graph(&w, 18, Seed(2)).unwrap().graph;
    let h = sample_graph(&w, 18, Seed(3)).unwrap().graph;
    let mut group = c.benchmark_group("cut_norm_n18");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| cut_norm_distance(black_box(&g), black_box(&h)).unwrap()))
        });
    }
    group.finish();
}

fn exact_cut(c: &mut Criterion) {
    let g = sample_graph(&constant_kernel(0.4).unwrap(), 20, Seed(4)).unwrap().graph;
    let mut group = c.benchmark_group("exact_balanced_cut_n20");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| min_balanced_cut_exact(black_box(&g), 0.3).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, replicates, cut_norm, exact_cut);
criterion_main!(benches);
