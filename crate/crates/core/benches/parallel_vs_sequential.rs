use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::Rng;

use glace::encoder::{HiddenActivation, Kind, Mode, ModelParams};
use glace::eval::score_model_pairs;
use glace::graph::{AttributedGraph, Edge, SparseRows};
use glace::sampler::{noise_distribution, ArcSampler};
use glace::trainer::{adam_step, batch_loss, sample_batch, AdamState};
use glace::{seed, Executor};

fn graph(n: usize, d: usize) -> AttributedGraph {
    let mut rng = seed::rng(1);
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    while edges.len() < 4 * n {
        let (a, b) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push(Edge::new(a, b, 1.0));
        }
    }
    let triplets: Vec<(usize, usize, f64)> =
        (0..n).flat_map(|i| (0..20).map(move |k| (i, (i * 131 + k * 37) % d, 1.0))).collect();
    AttributedGraph::new(n, edges, false, SparseRows::from_triplets(n, d, &triplets).unwrap()).unwrap()
}

fn executors() -> Vec<(String, Executor)> {
    let mut v = vec![("sequential".to_string(), Executor::sequential())];
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    if cfg!(feature = "parallel") && cores > 1 {
        v.push((format!("parallel-{cores}"), Executor::with_workers(cores).unwrap()));
    }
    v
}

fn bench_batch_loss(c: &mut Criterion) {
    let g = graph(20_000, 2_000);
    let arcs = ArcSampler::new(&g).unwrap();
    let noise = noise_distribution(&g).unwrap();
    let mut group = c.benchmark_group("batch_loss");
    for mode in [Mode::First, Mode::Second] {
        let model = ModelParams::init(2_000, 128, 32, mode, Kind::Glace, true, HiddenActivation::Identity, 2).unwrap();
        let (batch, negs) = sample_batch(&arcs, &noise, 512, 5, 3, 1);
        group.throughput(Throughput::Elements(batch.len() as u64));
        for (name, exec) in executors() {
            group.bench_with_input(BenchmarkId::new(name, mode), &mode, |b, _| {
                b.iter(|| batch_loss(&model, g.attributes(), &batch, &negs, &exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_adam(c: &mut Criterion) {
    let model = ModelParams::init(2_000, 256, 64, Mode::First, Kind::Glace, true, HiddenActivation::Identity, 4).unwrap();
    let grads = model.main.clone();
    let mut group = c.benchmark_group("adam_step");
    group.throughput(Throughput::Elements(model.main.num_params() as u64));
    for (name, exec) in executors() {
        let mut params = model.main.clone();
        let mut state = AdamState::new(&params);
        group.bench_function(name, |b| b.iter(|| adam_step(&mut state, &mut params, &grads, 1e-3, &exec)));
    }
    group.finish();
}

fn bench_scoring(c: &mut Criterion) {
    let g = graph(20_000, 2_000);
    let model = ModelParams::init(2_000, 128, 32, Mode::First, Kind::Glace, true, HiddenActivation::Identity, 5).unwrap();
    let pairs: Vec<(u32, u32)> = g.edges().iter().take(10_000).map(|e| e.pair()).collect();
    let mut group = c.benchmark_group("score_pairs");
    group.throughput(Throughput::Elements(pairs.len() as u64));
    group.sample_size(20);
    for (name, exec) in executors() {
        group.bench_function(name, |b| b.iter(|| score_model_pairs(&model, g.attributes(), &pairs, &exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_batch_loss, bench_adam, bench_scoring);
criterion_main!(benches);
