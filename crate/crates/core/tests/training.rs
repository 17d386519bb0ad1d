//! End-to-end training behaviour on synthetic graphs.

use std::time::Instant;

use glace::checkpoint::to_bytes;
use glace::encoder::{HiddenActivation, Kind, Mode, ModelParams};
use glace::graph::{split_edges, AttributedGraph, Edge, SparseRows};
use glace::sampler::{noise_distribution, ArcSampler};
use glace::trainer::{adam_step, batch_loss, sample_batch, train, AdamState, TrainConfig};
use glace::{seed, Executor};
use rand::Rng;

/// Two equal blocks; attributes are either the block indicator or a
/// per-node indicator.
fn sbm(block: usize, p_in: f64, p_out: f64, node_onehot: bool, seed_: u64) -> AttributedGraph {
    let n = 2 * block;
    let mut rng = seed::rng(seed_);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if (i < block) == (j < block) { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push(Edge::new(i as u32, j as u32, 1.0));
            }
        }
    }
    let triplets: Vec<(usize, usize, f64)> =
        (0..n).map(|i| (i, if node_onehot { i } else { usize::from(i >= block) }, 1.0)).collect();
    let d = if node_onehot { n } else { 2 };
    AttributedGraph::new(n, edges, false, SparseRows::from_triplets(n, d, &triplets).unwrap()).unwrap()
}

fn small_config(seed_: u64) -> TrainConfig {
    TrainConfig {
        embed_dim: 8,
        hidden_dim: 16,
        batch_size: 64,
        learning_rate: 0.01,
        max_iters: 300,
        val_check_every: 10,
        seed: seed_,
        ..TrainConfig::default()
    }
}

#[test]
fn loss_decreases_on_block_model() {
    let g = sbm(20, 0.5, 0.01, true, 1);
    let split = split_edges(&g, 0.2, 0.0, 2).unwrap();
    let cfg = TrainConfig { max_iters: 200, ..small_config(3) };
    let (_, report) = train(&g, &split, &cfg).unwrap();
    assert_eq!(report.loss_history.len(), 200);
    assert!(report.loss_history.iter().all(|l| l.is_finite()));
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (head, tail) = (mean(&report.loss_history[..20]), mean(&report.loss_history[180..]));
    assert!(tail < 0.8 * head, "smoothed loss {head} -> {tail}");
}

#[test]
fn block_model_is_recovered() {
    // intra density 0.9 keeps intra-block non-edges (indistinguishable from
    // edges at the block level) under 10% of negatives
    let g = sbm(20, 0.9, 0.01, false, 4);
    let split = split_edges(&g, 0.2, 0.15, 5).unwrap();
    for mode in [Mode::First, Mode::Second] {
        let cfg = TrainConfig { mode, ..small_config(6) };
        let (_, report) = train(&g, &split, &cfg).unwrap();
        let best = report.best_val_auc.unwrap();
        assert!(best > 0.9, "{mode}: validation AUC {best}");
    }
}

#[test]
fn context_and_main_are_distinct_after_one_step() {
    let attrs = SparseRows::from_triplets(3, 2, &[(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0)]).unwrap();
    let g = AttributedGraph::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0), Edge::new(2, 0, 1.0)], true, attrs).unwrap();
    let model = ModelParams::init(2, 4, 2, Mode::Second, Kind::Glace, false, HiddenActivation::Identity, 8).unwrap();
    let exec = Executor::sequential();
    let arcs = ArcSampler::new(&g).unwrap();
    let noise = noise_distribution(&g).unwrap();
    let (batch, negs) = sample_batch(&arcs, &noise, 4, 2, 1, 1);
    let grads = batch_loss(&model, g.attributes(), &batch, &negs, &exec).unwrap();
    let mut m = model.clone();
    let ctx = m.context.as_mut().unwrap();
    adam_step(&mut AdamState::new(&m.main.clone()), &mut m.main, &grads.main, 1e-2, &exec);
    let before_ctx = ctx.clone();
    adam_step(&mut AdamState::new(&before_ctx), ctx, grads.context.as_ref().unwrap(), 1e-2, &exec);
    let ctx = m.context.as_ref().unwrap();
    assert_ne!(m.main.w, ctx.w);
    assert_ne!(m.main.w, model.main.w);
    assert_ne!(ctx.w, model.context.as_ref().unwrap().w);
}

#[test]
fn identical_seeds_give_identical_checkpoints() {
    let g = sbm(15, 0.6, 0.05, true, 9);
    let split = split_edges(&g, 0.2, 0.1, 10).unwrap();
    let cfg = TrainConfig { max_iters: 40, ..small_config(11) };
    let (a, ra) = train(&g, &split, &cfg).unwrap();
    let (b, rb) = train(&g, &split, &cfg).unwrap();
    assert_eq!(to_bytes(&a), to_bytes(&b));
    assert_eq!(ra.loss_history, rb.loss_history);
}

#[cfg(feature = "parallel")]
#[test]
fn worker_count_does_not_change_results() {
    let g = sbm(25, 0.4, 0.02, true, 12);
    let split = split_edges(&g, 0.2, 0.1, 13).unwrap();
    for mode in [Mode::First, Mode::Second] {
        let cfg = TrainConfig { mode, max_iters: 30, ..small_config(14) };
        let (one, _) = train(&g, &split, &TrainConfig { workers: 1, ..cfg.clone() }).unwrap();
        let (four, _) = train(&g, &split, &TrainConfig { workers: 4, ..cfg }).unwrap();
        assert_eq!(to_bytes(&one), to_bytes(&four), "{mode}");
    }
}

fn large_sparse_graph(n: usize, d: usize, seed_: u64) -> AttributedGraph {
    let mut rng = seed::rng(seed_);
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    while edges.len() < 3 * n {
        let (a, b) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push(Edge::new(a, b, 1.0));
        }
    }
    let triplets: Vec<(usize, usize, f64)> =
        (0..n).flat_map(|i| (0..8).map(move |k| (i, (i * 31 + k * 97) % d, 1.0))).collect();
    AttributedGraph::new(n, edges, false, SparseRows::from_triplets(n, d, &triplets).unwrap()).unwrap()
}

/// Least-squares fit of `y = a + b x`; returns R^2.
fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Fastest of several timed runs of `iters` loss-and-update steps.
fn time_iterations(g: &AttributedGraph, model: &ModelParams, b: usize, n_neg: usize) -> f64 {
    let exec = Executor::sequential();
    let arcs = ArcSampler::new(g).unwrap();
    let noise = noise_distribution(g).unwrap();
    let mut best = f64::INFINITY;
    for rep in 0..5 {
        let mut m = model.clone();
        let mut state = AdamState::new(&m.main);
        let start = Instant::now();
        for t in 0..8 {
            let (batch, negs) = sample_batch(&arcs, &noise, b, n_neg, rep, t);
            let grads = batch_loss(&m, g.attributes(), &batch, &negs, &exec).unwrap();
            adam_step(&mut state, &mut m.main, &grads.main, 1e-3, &exec);
        }
        best = best.min(start.elapsed().as_secs_f64());
    }
    best
}

#[test]
fn iteration_cost_is_linear_in_batch_and_negatives() {
    let g = large_sparse_graph(40_000, 300, 15);
    let model = ModelParams::init(300, 64, 16, Mode::First, Kind::Glace, true, HiddenActivation::Identity, 16).unwrap();
    let bs = [128.0, 256.0, 512.0];
    let tb: Vec<f64> = bs.iter().map(|&b| time_iterations(&g, &model, b as usize, 5)).collect();
    let ns = [2.0, 5.0, 10.0];
    let tn: Vec<f64> = ns.iter().map(|&n| time_iterations(&g, &model, 256, n as usize)).collect();
    let (rb, rn) = (r_squared(&bs, &tb), r_squared(&ns, &tn));
    assert!(rb > 0.95, "batch-size fit R^2 {rb} ({tb:?})");
    assert!(rn > 0.95, "negatives fit R^2 {rn} ({tn:?})");
}
