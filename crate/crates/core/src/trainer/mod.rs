//! Mini-batch training with Adam and validation-AUC early stopping.

mod adam;
mod loss;

use std::time::Instant;

use log::{debug, info};

use crate::encoder::{HiddenActivation, Kind, Mode, ModelParams};
use crate::error::{Error, Result};
use crate::eval::{auc_ap, score_model_pairs};
use crate::exec::Executor;
use crate::graph::{AttributedGraph, EdgeSplit, NodeId, Pair};
use crate::sampler::{noise_distribution, AliasTable, ArcSampler};
use crate::seed;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use loss::{batch_loss, batch_loss_first, batch_loss_second, BatchGrads};

/// Redraws allowed when a negative coincides with the anchor.
const NEGATIVE_REDRAWS: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub kind: Kind,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub negatives: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub patience: usize,
    pub val_check_every: usize,
    pub seed: u64,
    /// `None` picks symmetric KL for undirected graphs, one-sided for directed.
    pub symmetric_kl: Option<bool>,
    pub hidden_activation: HiddenActivation,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::First,
            kind: Kind::Glace,
            embed_dim: 64,
            hidden_dim: 512,
            negatives: 5,
            batch_size: 512,
            learning_rate: 1e-3,
            max_iters: 2000,
            patience: 10,
            val_check_every: 25,
            seed: 0,
            symmetric_kl: None,
            hidden_activation: HiddenActivation::Identity,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("embedding dimension", self.embed_dim),
            ("hidden dimension", self.hidden_dim),
            ("negatives", self.negatives),
            ("batch size", self.batch_size),
            ("max iterations", self.max_iters),
            ("patience", self.patience),
            ("validation interval", self.val_check_every),
            ("workers", self.workers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }

    pub fn symmetric_for(&self, g: &AttributedGraph) -> bool {
        self.symmetric_kl.unwrap_or(!g.is_directed())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValCheck {
    pub iteration: usize,
    pub auc: f64,
    pub elapsed_sec: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub iterations_run: usize,
    pub val_auc_history: Vec<ValCheck>,
    /// Iteration whose parameters were returned (the last one without validation).
    pub best_iteration: usize,
    pub best_val_auc: Option<f64>,
    pub loss_history: Vec<f64>,
    pub wall_clock: f64,
}

/// Optional inputs to [`train_with`].
#[derive(Default)]
pub struct TrainOptions<'a> {
    /// Continue from these parameters instead of a fresh initialization.
    pub initial: Option<ModelParams>,
    /// Called after every validation check.
    pub on_check: Option<Box<dyn FnMut(&ValCheck) + 'a>>,
}

pub fn train(graph: &AttributedGraph, split: &EdgeSplit, config: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    train_with(graph, split, config, TrainOptions::default())
}

fn check_initial(model: &ModelParams, graph: &AttributedGraph, config: &TrainConfig) -> Result<()> {
    model.validate()?;
    let expect = (graph.attr_dim(), config.hidden_dim, config.embed_dim, config.mode, config.kind);
    let got = (model.main.attr_dim, model.main.hidden_dim, model.main.embed_dim, model.mode, model.kind);
    if expect != got {
        return Err(Error::Config(format!(
            "resume checkpoint (D, m, L, mode, kind) = {got:?} does not match the run {expect:?}"
        )));
    }
    Ok(())
}

fn draw_negative<R: rand::Rng>(noise: &AliasTable, anchor: NodeId, rng: &mut R) -> NodeId {
    let mut v = noise.sample(rng) as NodeId;
    for _ in 0..NEGATIVE_REDRAWS {
        if v != anchor {
            break;
        }
        v = noise.sample(rng) as NodeId;
    }
    v
}

/// Sample one batch: arcs proportional to weight, `N` negatives per arc.
pub fn sample_batch(
    arcs: &ArcSampler,
    noise: &AliasTable,
    batch_size: usize,
    negatives: usize,
    seed: u64,
    iteration: usize,
) -> (Vec<(NodeId, NodeId)>, Vec<NodeId>) {
    let mut rng = seed::rng(seed::derive_indexed(seed, "batch", iteration as u64));
    let batch: Vec<(NodeId, NodeId)> = (0..batch_size).map(|_| arcs.sample(&mut rng)).collect();
    let negs = batch
        .iter()
        .flat_map(|&(i, _)| (0..negatives).map(move |_| i))
        .map(|i| draw_negative(noise, i, &mut rng))
        .collect();
    (batch, negs)
}

pub fn train_with(
    graph: &AttributedGraph,
    split: &EdgeSplit,
    config: &TrainConfig,
    mut options: TrainOptions<'_>,
) -> Result<(ModelParams, TrainReport)> {
    config.validate()?;
    let start = Instant::now();
    let exec = Executor::with_workers(config.workers)?;
    let train_graph = graph.with_edges(split.train.clone())?;
    let arcs = ArcSampler::new(&train_graph)?;
    let noise = noise_distribution(&train_graph)?;
    let attrs = graph.attributes();

    let mut model = match options.initial.take() {
        Some(m) => {
            check_initial(&m, graph, config)?;
            m
        }
        None => ModelParams::init(
            graph.attr_dim(),
            config.hidden_dim,
            config.embed_dim,
            config.mode,
            config.kind,
            config.symmetric_for(graph),
            config.hidden_activation,
            config.seed,
        )?,
    };
    let mut main_opt = AdamState::new(&model.main);
    let mut ctx_opt = model.context.as_ref().map(AdamState::new);

    let val_pos: Vec<Pair> = split.val_pos.iter().map(|e| e.pair()).collect();
    let val_neg = &split.val_neg;
    let validate = !val_pos.is_empty() && !val_neg.is_empty();

    let mut report = TrainReport {
        iterations_run: 0,
        val_auc_history: Vec::new(),
        best_iteration: 0,
        best_val_auc: None,
        loss_history: Vec::with_capacity(config.max_iters),
        wall_clock: 0.0,
    };
    let mut best_model: Option<ModelParams> = None;
    let mut stale_checks = 0;
    let batch_seed = seed::derive(config.seed, "batches");

    for iteration in 1..=config.max_iters {
        let (batch, negs) = sample_batch(&arcs, &noise, config.batch_size, config.negatives, batch_seed, iteration);
        let grads = batch_loss(&model, attrs, &batch, &negs, &exec).map_err(|e| match e {
            Error::NonFinite { src, dst, .. } => Error::NonFinite { iteration, src, dst },
            other => other,
        })?;
        adam_step(&mut main_opt, &mut model.main, &grads.main, config.learning_rate, &exec);
        if let (Some(state), Some(ctx), Some(g)) = (ctx_opt.as_mut(), model.context.as_mut(), grads.context.as_ref()) {
            adam_step(state, ctx, g, config.learning_rate, &exec);
        }
        report.loss_history.push(grads.loss);
        report.iterations_run = iteration;
        if !model.is_finite() {
            let (src, dst) = batch[0];
            return Err(Error::NonFinite { iteration, src, dst });
        }

        if validate && (iteration % config.val_check_every == 0 || iteration == config.max_iters) {
            let pos = score_model_pairs(&model, attrs, &val_pos, &exec)?;
            let neg = score_model_pairs(&model, attrs, val_neg, &exec)?;
            let (auc, _) = auc_ap(&pos, &neg);
            let check = ValCheck { iteration, auc, elapsed_sec: start.elapsed().as_secs_f64() };
            debug!("iter {iteration}: loss {:.4} val auc {auc:.4}", grads.loss);
            if let Some(cb) = options.on_check.as_mut() {
                cb(&check);
            }
            report.val_auc_history.push(check);
            if report.best_val_auc.is_none_or(|b| auc > b) {
                report.best_val_auc = Some(auc);
                report.best_iteration = iteration;
                best_model = Some(model.clone());
                stale_checks = 0;
            } else {
                stale_checks += 1;
                if stale_checks >= config.patience {
                    info!("early stop at iteration {iteration}; best {} at {}", auc, report.best_iteration);
                    break;
                }
            }
        }
    }

    if let Some(best) = best_model {
        model = best;
    } else {
        report.best_iteration = report.iterations_run;
    }
    report.wall_clock = start.elapsed().as_secs_f64();
    Ok((model, report))
}
