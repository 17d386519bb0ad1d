//! Negative-sampled proximity objectives and their gradients.
//!
//! For a batch of arcs `(i, j)` with `N` negatives `v_1..v_N` each, the loss
//! (the negation of the objective being maximized) is
//!
//! ```text
//! -sum_(i,j) [ log s(-d(z_i, c_j)) + sum_n log s(d(z_i, c_vn)) ]
//! ```
//!
//! where `s` is the logistic function and `c` is the main embedding for
//! first-order models or the context embedding for second-order models.
//! LACE models use `d = -<mu_i, mu_j>`.

use crate::encoder::{EncoderParams, Forward, Kind, Mode, ModelParams};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::gauss::{dissimilarity_grad_raw, dissimilarity_raw, log_sigmoid, sigmoid};
use crate::graph::{NodeId, SparseRows};

/// Summed batch loss and parameter gradients.
#[derive(Clone, Debug)]
pub struct BatchGrads {
    pub loss: f64,
    pub main: EncoderParams,
    pub context: Option<EncoderParams>,
}

struct Side<'a> {
    params: &'a EncoderParams,
    nodes: Vec<NodeId>,
    forwards: Vec<Forward>,
}

impl<'a> Side<'a> {
    fn build(params: &'a EncoderParams, attrs: &SparseRows, mut nodes: Vec<NodeId>, exec: &Executor) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        let forwards = exec.map(&nodes, |&n| params.forward_unchecked(&attrs.row(n as usize)));
        Side { params, nodes, forwards }
    }

    fn slot(&self, node: NodeId) -> usize {
        self.nodes.binary_search(&node).expect("node registered for this side")
    }
}

/// Dissimilarity and its gradient for one pair, accumulated with `scale`.
#[inline]
fn pair_term(
    kind: Kind,
    symmetric: bool,
    a: &Forward,
    b: &Forward,
    outer: impl Fn(f64) -> (f64, f64),
    ga: (&mut [f64], &mut [f64]),
    gb: (&mut [f64], &mut [f64]),
) -> f64 {
    match kind {
        Kind::Glace => {
            let d = dissimilarity_raw(&a.mu, &a.sigma, &b.mu, &b.sigma, symmetric);
            let (loss, dloss) = outer(d);
            dissimilarity_grad_raw(&a.mu, &a.sigma, &b.mu, &b.sigma, symmetric, dloss, ga.0, ga.1, gb.0, gb.1);
            loss
        }
        Kind::Lace => {
            let dot: f64 = a.mu.iter().zip(&b.mu).map(|(x, y)| x * y).sum();
            let (loss, dloss) = outer(-dot);
            for l in 0..a.mu.len() {
                ga.0[l] -= dloss * b.mu[l];
                gb.0[l] -= dloss * a.mu[l];
            }
            loss
        }
    }
}

/// `-log s(-d)` and its derivative in `d`.
#[inline]
fn positive(d: f64) -> (f64, f64) {
    (-log_sigmoid(-d), sigmoid(d))
}

/// `-log s(d)` and its derivative in `d`.
#[inline]
fn negative(d: f64) -> (f64, f64) {
    (-log_sigmoid(d), -sigmoid(-d))
}

/// Batch loss and gradients for the model's own mode.
///
/// `negatives` holds `N` nodes per batch arc, arc-major.
pub fn batch_loss(
    model: &ModelParams,
    attrs: &SparseRows,
    batch: &[(NodeId, NodeId)],
    negatives: &[NodeId],
    exec: &Executor,
) -> Result<BatchGrads> {
    if batch.is_empty() || !negatives.len().is_multiple_of(batch.len()) {
        return Err(Error::Config(format!(
            "{} negatives do not divide evenly over {} batch arcs",
            negatives.len(),
            batch.len()
        )));
    }
    if attrs.ncols() != model.attr_dim() {
        return Err(Error::DimensionMismatch { expected: model.attr_dim(), got: attrs.ncols() });
    }
    let n_neg = negatives.len() / batch.len();
    let l = model.embed_dim();
    let kind = model.kind;
    let symmetric = model.symmetric;

    let anchors: Vec<NodeId> = batch.iter().map(|e| e.0).collect();
    let targets: Vec<NodeId> = batch.iter().map(|e| e.1).chain(negatives.iter().copied()).collect();
    let (main, ctx) = match (model.mode, &model.context) {
        (Mode::First, _) => {
            let mut all = anchors;
            all.extend(&targets);
            (Side::build(&model.main, attrs, all, exec), None)
        }
        (Mode::Second, Some(c)) => (
            Side::build(&model.main, attrs, anchors, exec),
            Some(Side::build(c, attrs, targets, exec)),
        ),
        (Mode::Second, None) => return Err(Error::validation("second-order model without a context encoder")),
    };
    let target_side = ctx.as_ref().unwrap_or(&main);

    // Per arc: gradients for anchor, positive target, then each negative;
    // each block is [g_mu (L), g_sigma (L)].
    let block = 2 * l;
    let per_arc: Vec<(f64, Vec<f64>)> = exec.map_range(batch.len(), |e| {
        let (i, j) = batch[e];
        let mut g = vec![0.0; (2 + n_neg) * block];
        let (anchor_g, rest) = g.split_at_mut(block);
        let (ag_mu, ag_sigma) = anchor_g.split_at_mut(l);
        let fi = &main.forwards[main.slot(i)];
        let mut loss = 0.0;
        for (t, tg) in rest.chunks_mut(block).enumerate() {
            let (node, outer): (NodeId, fn(f64) -> (f64, f64)) = if t == 0 {
                (j, positive)
            } else {
                (negatives[e * n_neg + t - 1], negative)
            };
            let ft = &target_side.forwards[target_side.slot(node)];
            let (tg_mu, tg_sigma) = tg.split_at_mut(l);
            loss += pair_term(kind, symmetric, fi, ft, outer, (&mut *ag_mu, &mut *ag_sigma), (tg_mu, tg_sigma));
        }
        (loss, g)
    });

    let mut loss = 0.0;
    let mut main_g = (vec![0.0; main.nodes.len() * l], vec![0.0; main.nodes.len() * l]);
    let mut ctx_g = ctx.as_ref().map(|c| (vec![0.0; c.nodes.len() * l], vec![0.0; c.nodes.len() * l]));
    for (e, (arc_loss, g)) in per_arc.iter().enumerate() {
        if !arc_loss.is_finite() {
            let (src, dst) = batch[e];
            return Err(Error::NonFinite { iteration: 0, src, dst });
        }
        loss += arc_loss;
        let (i, j) = batch[e];
        let add = |acc: &mut (Vec<f64>, Vec<f64>), slot: usize, blk: &[f64]| {
            for k in 0..l {
                acc.0[slot * l + k] += blk[k];
                acc.1[slot * l + k] += blk[l + k];
            }
        };
        add(&mut main_g, main.slot(i), &g[..block]);
        for (t, blk) in g[block..].chunks(block).enumerate() {
            let node = if t == 0 { j } else { negatives[e * n_neg + t - 1] };
            match (&ctx, &mut ctx_g) {
                (Some(c), Some(acc)) => add(acc, c.slot(node), blk),
                _ => add(&mut main_g, main.slot(node), blk),
            }
        }
    }

    let backward = |side: &Side<'_>, g: &(Vec<f64>, Vec<f64>)| {
        let rows: Vec<_> = side.nodes.iter().map(|&n| attrs.row(n as usize)).collect();
        side.params.batch_backward(&rows, &side.forwards, &g.0, &g.1, exec)
    };
    let main_grads = backward(&main, &main_g);
    let context_grads = ctx.as_ref().zip(ctx_g.as_ref()).map(|(c, g)| backward(c, g));
    Ok(BatchGrads { loss, main: main_grads, context: context_grads })
}

/// First-order objective: both endpoints and negatives use the main encoder.
pub fn batch_loss_first(
    model: &ModelParams,
    attrs: &SparseRows,
    batch: &[(NodeId, NodeId)],
    negatives: &[NodeId],
    exec: &Executor,
) -> Result<BatchGrads> {
    if model.mode != Mode::First {
        return Err(Error::Config("first-order loss requested for a second-order model".into()));
    }
    batch_loss(model, attrs, batch, negatives, exec)
}

/// Second-order objective: anchors use the main encoder, targets and
/// negatives the context encoder.
pub fn batch_loss_second(
    model: &ModelParams,
    attrs: &SparseRows,
    batch: &[(NodeId, NodeId)],
    negatives: &[NodeId],
    exec: &Executor,
) -> Result<BatchGrads> {
    if model.mode != Mode::Second {
        return Err(Error::Config("second-order loss requested for a first-order model".into()));
    }
    batch_loss(model, attrs, batch, negatives, exec)
}
