//! Evaluation protocols: link prediction, node classification, inductive
//! link prediction for unseen nodes, and embedding export.

mod classify;
mod export;
pub mod logreg;
mod metrics;
mod report;

pub use classify::{embedding_features, f1_scores, node_classification, ClassifyConfig, F1Scores, FeatureSet, DEFAULT_TRIALS, MAX_RESAMPLES};
pub use export::{export_embeddings, read_embeddings, ExportedEmbeddings};
pub use logreg::{LogReg, LogRegConfig, Standardizer};
pub use metrics::{auc, auc_ap, average_precision, link_prediction};
pub use report::{EvalReport, F1Row, Task};

use crate::encoder::{Kind, ModelParams};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::gauss::dissimilarity_raw;
use crate::graph::{InductiveSplit, NodeId, Pair, SparseRows};

/// Encoded means (and variances for GLACE) for a set of nodes, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    kind: Kind,
    symmetric: bool,
    mu: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn from_parts(dim: usize, kind: Kind, symmetric: bool, mu: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 || !mu.len().is_multiple_of(dim) {
            return Err(Error::validation(format!("{} mean values do not form rows of width {dim}", mu.len())));
        }
        match (&sigma, kind) {
            (None, Kind::Glace) => return Err(Error::validation("Gaussian embeddings need variances")),
            (Some(s), _) if s.len() != mu.len() => return Err(Error::DimensionMismatch { expected: mu.len(), got: s.len() }),
            (Some(s), _) => {
                if let Some((index, &value)) = s.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::NonPositiveVariance { index: index % dim, value });
                }
            }
            _ => {}
        }
        Ok(EmbeddingTable { dim, kind, symmetric, mu, sigma })
    }

    /// Encode every attribute row with the model's main encoder.
    pub fn from_model(model: &ModelParams, attrs: &SparseRows, exec: &Executor) -> Result<Self> {
        let rows: Vec<NodeId> = (0..attrs.nrows() as NodeId).collect();
        Self::encode_rows(model, attrs, &rows, exec)
    }

    fn encode_rows(model: &ModelParams, attrs: &SparseRows, rows: &[NodeId], exec: &Executor) -> Result<Self> {
        if attrs.ncols() != model.attr_dim() {
            return Err(Error::DimensionMismatch { expected: model.attr_dim(), got: attrs.ncols() });
        }
        if let Some(&r) = rows.iter().find(|&&r| r as usize >= attrs.nrows()) {
            return Err(Error::validation(format!("node {r} has no attribute row ({} rows)", attrs.nrows())));
        }
        let fwd = exec.map(rows, |&r| model.main.forward_unchecked(&attrs.row(r as usize)));
        let mu = fwd.iter().flat_map(|f| f.mu.iter().copied()).collect();
        let sigma = match model.kind {
            Kind::Glace => Some(fwd.iter().flat_map(|f| f.sigma.iter().copied()).collect()),
            Kind::Lace => None,
        };
        Self::from_parts(model.embed_dim(), model.kind, model.symmetric, mu, sigma)
    }

    pub fn len(&self) -> usize {
        self.mu.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn mu(&self, i: usize) -> &[f64] {
        &self.mu[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sigma(&self, i: usize) -> Option<&[f64]> {
        self.sigma.as_ref().map(|s| &s[i * self.dim..(i + 1) * self.dim])
    }

    /// Higher means a more likely edge: `-d` for GLACE, `<mu_i, mu_j>` for LACE.
    pub fn score(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            Kind::Glace => {
                let s = self.sigma.as_ref().expect("GLACE tables carry variances");
                let (a, b) = (i * self.dim, j * self.dim);
                -dissimilarity_raw(
                    &self.mu[a..a + self.dim],
                    &s[a..a + self.dim],
                    &self.mu[b..b + self.dim],
                    &s[b..b + self.dim],
                    self.symmetric,
                )
            }
            Kind::Lace => self.mu(i).iter().zip(self.mu(j)).map(|(x, y)| x * y).sum(),
        }
    }

    pub fn score_pairs(&self, pairs: &[Pair], exec: &Executor) -> Result<Vec<f64>> {
        let n = self.len();
        if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a as usize >= n || b as usize >= n) {
            return Err(Error::validation(format!("pair ({a}, {b}) refers to a node outside the {n} embedded")));
        }
        Ok(exec.map(pairs, |&(a, b)| self.score(a as usize, b as usize)))
    }
}

/// Score one pair by encoding both endpoints.
pub fn score_pair(model: &ModelParams, attrs: &SparseRows, i: NodeId, j: NodeId) -> Result<f64> {
    let t = EmbeddingTable::encode_rows(model, attrs, &[i, j], &Executor::sequential())?;
    Ok(t.score(0, 1))
}

/// Score pairs, encoding only the nodes they touch.
pub fn score_model_pairs(model: &ModelParams, attrs: &SparseRows, pairs: &[Pair], exec: &Executor) -> Result<Vec<f64>> {
    let mut nodes: Vec<NodeId> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let table = EmbeddingTable::encode_rows(model, attrs, &nodes, exec)?;
    let slot = |v: NodeId| nodes.binary_search(&v).expect("node encoded above");
    Ok(exec.map(pairs, |&(a, b)| table.score(slot(a), slot(b))))
}

/// Rescale to `[0, 1]`; a constant vector maps to zeros.
pub fn min_max_normalize(scores: &mut [f64]) {
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for s in scores.iter_mut() {
        *s = if span > 0.0 { (*s - lo) / span } else { 0.0 };
    }
}

/// Scores for `pos` and `neg` under the sum of several independently trained
/// models, each min-max normalized over `pos ++ neg` when `normalize` is set.
pub fn concat_scores(
    models: &[&ModelParams],
    attrs: &SparseRows,
    pos: &[Pair],
    neg: &[Pair],
    normalize: bool,
    exec: &Executor,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if models.is_empty() {
        return Err(Error::Config("concatenated scoring needs at least one model".into()));
    }
    let all: Vec<Pair> = pos.iter().chain(neg).copied().collect();
    let mut total = vec![0.0; all.len()];
    for m in models {
        let mut s = score_model_pairs(m, attrs, &all, exec)?;
        if normalize {
            min_max_normalize(&mut s);
        }
        total.iter_mut().zip(&s).for_each(|(t, v)| *t += v);
    }
    let neg_scores = total.split_off(pos.len());
    Ok((total, neg_scores))
}

/// `(AUC, AP)` of one model on the given pairs.
pub fn link_prediction_model(model: &ModelParams, attrs: &SparseRows, pos: &[Pair], neg: &[Pair], exec: &Executor) -> Result<(f64, f64)> {
    link_prediction(&score_model_pairs(model, attrs, pos, exec)?, &score_model_pairs(model, attrs, neg, exec)?)
}

/// Attribute rows in original node order, rebuilt from the visible graph and
/// the hidden rows.
pub fn inductive_attributes(ind: &InductiveSplit) -> Result<SparseRows> {
    let vis = ind.visible_graph.attributes();
    let n = ind.visible_nodes.len() + ind.hidden_nodes.len();
    if ind.hidden_attr.nrows() != ind.hidden_nodes.len() {
        return Err(Error::validation(format!(
            "{} hidden nodes but {} hidden attribute rows",
            ind.hidden_nodes.len(),
            ind.hidden_attr.nrows()
        )));
    }
    let mut triplets = Vec::with_capacity(vis.nnz() + ind.hidden_attr.nnz());
    for (rows, ids) in [(vis, &ind.visible_nodes), (&ind.hidden_attr, &ind.hidden_nodes)] {
        for (k, &orig) in ids.iter().enumerate() {
            triplets.extend(rows.row(k).iter().map(|(c, v)| (orig as usize, c, v)));
        }
    }
    SparseRows::from_triplets(n, vis.ncols(), &triplets)
}

/// Scores for the inductive evaluation pairs; hidden nodes are encoded from
/// their attributes only.
pub fn inductive_scores(model: &ModelParams, ind: &InductiveSplit, exec: &Executor) -> Result<(Vec<f64>, Vec<f64>)> {
    let attrs = inductive_attributes(ind)?;
    let pos: Vec<Pair> = ind.eval_pos.iter().map(|e| e.pair()).collect();
    Ok((score_model_pairs(model, &attrs, &pos, exec)?, score_model_pairs(model, &attrs, &ind.eval_neg, exec)?))
}

pub fn inductive_link_prediction(model: &ModelParams, ind: &InductiveSplit, exec: &Executor) -> Result<(f64, f64)> {
    let (pos, neg) = inductive_scores(model, ind, exec)?;
    link_prediction(&pos, &neg)
}
