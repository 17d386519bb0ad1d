//! Constant-time weighted sampling (Vose's alias method) for training edges
//! and negative nodes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, NodeId};

/// Exponent applied to weighted out-degree in the negative-node distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

#[derive(Clone, Debug, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// O(n) construction. Needs at least one strictly positive weight; all
    /// weights must be finite and nonnegative.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::Sampling("alias table needs at least one weight".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::Sampling("too many outcomes for an alias table".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Sampling(format!("weight {i} is {w}; weights must be finite and nonnegative")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Sampling("all weights are zero".into()));
        }

        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![0.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<u32> = Vec::with_capacity(n);
        let mut large: Vec<u32> = Vec::with_capacity(n);
        for (i, &p) in scaled.iter().enumerate() {
            if p >= 1.0 {
                large.push(i as u32);
            } else if p > 0.0 {
                small.push(i as u32);
            }
        }
        // zero-mass outcomes go on top so they are paired first
        small.extend((0..n as u32).filter(|&i| scaled[i as usize] == 0.0));

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s as usize] = scaled[s as usize];
            alias[s as usize] = l;
            let rest = (scaled[l as usize] + scaled[s as usize]) - 1.0;
            scaled[l as usize] = rest;
            if rest < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for i in large.into_iter().chain(small) {
            // rounding leftovers: each carries mass ~1
            prob[i as usize] = 1.0;
            alias[i as usize] = i;
        }
        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Draw one index using two uniform variates.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.prob.len();
        let slot = ((rng.random::<f64>() * n as f64) as usize).min(n - 1);
        if rng.random::<f64>() < self.prob[slot] {
            slot
        } else {
            self.alias[slot] as usize
        }
    }

    /// Exact sampling probability of every outcome, reconstructed from the table.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut mass: Vec<f64> = self.prob.iter().map(|p| p / n).collect();
        for (slot, &p) in self.prob.iter().enumerate() {
            mass[self.alias[slot] as usize] += (1.0 - p) / n;
        }
        mass
    }
}

/// Negative-node distribution: weight `out_weight(v)^0.75`, where out-weight
/// is the sum of outgoing arc weights. Isolated nodes get zero mass.
pub fn noise_distribution(g: &AttributedGraph) -> Result<AliasTable> {
    if g.num_arcs() == 0 {
        return Err(Error::Sampling("noise distribution needs at least one arc".into()));
    }
    let adj = g.adjacency();
    let weights: Vec<f64> = (0..g.num_nodes())
        .map(|v| adj.out_weight(v).powf(NOISE_EXPONENT))
        .collect();
    AliasTable::new(&weights)
}

/// Weight-proportional sampler over the arcs of a graph.
#[derive(Clone, Debug)]
pub struct ArcSampler {
    arcs: Vec<(NodeId, NodeId)>,
    table: AliasTable,
}

impl ArcSampler {
    pub fn new(g: &AttributedGraph) -> Result<Self> {
        let (arcs, weights): (Vec<_>, Vec<_>) = g.adjacency().arcs().map(|(s, t, w)| ((s, t), w)).unzip();
        if arcs.is_empty() {
            return Err(Error::Sampling("graph has no arcs to sample".into()));
        }
        Ok(ArcSampler { arcs, table: AliasTable::new(&weights)? })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (NodeId, NodeId) {
        self.arcs[self.table.sample(rng)]
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}
