//! Attribute encoder: a shared affine map to an `m`-dimensional hidden
//! vector, followed by a linear mean head and an ELU+1 variance head.
//!
//! Second-order models carry an independently initialized context copy of
//! all six tensors.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::gauss::{GaussianEmbedding, VARIANCE_FLOOR};
use crate::graph::SparseRow;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Gaussian embeddings ranked by KL dissimilarity.
    Glace,
    /// Point embeddings (mean head only) ranked by dot product.
    Lace,
}

/// Optional nonlinearity between the shared encoder and the heads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum HiddenActivation {
    #[default]
    Identity,
    Relu,
}

macro_rules! text_enum {
    ($ty:ty, $( $variant:path => $text:literal ),+ $(,)?) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $( $variant => $text ),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $( $text => Ok($variant), )+
                    other => Err(Error::Config(format!(
                        "unknown {} {other:?}", stringify!($ty).to_ascii_lowercase()
                    ))),
                }
            }
        }
    };
}

text_enum!(Mode, Mode::First => "first", Mode::Second => "second");
text_enum!(Kind, Kind::Glace => "glace", Kind::Lace => "lace");
text_enum!(HiddenActivation, HiddenActivation::Identity => "none", HiddenActivation::Relu => "relu");

/// Weights and biases of one encoder. Matrices are row-major:
/// `w` is `D x m`, `w_mu` and `w_sigma` are `m x L`.
#[derive(Clone, PartialEq)]
pub struct EncoderParams {
    pub attr_dim: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub activation: HiddenActivation,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub w_mu: Vec<f64>,
    pub b_mu: Vec<f64>,
    pub w_sigma: Vec<f64>,
    pub b_sigma: Vec<f64>,
}

impl fmt::Debug for EncoderParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EncoderParams")
            .field("attr_dim", &self.attr_dim)
            .field("hidden_dim", &self.hidden_dim)
            .field("embed_dim", &self.embed_dim)
            .field("activation", &self.activation)
            .finish_non_exhaustive()
    }
}

/// Cached forward pass for one node.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    /// Hidden pre-activation (equal to `u` without ReLU).
    pub hidden_pre: Vec<f64>,
    pub u: Vec<f64>,
    /// Variance-head pre-activation.
    pub sigma_pre: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[inline]
fn elu(t: f64) -> f64 {
    if t >= 0.0 {
        t
    } else {
        t.exp_m1()
    }
}

#[inline]
fn elu_grad(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        t.exp()
    }
}

/// Variance from head pre-activation: `max(ELU(t) + 1, VARIANCE_FLOOR)`.
#[inline]
pub fn variance_from_pre(t: f64) -> f64 {
    (elu(t) + 1.0).max(VARIANCE_FLOOR)
}

#[inline]
fn variance_grad(t: f64) -> f64 {
    if elu(t) + 1.0 < VARIANCE_FLOOR {
        0.0
    } else {
        elu_grad(t)
    }
}

fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let bound = glorot_bound(fan_in, fan_out);
    (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect()
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl EncoderParams {
    /// Glorot-uniform weights, zero biases, deterministic in `seed`.
    pub fn init(attr_dim: usize, hidden_dim: usize, embed_dim: usize, seed: u64) -> Result<Self> {
        if attr_dim == 0 || hidden_dim == 0 || embed_dim == 0 {
            return Err(Error::Config(format!(
                "encoder dimensions must be positive (D = {attr_dim}, m = {hidden_dim}, L = {embed_dim})"
            )));
        }
        let mut rng = seed::rng(seed);
        Ok(EncoderParams {
            attr_dim,
            hidden_dim,
            embed_dim,
            activation: HiddenActivation::Identity,
            w: glorot(&mut rng, attr_dim, hidden_dim),
            b: vec![0.0; hidden_dim],
            w_mu: glorot(&mut rng, hidden_dim, embed_dim),
            b_mu: vec![0.0; embed_dim],
            w_sigma: glorot(&mut rng, hidden_dim, embed_dim),
            b_sigma: vec![0.0; embed_dim],
        })
    }

    pub fn with_activation(mut self, activation: HiddenActivation) -> Self {
        self.activation = activation;
        self
    }

    /// Same shapes, every entry zero. Also serves as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        EncoderParams {
            attr_dim: self.attr_dim,
            hidden_dim: self.hidden_dim,
            embed_dim: self.embed_dim,
            activation: self.activation,
            w: vec![0.0; self.w.len()],
            b: vec![0.0; self.b.len()],
            w_mu: vec![0.0; self.w_mu.len()],
            b_mu: vec![0.0; self.b_mu.len()],
            w_sigma: vec![0.0; self.w_sigma.len()],
            b_sigma: vec![0.0; self.b_sigma.len()],
        }
    }

    pub const TENSOR_NAMES: [&'static str; 6] = ["w", "b", "w_mu", "b_mu", "w_sigma", "b_sigma"];

    pub fn tensors(&self) -> [&[f64]; 6] {
        [&self.w, &self.b, &self.w_mu, &self.b_mu, &self.w_sigma, &self.b_sigma]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.w,
            &mut self.b,
            &mut self.w_mu,
            &mut self.b_mu,
            &mut self.w_sigma,
            &mut self.b_sigma,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &SparseRow<'_>) -> Result<()> {
        if x.dim != self.attr_dim {
            return Err(Error::DimensionMismatch { expected: self.attr_dim, got: x.dim });
        }
        Ok(())
    }

    /// Forward pass; cost is proportional to the nonzeros of `x` plus `m * L`.
    pub fn forward(&self, x: &SparseRow<'_>) -> Result<Forward> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &SparseRow<'_>) -> Forward {
        let (m, l) = (self.hidden_dim, self.embed_dim);
        let mut hidden_pre = self.b.clone();
        for (k, v) in x.iter() {
            let row = &self.w[k * m..(k + 1) * m];
            for (h, w) in hidden_pre.iter_mut().zip(row) {
                *h += v * w;
            }
        }
        let u: Vec<f64> = match self.activation {
            HiddenActivation::Identity => hidden_pre.clone(),
            HiddenActivation::Relu => hidden_pre.iter().map(|h| h.max(0.0)).collect(),
        };
        let mut mu = self.b_mu.clone();
        let mut sigma_pre = self.b_sigma.clone();
        for (r, &ur) in u.iter().enumerate() {
            if ur == 0.0 {
                continue;
            }
            let wm = &self.w_mu[r * l..(r + 1) * l];
            let ws = &self.w_sigma[r * l..(r + 1) * l];
            for j in 0..l {
                mu[j] += ur * wm[j];
                sigma_pre[j] += ur * ws[j];
            }
        }
        let sigma = sigma_pre.iter().map(|&t| variance_from_pre(t)).collect();
        Forward { hidden_pre, u, sigma_pre, mu, sigma }
    }

    pub fn encode(&self, x: &SparseRow<'_>) -> Result<GaussianEmbedding> {
        let f = self.forward(x)?;
        Ok(GaussianEmbedding { mu: f.mu, sigma: f.sigma })
    }

    /// Mean head only (point embedding).
    pub fn encode_point(&self, x: &SparseRow<'_>) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.mu)
    }

    /// Gradient of the hidden vector given head gradients, plus the variance
    /// pre-activation gradient.
    fn hidden_grad(&self, f: &Forward, g_mu: &[f64], g_sigma: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let l = self.embed_dim;
        let g_pre: Vec<f64> = g_sigma
            .iter()
            .zip(&f.sigma_pre)
            .map(|(g, &t)| g * variance_grad(t))
            .collect();
        let mut g_u = vec![0.0; self.hidden_dim];
        for (r, gu) in g_u.iter_mut().enumerate() {
            if self.activation == HiddenActivation::Relu && f.hidden_pre[r] <= 0.0 {
                continue;
            }
            let wm = &self.w_mu[r * l..(r + 1) * l];
            let ws = &self.w_sigma[r * l..(r + 1) * l];
            let mut acc = 0.0;
            for j in 0..l {
                acc += wm[j] * g_mu[j] + ws[j] * g_pre[j];
            }
            *gu = acc;
        }
        (g_u, g_pre)
    }

    /// Parameter gradients of `<grad_mu, mu(x)> + <grad_sigma, sigma(x)>`.
    pub fn encode_backward(&self, x: &SparseRow<'_>, grad_mu: &[f64], grad_sigma: &[f64]) -> Result<EncoderParams> {
        self.check_input(x)?;
        for g in [grad_mu, grad_sigma] {
            if g.len() != self.embed_dim {
                return Err(Error::DimensionMismatch { expected: self.embed_dim, got: g.len() });
            }
        }
        let f = self.forward_unchecked(x);
        let rows = [*x];
        Ok(self.batch_backward(&rows, std::slice::from_ref(&f), grad_mu, grad_sigma, &Executor::sequential()))
    }

    /// Gradient with respect to the (dense) input vector.
    pub fn input_grad(&self, x: &SparseRow<'_>, grad_mu: &[f64], grad_sigma: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let f = self.forward_unchecked(x);
        let (g_u, _) = self.hidden_grad(&f, grad_mu, grad_sigma);
        let m = self.hidden_dim;
        Ok((0..self.attr_dim)
            .map(|k| self.w[k * m..(k + 1) * m].iter().zip(&g_u).map(|(w, g)| w * g).sum())
            .collect())
    }

    /// Summed parameter gradients over many nodes.
    ///
    /// `g_mu` and `g_sigma` are `n x L` row-major, aligned with `rows` and
    /// `forwards`. Every output row is reduced over nodes in index order, so
    /// the result does not depend on the executor's worker count.
    pub fn batch_backward(
        &self,
        rows: &[SparseRow<'_>],
        forwards: &[Forward],
        g_mu: &[f64],
        g_sigma: &[f64],
        exec: &Executor,
    ) -> EncoderParams {
        let (m, l) = (self.hidden_dim, self.embed_dim);
        let n = rows.len();
        debug_assert_eq!(forwards.len(), n);
        debug_assert_eq!(g_mu.len(), n * l);

        let hidden: Vec<(Vec<f64>, Vec<f64>)> = exec.map_range(n, |i| {
            self.hidden_grad(&forwards[i], &g_mu[i * l..(i + 1) * l], &g_sigma[i * l..(i + 1) * l])
        });
        let mut grads = self.zeros_like();

        for i in 0..n {
            let (g_u, g_pre) = &hidden[i];
            for j in 0..l {
                grads.b_mu[j] += g_mu[i * l + j];
                grads.b_sigma[j] += g_pre[j];
            }
            for (b, g) in grads.b.iter_mut().zip(g_u) {
                *b += g;
            }
        }

        let rows_per_chunk = 16;
        exec.for_each_chunk_mut(&mut grads.w_mu, rows_per_chunk * l, |chunk, out| {
            for (k, row) in out.chunks_mut(l).enumerate() {
                let r = chunk * rows_per_chunk + k;
                for (i, f) in forwards.iter().enumerate() {
                    let ur = f.u[r];
                    if ur == 0.0 {
                        continue;
                    }
                    let g = &g_mu[i * l..(i + 1) * l];
                    for j in 0..l {
                        row[j] += ur * g[j];
                    }
                }
            }
        });
        exec.for_each_chunk_mut(&mut grads.w_sigma, rows_per_chunk * l, |chunk, out| {
            for (k, row) in out.chunks_mut(l).enumerate() {
                let r = chunk * rows_per_chunk + k;
                for (f, (_, g_pre)) in forwards.iter().zip(&hidden) {
                    let ur = f.u[r];
                    if ur == 0.0 {
                        continue;
                    }
                    for j in 0..l {
                        row[j] += ur * g_pre[j];
                    }
                }
            }
        });

        // W rows only receive contributions from attributes present in the
        // batch. Bucket (attribute, node, value) by attribute, nodes ascending.
        let mut start = vec![0usize; self.attr_dim + 1];
        for x in rows {
            for &k in x.indices {
                start[k as usize + 1] += 1;
            }
        }
        for k in 0..self.attr_dim {
            start[k + 1] += start[k];
        }
        let mut cursor = start.clone();
        let mut entries = vec![(0u32, 0.0f64); start[self.attr_dim]];
        for (i, x) in rows.iter().enumerate() {
            for (k, v) in x.iter() {
                entries[cursor[k]] = (i as u32, v);
                cursor[k] += 1;
            }
        }
        let attrs_per_chunk = 64;
        exec.for_each_chunk_mut(&mut grads.w, attrs_per_chunk * m, |chunk, out| {
            for (off, row) in out.chunks_mut(m).enumerate() {
                let k = chunk * attrs_per_chunk + off;
                for &(i, v) in &entries[start[k]..start[k + 1]] {
                    let g_u = &hidden[i as usize].0;
                    for (o, g) in row.iter_mut().zip(g_u) {
                        *o += v * g;
                    }
                }
            }
        });
        grads
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &EncoderParams, alpha: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }
}

/// A trained (or freshly initialized) model: main encoder, optional context
/// encoder, and the settings needed to score pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub main: EncoderParams,
    pub context: Option<EncoderParams>,
    pub mode: Mode,
    pub kind: Kind,
    pub seed: u64,
    /// Symmetric KL dissimilarity (undirected graphs) or one-sided.
    pub symmetric: bool,
}

impl ModelParams {
    /// Main and context encoders are seeded from `(seed, role)`.
    pub fn init(
        attr_dim: usize,
        hidden_dim: usize,
        embed_dim: usize,
        mode: Mode,
        kind: Kind,
        symmetric: bool,
        activation: HiddenActivation,
        seed: u64,
    ) -> Result<Self> {
        let main = EncoderParams::init(attr_dim, hidden_dim, embed_dim, seed::derive(seed, "init-main"))?
            .with_activation(activation);
        let context = match mode {
            Mode::First => None,
            Mode::Second => Some(
                EncoderParams::init(attr_dim, hidden_dim, embed_dim, seed::derive(seed, "init-context"))?
                    .with_activation(activation),
            ),
        };
        Ok(ModelParams { main, context, mode, kind, seed, symmetric })
    }

    pub fn attr_dim(&self) -> usize {
        self.main.attr_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.main.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, &self.context) {
            (Mode::First, Some(_)) => Err(Error::validation("first-order model must not carry a context encoder")),
            (Mode::Second, None) => Err(Error::validation("second-order model needs a context encoder")),
            (_, Some(c)) if (c.attr_dim, c.hidden_dim, c.embed_dim) != (self.main.attr_dim, self.main.hidden_dim, self.main.embed_dim) => {
                Err(Error::validation("context encoder shape differs from the main encoder"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.main.is_finite() && self.context.as_ref().is_none_or(|c| c.is_finite())
    }
}
