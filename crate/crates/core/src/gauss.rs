//! Diagonal-Gaussian arithmetic: KL divergence, the (a)symmetric
//! dissimilarity, proximity probabilities and analytic gradients.
//!
//! `sigma` always holds variances (the diagonal of the covariance), never
//! standard deviations.

use crate::error::{Error, Result};

/// Smallest variance the encoder will emit.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianEmbedding {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GaussianEmbedding {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::DimensionMismatch { expected: mu.len(), got: sigma.len() });
        }
        let e = GaussianEmbedding { mu, sigma };
        e.validate()?;
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((index, &value)) = self.sigma.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::NonPositiveVariance { index, value });
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::validation("mean vector has non-finite components"));
        }
        Ok(())
    }
}

fn check_pair(p: &GaussianEmbedding, q: &GaussianEmbedding) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    p.validate()?;
    q.validate()
}

/// `KL(p || q)` on raw slices. Inputs are not validated.
#[inline]
pub fn kl_raw(mu_p: &[f64], var_p: &[f64], mu_q: &[f64], var_q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for l in 0..mu_p.len() {
        let diff = mu_q[l] - mu_p[l];
        acc += (var_q[l] / var_p[l]).ln() + (var_p[l] + diff * diff) / var_q[l] - 1.0;
    }
    0.5 * acc
}

/// Adds `scale * dKL(p||q)/d(.)` into the four gradient buffers.
#[inline]
#[allow(clippy::too_many_arguments)]
fn kl_grad_raw(
    mu_p: &[f64],
    var_p: &[f64],
    mu_q: &[f64],
    var_q: &[f64],
    scale: f64,
    g_mu_p: &mut [f64],
    g_var_p: &mut [f64],
    g_mu_q: &mut [f64],
    g_var_q: &mut [f64],
) {
    for l in 0..mu_p.len() {
        let diff = mu_p[l] - mu_q[l];
        let inv_q = 1.0 / var_q[l];
        let gm = scale * diff * inv_q;
        g_mu_p[l] += gm;
        g_mu_q[l] -= gm;
        g_var_p[l] += scale * 0.5 * (inv_q - 1.0 / var_p[l]);
        g_var_q[l] += scale * 0.5 * (inv_q - (var_p[l] + diff * diff) * inv_q * inv_q);
    }
}

/// Dissimilarity on raw slices: symmetric average of both KL directions, or
/// `KL(z_j || z_i)` when asymmetric.
#[inline]
pub fn dissimilarity_raw(mu_i: &[f64], var_i: &[f64], mu_j: &[f64], var_j: &[f64], symmetric: bool) -> f64 {
    if symmetric {
        0.5 * (kl_raw(mu_i, var_i, mu_j, var_j) + kl_raw(mu_j, var_j, mu_i, var_i))
    } else {
        kl_raw(mu_j, var_j, mu_i, var_i)
    }
}

/// Accumulates `scale * grad` of [`dissimilarity_raw`] into the buffers.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn dissimilarity_grad_raw(
    mu_i: &[f64],
    var_i: &[f64],
    mu_j: &[f64],
    var_j: &[f64],
    symmetric: bool,
    scale: f64,
    g_mu_i: &mut [f64],
    g_var_i: &mut [f64],
    g_mu_j: &mut [f64],
    g_var_j: &mut [f64],
) {
    if symmetric {
        let h = 0.5 * scale;
        kl_grad_raw(mu_i, var_i, mu_j, var_j, h, g_mu_i, g_var_i, g_mu_j, g_var_j);
        kl_grad_raw(mu_j, var_j, mu_i, var_i, h, g_mu_j, g_var_j, g_mu_i, g_var_i);
    } else {
        kl_grad_raw(mu_j, var_j, mu_i, var_i, scale, g_mu_j, g_var_j, g_mu_i, g_var_i);
    }
}

/// Closed-form `KL(p || q)` for diagonal Gaussians.
pub fn kl(p: &GaussianEmbedding, q: &GaussianEmbedding) -> Result<f64> {
    check_pair(p, q)?;
    Ok(kl_raw(&p.mu, &p.sigma, &q.mu, &q.sigma))
}

pub fn dissimilarity(zi: &GaussianEmbedding, zj: &GaussianEmbedding, symmetric: bool) -> Result<f64> {
    check_pair(zi, zj)?;
    Ok(dissimilarity_raw(&zi.mu, &zi.sigma, &zj.mu, &zj.sigma, symmetric))
}

/// Partial derivatives of the dissimilarity with respect to both embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityGrad {
    pub mu_i: Vec<f64>,
    pub sigma_i: Vec<f64>,
    pub mu_j: Vec<f64>,
    pub sigma_j: Vec<f64>,
}

pub fn dissimilarity_grad(zi: &GaussianEmbedding, zj: &GaussianEmbedding, symmetric: bool) -> Result<DissimilarityGrad> {
    check_pair(zi, zj)?;
    let l = zi.dim();
    let mut g = DissimilarityGrad {
        mu_i: vec![0.0; l],
        sigma_i: vec![0.0; l],
        mu_j: vec![0.0; l],
        sigma_j: vec![0.0; l],
    };
    dissimilarity_grad_raw(
        &zi.mu, &zi.sigma, &zj.mu, &zj.sigma, symmetric, 1.0, &mut g.mu_i, &mut g.sigma_i, &mut g.mu_j, &mut g.sigma_j,
    );
    Ok(g)
}

/// Logistic function, stable for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(x))` without overflow: `-softplus(-x)`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Edge probability `1 / (1 + exp(d))`; 0.5 at `d = 0`, decreasing to 0.
pub fn first_order_prob(d: f64) -> f64 {
    sigmoid(-d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(mu: &[f64], s: &[f64]) -> GaussianEmbedding {
        GaussianEmbedding::new(mu.to_vec(), s.to_vec()).unwrap()
    }

    #[test]
    fn kl_identity_and_unit_shift() {
        let p = g(&[1.0, -2.0], &[0.5, 3.0]);
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        let a = g(&[1.0], &[1.0]);
        let b = g(&[0.0], &[1.0]);
        assert!((kl(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert!((dissimilarity(&a, &b, true).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_direction() {
        let zi = g(&[0.0], &[1.0]);
        let zj = g(&[0.0], &[4.0]);
        // d(zi, zj) = KL(zj || zi)
        let expected = 0.5 * ((1.0f64 / 4.0).ln() + 4.0 - 1.0);
        assert!((dissimilarity(&zi, &zj, false).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let a = g(&[0.0], &[1.0]);
        let b = g(&[0.0, 1.0], &[1.0, 1.0]);
        assert!(matches!(kl(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(GaussianEmbedding::new(vec![0.0], vec![0.0]).is_err());
        assert!(GaussianEmbedding::new(vec![0.0], vec![-1.0]).is_err());
        let bad = GaussianEmbedding { mu: vec![0.0], sigma: vec![0.0] };
        assert!(matches!(kl(&a, &bad), Err(Error::NonPositiveVariance { .. })));
    }

    #[test]
    fn first_order_prob_values() {
        assert_eq!(first_order_prob(0.0), 0.5);
        assert!((first_order_prob(3.0f64.ln()) - 0.25).abs() < 1e-15);
        assert!(first_order_prob(1e6) >= 0.0 && first_order_prob(1e6) < 1e-300);
    }

    #[test]
    fn log_sigmoid_stable() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!(log_sigmoid(800.0) <= 0.0 && log_sigmoid(800.0) > -1e-300);
        for x in [-5.0, -0.3, 0.7, 4.0] {
            assert!((log_sigmoid(x) - sigmoid(x).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn mean_gradient_of_asymmetric_unit_case() {
        // d(zi, zj) = KL(zj || zi); with zj = N(1,1), zi = N(0,1) the
        // derivative of KL(p||q) w.r.t. the mean of q is -(mu_p - mu_q)/var_q = -1.
        let zi = g(&[0.0], &[1.0]);
        let zj = g(&[1.0], &[1.0]);
        let gr = dissimilarity_grad(&zi, &zj, false).unwrap();
        assert!((gr.mu_i[0] + 1.0).abs() < 1e-15);
        assert!((gr.mu_j[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coincident_embeddings_are_stationary_in_mean() {
        let z = g(&[0.3, -1.0, 2.0], &[0.5, 1.5, 2.0]);
        let gr = dissimilarity_grad(&z, &z, true).unwrap();
        assert!(gr.mu_i.iter().chain(&gr.mu_j).all(|v| *v == 0.0));
        assert!(gr.sigma_i.iter().chain(&gr.sigma_j).all(|v| v.abs() < 1e-15));
    }

    fn arb_gauss(l: usize) -> impl Strategy<Value = GaussianEmbedding> {
        (prop::collection::vec(-3.0f64..3.0, l), prop::collection::vec(0.05f64..5.0, l))
            .prop_map(|(mu, s)| GaussianEmbedding { mu, sigma: s })
    }

    proptest! {
        #[test]
        fn kl_nonnegative(p in arb_gauss(4), q in arb_gauss(4)) {
            prop_assert!(kl(&p, &q).unwrap() >= -1e-12);
        }

        #[test]
        fn symmetric_mode_exchange_invariant(a in arb_gauss(5), b in arb_gauss(5)) {
            let d1 = dissimilarity(&a, &b, true).unwrap();
            let d2 = dissimilarity(&b, &a, true).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
        }

        #[test]
        fn first_order_prob_strictly_decreasing(a in 0.0f64..30.0, delta in 1e-3f64..5.0) {
            prop_assert!(first_order_prob(a + delta) < first_order_prob(a));
        }
    }
}
