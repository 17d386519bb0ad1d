//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! Features are standardized with training-set statistics. The objective is
//! mean cross-entropy plus `lambda/2 * ||W||^2` (biases unpenalized). The step
//! size is `1/Lip` with `Lip = 0.5 * max ||[x; 1]||^2 + lambda`, a Lipschitz bound
//! for the softmax cross-entropy gradient.

use crate::error::{Error, Result};
use crate::exec::Executor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRegConfig {
    pub l2: f64,
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig { l2: 1e-4, tolerance: 1e-5, max_epochs: 500 }
    }
}

/// Per-column mean and scale; constant columns keep scale 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for k in 0..d {
                let c = r[k] - mean[k];
                var[k] += c * c;
            }
        }
        let scale = var.into_iter().map(|v| if v > 0.0 { (v / n).sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }
}

/// Fitted classifier. `weights` is `classes x (dim + 1)`, last column the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LogReg {
    pub num_classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub standardizer: Standardizer,
    pub epochs_run: usize,
    pub final_grad_norm: f64,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

fn logits(w: &[f64], x: &[f64], k: usize) -> Vec<f64> {
    let stride = x.len() + 1;
    (0..k)
        .map(|c| {
            let row = &w[c * stride..(c + 1) * stride];
            row[..x.len()].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[x.len()]
        })
        .collect()
}

/// Objective value at `w` on standardized inputs.
pub fn objective(w: &[f64], xs: &[Vec<f64>], ys: &[usize], k: usize, l2: f64) -> f64 {
    let stride = xs.first().map_or(1, |x| x.len() + 1);
    let mut ce = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = logits(w, x, k);
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        ce += lse - z[y];
    }
    let reg: f64 = w.iter().enumerate().filter(|(i, _)| (i + 1) % stride != 0).map(|(_, v)| v * v).sum();
    ce / xs.len() as f64 + 0.5 * l2 * reg
}

/// Gradient of [`objective`], reduced per class row in sample order.
pub fn gradient(w: &[f64], xs: &[Vec<f64>], ys: &[usize], k: usize, l2: f64, exec: &Executor) -> Vec<f64> {
    let d = xs.first().map_or(0, |x| x.len());
    let stride = d + 1;
    let n = xs.len() as f64;
    let probs: Vec<Vec<f64>> = exec.map_range(xs.len(), |i| {
        let mut z = logits(w, &xs[i], k);
        softmax_in_place(&mut z);
        z[ys[i]] -= 1.0;
        z
    });
    let mut g = vec![0.0; k * stride];
    exec.for_each_chunk_mut(&mut g, stride, |c, row| {
        for (x, r) in xs.iter().zip(&probs) {
            let coef = r[c] / n;
            for (gk, xk) in row[..d].iter_mut().zip(x) {
                *gk += coef * xk;
            }
            row[d] += coef;
        }
        let wrow = &w[c * stride..(c + 1) * stride];
        for (gk, wk) in row[..d].iter_mut().zip(wrow) {
            *gk += l2 * wk;
        }
    });
    g
}

impl LogReg {
    pub fn fit(rows: &[&[f64]], labels: &[usize], num_classes: usize, config: &LogRegConfig, exec: &Executor) -> Result<Self> {
        if rows.is_empty() || rows.len() != labels.len() {
            return Err(Error::validation(format!(
                "classifier needs matching nonempty rows and labels (got {} and {})",
                rows.len(),
                labels.len()
            )));
        }
        let dim = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::validation(format!("label {y} outside {num_classes} classes")));
        }
        let standardizer = Standardizer::fit(rows);
        let xs: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.apply(r)).collect();
        let max_sq = xs.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>() + 1.0).fold(0.0, f64::max);
        let step = 1.0 / (0.5 * max_sq + config.l2);

        let mut w = vec![0.0; num_classes * (dim + 1)];
        let mut epochs_run = 0;
        let mut grad_norm = f64::INFINITY;
        for _ in 0..config.max_epochs {
            let g = gradient(&w, &xs, labels, num_classes, config.l2, exec);
            grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if grad_norm < config.tolerance {
                break;
            }
            w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= step * gi);
            epochs_run += 1;
        }
        Ok(LogReg { num_classes, dim, weights: w, standardizer, epochs_run, final_grad_norm: grad_norm })
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let z = logits(&self.weights, &self.standardizer.apply(row), self.num_classes);
        let mut best = 0;
        for (c, v) in z.iter().enumerate() {
            if *v > z[best] {
                best = c;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy(seed: u64, n: usize, d: usize, k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = crate::seed::rng(seed);
        let xs = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys = (0..n).map(|i| i % k).collect();
        (xs, ys)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let exec = Executor::sequential();
        let (k, d) = (3, 4);
        let (xs, ys) = toy(7, 10, d, k);
        let mut rng = crate::seed::rng(8);
        let w: Vec<f64> = (0..k * (d + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l2 = 0.1;
        let g = gradient(&w, &xs, &ys, k, l2, &exec);
        let h = 1e-5;
        for i in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let fd = (objective(&wp, &xs, &ys, k, l2) - objective(&wm, &xs, &ys, k, l2)) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
            assert!(rel < 1e-4, "coordinate {i}: analytic {} fd {fd}", g[i]);
        }
    }

    #[test]
    fn separable_clouds_fit_perfectly() {
        let exec = Executor::sequential();
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![if i < 20 { -3.0 } else { 3.0 } + (i % 5) as f64 * 0.1, (i % 7) as f64]).collect();
        let ys: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = LogReg::fit(&refs, &ys, 2, &LogRegConfig::default(), &exec).unwrap();
        assert!(rows.iter().zip(&ys).all(|(r, &y)| m.predict(r) == y));
    }

    #[test]
    fn objective_decreases() {
        let exec = Executor::sequential();
        let (xs, ys) = toy(3, 30, 5, 3);
        let refs: Vec<&[f64]> = xs.iter().map(|r| r.as_slice()).collect();
        let cfg = LogRegConfig::default();
        let m = LogReg::fit(&refs, &ys, 3, &cfg, &exec).unwrap();
        let std_xs: Vec<Vec<f64>> = xs.iter().map(|r| m.standardizer.apply(r)).collect();
        let zero = vec![0.0; m.weights.len()];
        assert!(objective(&m.weights, &std_xs, &ys, 3, cfg.l2) < objective(&zero, &std_xs, &ys, 3, cfg.l2));
    }

    #[test]
    fn bad_inputs() {
        let exec = Executor::sequential();
        let cfg = LogRegConfig::default();
        assert!(LogReg::fit(&[], &[], 2, &cfg, &exec).is_err());
        assert!(LogReg::fit(&[&[1.0][..]], &[2], 2, &cfg, &exec).is_err());
        assert!(LogReg::fit(&[&[1.0][..], &[1.0, 2.0][..]], &[0, 1], 2, &cfg, &exec).is_err());
    }

    #[test]
    fn standardizer_keeps_constant_columns_finite() {
        let rows = [vec![1.0, 5.0], vec![3.0, 5.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = Standardizer::fit(&refs);
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 0.0]);
    }
}
