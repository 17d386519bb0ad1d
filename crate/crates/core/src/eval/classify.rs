//! Node classification with a logistic-regression probe.

use rand::seq::SliceRandom;

use super::logreg::{LogReg, LogRegConfig};
use super::EmbeddingTable;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::graph::Labels;
use crate::seed;

pub const DEFAULT_TRIALS: usize = 10;
/// Resamples allowed per trial when a class is missing from the training part.
pub const MAX_RESAMPLES: usize = 50;

/// Which embedding components form the classifier input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FeatureSet {
    #[default]
    Mu,
    MuLogSigma,
}

pub fn embedding_features(table: &EmbeddingTable, set: FeatureSet) -> Vec<Vec<f64>> {
    (0..table.len())
        .map(|i| {
            let mut f = table.mu(i).to_vec();
            if set == FeatureSet::MuLogSigma {
                if let Some(s) = table.sigma(i) {
                    f.extend(s.iter().map(|v| v.ln()));
                }
            }
            f
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyConfig {
    pub train_frac: f64,
    pub trials: usize,
    pub seed: u64,
    pub logreg: LogRegConfig,
}

impl ClassifyConfig {
    pub fn new(train_frac: f64, seed: u64) -> Self {
        ClassifyConfig { train_frac, trials: DEFAULT_TRIALS, seed, logreg: LogRegConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct F1Scores {
    pub train_frac: f64,
    pub micro: f64,
    pub macro_: f64,
    pub per_trial: Vec<(f64, f64)>,
}

/// Micro and macro F1 over the classes seen in either truth or prediction.
pub fn f1_scores(truth: &[usize], pred: &[usize], num_classes: usize) -> (f64, f64) {
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let correct: usize = tp.iter().sum();
    let micro = correct as f64 / truth.len().max(1) as f64;
    let mut sum = 0.0;
    let mut seen = 0;
    for c in 0..num_classes {
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        if denom > 0 {
            sum += 2.0 * tp[c] as f64 / denom as f64;
            seen += 1;
        }
    }
    (micro, if seen == 0 { 0.0 } else { sum / seen as f64 })
}

/// Split labeled nodes into train/test so every labeled class is in train.
fn draw_split(labeled: &[(usize, usize)], num_train: usize, classes: &[bool], seed: u64, trial: usize) -> Result<(Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    for attempt in 0..=MAX_RESAMPLES {
        let mut rng = seed::rng(seed::derive_indexed(seed::derive_indexed(seed, "nc-trial", trial as u64), "attempt", attempt as u64));
        let mut order = labeled.to_vec();
        order.shuffle(&mut rng);
        let test = order.split_off(num_train);
        let mut present = vec![false; classes.len()];
        for &(_, c) in &order {
            present[c] = true;
        }
        if present == classes {
            return Ok((order, test));
        }
    }
    Err(Error::validation(format!(
        "trial {trial}: no training sample covering every class after {MAX_RESAMPLES} resamples"
    )))
}

/// Train on a `train_frac` sample of labeled nodes, score on the rest,
/// average over trials.
pub fn node_classification(features: &[Vec<f64>], labels: &Labels, config: &ClassifyConfig, exec: &Executor) -> Result<F1Scores> {
    if features.len() != labels.of_node.len() {
        return Err(Error::DimensionMismatch { expected: labels.of_node.len(), got: features.len() });
    }
    if !(config.train_frac > 0.0 && config.train_frac < 1.0) {
        return Err(Error::Config(format!("train fraction {} must lie in (0, 1)", config.train_frac)));
    }
    if config.trials == 0 {
        return Err(Error::Config("at least one classification trial is required".into()));
    }
    let labeled = labels.labeled();
    let k = labels.num_classes();
    let mut classes = vec![false; k];
    for &(_, c) in &labeled {
        classes[c] = true;
    }
    if classes.iter().filter(|&&c| c).count() < 2 {
        return Err(Error::validation("node classification needs at least two labeled classes"));
    }
    let num_train = ((config.train_frac * labeled.len() as f64).round() as usize).clamp(1, labeled.len() - 1);

    let mut per_trial = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let (train, test) = draw_split(&labeled, num_train, &classes, config.seed, trial)?;
        let rows: Vec<&[f64]> = train.iter().map(|&(i, _)| features[i].as_slice()).collect();
        let ys: Vec<usize> = train.iter().map(|&(_, c)| c).collect();
        let model = LogReg::fit(&rows, &ys, k, &config.logreg, exec)?;
        let pred = exec.map(&test, |&(i, _)| model.predict(&features[i]));
        let truth: Vec<usize> = test.iter().map(|&(_, c)| c).collect();
        per_trial.push(f1_scores(&truth, &pred, k));
    }
    let t = per_trial.len() as f64;
    Ok(F1Scores {
        train_frac: config.train_frac,
        micro: per_trial.iter().map(|p| p.0).sum::<f64>() / t,
        macro_: per_trial.iter().map(|p| p.1).sum::<f64>() / t,
        per_trial,
    })
}
