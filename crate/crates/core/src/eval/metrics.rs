//! Ranking metrics for link prediction.

use crate::error::{Error, Result};

/// Group `(score, is_positive)` into tie groups, highest score first.
/// Returns `(positives, negatives)` per group.
fn tie_groups(pos: &[f64], neg: &[f64]) -> Vec<(usize, usize)> {
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut last: Option<f64> = None;
    for (s, is_pos) in all {
        if last.is_none_or(|l| l.total_cmp(&s).is_ne()) {
            groups.push((0, 0));
            last = Some(s);
        }
        let g = groups.last_mut().expect("group opened above");
        if is_pos {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

fn auc_from_groups(groups: &[(usize, usize)], p: usize, n: usize) -> f64 {
    // Walk from the top: each negative is beaten by every positive above it
    // and ties with the positives in its own group.
    let mut pos_above = 0usize;
    let mut wins2 = 0u128;
    for &(gp, gn) in groups {
        wins2 += (gn as u128) * (2 * pos_above as u128 + gp as u128);
        pos_above += gp;
    }
    wins2 as f64 / (2.0 * p as f64 * n as f64)
}

fn ap_from_groups(groups: &[(usize, usize)], p: usize) -> f64 {
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0;
    for &(gp, gn) in groups {
        tp += gp;
        seen += gp + gn;
        if gp > 0 {
            ap += gp as f64 * (tp as f64 / seen as f64);
        }
    }
    ap / p as f64
}

/// AUC and AP of positive against negative scores. Both sets must be nonempty.
pub fn auc_ap(pos: &[f64], neg: &[f64]) -> (f64, f64) {
    assert!(!pos.is_empty() && !neg.is_empty(), "AUC needs positives and negatives");
    let groups = tie_groups(pos, neg);
    (auc_from_groups(&groups, pos.len(), neg.len()), ap_from_groups(&groups, pos.len()))
}

/// Probability that a random positive outscores a random negative, ties 0.5.
pub fn auc(pos: &[f64], neg: &[f64]) -> f64 {
    auc_ap(pos, neg).0
}

/// Step-wise average precision: sum over distinct thresholds of
/// `(recall gain) * precision`.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> f64 {
    auc_ap(pos, neg).1
}

/// Checked `(AUC, AP)`.
pub fn link_prediction(pos: &[f64], neg: &[f64]) -> Result<(f64, f64)> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::validation(format!(
            "link prediction needs positive and negative pairs (got {} and {})",
            pos.len(),
            neg.len()
        )));
    }
    Ok(auc_ap(pos, neg))
}
