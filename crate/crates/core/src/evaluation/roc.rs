//! ROC AUC by pair counting, one-vs-all AUCs and accuracy.

use crate::error::{Error, Result};
use crate::features::Diagnosis;

/// Pairs `(positive, negative)` ranked correctly and pairs tied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub positives: u64,
    pub negatives: u64,
    pub greater: u64,
    pub ties: u64,
}

impl PairCounts {
    pub fn auc(&self) -> f64 {
        (2 * self.greater + self.ties) as f64 / (2 * self.positives * self.negatives) as f64
    }
}

fn check_inputs(scores: &[f64], positives: &[bool]) -> Result<()> {
    if scores.len() != positives.len() {
        return Err(Error::Evaluation(format!(
            "{} scores but {} labels",
            scores.len(),
            positives.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Evaluation("scores must be finite".into()));
    }
    Ok(())
}

pub fn pair_counts(scores: &[f64], positives: &[bool]) -> Result<PairCounts> {
    check_inputs(scores, positives)?;
    let mut neg: Vec<f64> = scores
        .iter()
        .zip(positives)
        .filter(|(_, &p)| !p)
        .map(|(&s, _)| s)
        .collect();
    let n_pos = positives.len() - neg.len();
    if n_pos == 0 || neg.is_empty() {
        return Err(Error::Evaluation(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    neg.sort_by(f64::total_cmp);
    let mut greater = 0u64;
    let mut ties = 0u64;
    for (&s, _) in scores.iter().zip(positives).filter(|(_, &p)| p) {
        let below = neg.partition_point(|&v| v < s);
        let upto = neg.partition_point(|&v| v <= s);
        greater += below as u64;
        ties += (upto - below) as u64;
    }
    Ok(PairCounts {
        positives: n_pos as u64,
        negatives: neg.len() as u64,
        greater,
        ties,
    })
}

/// `P(score⁺ > score⁻) + ½ P(score⁺ = score⁻)` over all positive/negative pairs.
pub fn roc_auc(scores: &[f64], positives: &[bool]) -> Result<f64> {
    Ok(pair_counts(scores, positives)?.auc())
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one per distinct score.
pub fn roc_curve(scores: &[f64], positives: &[bool]) -> Result<Vec<(f64, f64)>> {
    let counts = pair_counts(scores, positives)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (p, n) = (counts.positives as f64, counts.negatives as f64);
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positives[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push((fp as f64 / n, tp as f64 / p));
    }
    Ok(pts)
}

/// Trapezoidal area under a piecewise-linear curve.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// AUC of `prob(c)` against `truth == c` for each class, ordered
/// `[odd, papilledema, healthy]`.
pub fn one_vs_all_aucs(probs: &[[f64; 3]], truth: &[Diagnosis]) -> Result<[f64; 3]> {
    if probs.len() != truth.len() {
        return Err(Error::Evaluation(format!(
            "{} probability rows but {} labels",
            probs.len(),
            truth.len()
        )));
    }
    let mut out = [0.0; 3];
    for c in Diagnosis::ALL {
        if !truth.contains(&c) {
            return Err(Error::Evaluation(format!(
                "class {c} missing from the evaluation set"
            )));
        }
        let scores: Vec<f64> = probs.iter().map(|p| p[c.index()]).collect();
        let positives: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        out[c.index()] = roc_auc(&scores, &positives)?;
    }
    Ok(out)
}

pub fn accuracy(pred: &[Diagnosis], truth: &[Diagnosis]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Evaluation(format!(
            "accuracy needs equal nonempty inputs, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}
