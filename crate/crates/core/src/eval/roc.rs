//! Accuracy and ROC analysis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::seqio::Phenotype;

pub fn accuracy(predictions: &[Phenotype], labels: &[Phenotype]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::InvalidParameter("accuracy of an empty set".into()));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn check_inputs(scores: &[f64], labels: &[Phenotype]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score {s}")));
    }
    let pos = labels.iter().filter(|&&l| l == Phenotype::Resistant).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassEval);
    }
    Ok((pos, neg))
}

/// RES is the positive class. Rows with equal scores share one vertex.
pub fn roc_curve(scores: &[f64], labels: &[Phenotype]) -> Result<RocCurve> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == Phenotype::Resistant {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // trapezoid in integer units, normalized once at the end
        auc += (fp - fp0) as f64 * (tp + tp0) as f64;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: auc / (2.0 * pos as f64 * neg as f64),
    })
}

/// Probability that a random RES row outscores a random SUS row, ties
/// counting one half, via mid-ranks.
pub fn auc_pairwise(scores: &[f64], labels: &[Phenotype]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        let group_pos = order[i..j]
            .iter()
            .filter(|&&r| labels[r] == Phenotype::Resistant)
            .count();
        rank_sum += mid * group_pos as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}
