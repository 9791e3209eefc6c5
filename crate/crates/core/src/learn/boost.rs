//! Discrete AdaBoost over decision stumps.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{check_row, sigmoid, TrainingSet};
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, SparseRow};

pub const DEFAULT_ROUNDS: usize = 50;

const EPS_CLAMP: f64 = 1e-10;

/// Axis-aligned threshold classifier. With polarity +1 it predicts RES when
/// `value > threshold`; with -1 it predicts RES when `value <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: u32,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    /// +1 for RES, -1 for SUS.
    #[inline]
    pub fn predict(&self, row: SparseRow<'_>) -> f64 {
        let above = row.get(self.feature) as f64 > self.threshold;
        if above == (self.polarity > 0) {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostModel {
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
    pub n_features: usize,
}

impl BoostModel {
    /// Weighted vote `sum_t alpha_t * h_t(x)`.
    pub fn decision_function(&self, row: SparseRow<'_>) -> Result<f64> {
        check_row(row, self.n_features)?;
        Ok(self
            .stumps
            .iter()
            .zip(&self.alphas)
            .map(|(s, a)| a * s.predict(row))
            .sum())
    }

    /// `sigmoid(2F)`, which crosses 0.5 exactly where the vote changes sign.
    pub fn predict_proba(&self, row: SparseRow<'_>) -> Result<f64> {
        Ok(sigmoid(2.0 * self.decision_function(row)?))
    }
}

#[derive(Debug, Clone, Copy)]
struct StumpCandidate {
    error: f64,
    stump: Stump,
}

fn candidate_order(a: &StumpCandidate, b: &StumpCandidate) -> Ordering {
    a.error
        .total_cmp(&b.error)
        .then(a.stump.feature.cmp(&b.stump.feature))
        .then(a.stump.threshold.total_cmp(&b.stump.threshold))
        .then(a.stump.polarity.cmp(&b.stump.polarity))
}

/// Per-feature nonzero entries of the training samples, sorted by value.
struct Columns {
    features: Vec<u32>,
    offsets: Vec<usize>,
    entries: Vec<(u32, u32)>,
}

impl Columns {
    fn build(data: &TrainingSet<'_>) -> Columns {
        let mut all: Vec<(u32, u32, u32)> = Vec::new();
        for s in 0..data.len() {
            for (j, v) in data.sample(s).iter() {
                all.push((j, v, s as u32));
            }
        }
        all.sort_unstable();
        let mut features: Vec<u32> = Vec::new();
        let mut offsets = Vec::new();
        let mut entries = Vec::with_capacity(all.len());
        for &(j, v, s) in &all {
            if features.last() != Some(&j) {
                features.push(j);
                offsets.push(entries.len());
            }
            entries.push((v, s));
        }
        offsets.push(entries.len());
        Columns {
            features,
            offsets,
            entries,
        }
    }

    fn best_for(
        &self,
        idx: usize,
        weights: &[f64],
        positive: &[bool],
        tot: (f64, f64),
    ) -> Option<StumpCandidate> {
        let feature = self.features[idx];
        let col = &self.entries[self.offsets[idx]..self.offsets[idx + 1]];
        let (mut nz_neg, mut nz_pos) = (0.0, 0.0);
        for &(_, s) in col {
            if positive[s as usize] {
                nz_pos += weights[s as usize];
            } else {
                nz_neg += weights[s as usize];
            }
        }
        let n_samples = weights.len();
        let mut best: Option<StumpCandidate> = None;
        let mut consider = |lp: f64, ln: f64, threshold: f64| {
            // polarity +1: RES above threshold; errors are RES left + SUS right
            for (error, polarity) in [(lp + (tot.1 - ln), 1i8), (ln + (tot.0 - lp), -1i8)] {
                let cand = StumpCandidate {
                    error,
                    stump: Stump {
                        feature,
                        threshold,
                        polarity,
                    },
                };
                if best.is_none_or(|b| candidate_order(&cand, &b) == Ordering::Less) {
                    best = Some(cand);
                }
            }
        };
        let (mut lp, mut ln) = (0.0, 0.0);
        let mut prev: Option<u32> = None;
        if col.len() < n_samples {
            lp = tot.0 - nz_pos;
            ln = tot.1 - nz_neg;
            prev = Some(0);
        }
        let mut i = 0;
        while i < col.len() {
            let v = col[i].0;
            if let Some(pv) = prev {
                consider(lp, ln, (pv as f64 + v as f64) / 2.0);
            }
            while i < col.len() && col[i].0 == v {
                let s = col[i].1 as usize;
                if positive[s] {
                    lp += weights[s];
                } else {
                    ln += weights[s];
                }
                i += 1;
            }
            prev = Some(v);
        }
        best
    }
}

/// Trains AdaBoost and also returns the sample-weight sum after each round.
pub fn fit_adaboost_traced(
    data: &TrainingSet<'_>,
    n_rounds: usize,
) -> Result<(BoostModel, Vec<f64>)> {
    data.require_two_classes()?;
    if n_rounds == 0 {
        return Err(Error::InvalidParameter("n_rounds must be at least 1".into()));
    }
    let n = data.len();
    let positive: Vec<bool> = (0..n).map(|s| data.is_resistant(s)).collect();
    let columns = Columns::build(data);
    let mut weights = vec![1.0 / n as f64; n];
    let mut model = BoostModel {
        stumps: Vec::new(),
        alphas: Vec::new(),
        n_features: data.n_features(),
    };
    let mut sums = Vec::new();

    for round in 0..n_rounds {
        let mut tot = (0.0, 0.0);
        for s in 0..n {
            if positive[s] {
                tot.0 += weights[s];
            } else {
                tot.1 += weights[s];
            }
        }
        let best = (0..columns.features.len())
            .into_par_iter()
            .filter_map(|i| columns.best_for(i, &weights, &positive, tot))
            .min_by(candidate_order);
        let Some(best) = best else {
            if round == 0 {
                return Err(Error::DegenerateWeakLearner);
            }
            break;
        };
        let predictions: Vec<f64> = (0..n).map(|s| best.stump.predict(data.sample(s))).collect();
        let raw_eps: f64 = (0..n)
            .filter(|&s| (predictions[s] > 0.0) != positive[s])
            .map(|s| weights[s])
            .sum();
        if raw_eps >= 0.5 {
            if round == 0 {
                return Err(Error::DegenerateWeakLearner);
            }
            break;
        }
        let eps = raw_eps.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        model.stumps.push(best.stump);
        model.alphas.push(alpha);

        for s in 0..n {
            let y = if positive[s] { 1.0 } else { -1.0 };
            weights[s] *= (-alpha * y * predictions[s]).exp();
        }
        let z: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= z);
        sums.push(weights.iter().sum());

        if raw_eps <= EPS_CLAMP {
            break;
        }
    }
    Ok((model, sums))
}

pub fn fit_adaboost_on(data: &TrainingSet<'_>, n_rounds: usize) -> Result<BoostModel> {
    fit_adaboost_traced(data, n_rounds).map(|(m, _)| m)
}

/// AdaBoost on every labeled row. Stump search is exhaustive, so no seed is
/// consumed; `_seed` is kept so every learner has the same call shape.
pub fn fit_adaboost(matrix: &FeatureMatrix, n_rounds: usize, _seed: u64) -> Result<BoostModel> {
    fit_adaboost_on(&TrainingSet::labeled(matrix), n_rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::classify;
    use crate::learn::tree::tests::dense_matrix;
    use crate::seqio::Phenotype::{self, Resistant as R, Susceptible as S};

    fn training_error(model: &BoostModel, m: &FeatureMatrix) -> f64 {
        let wrong = (0..m.n_rows())
            .filter(|&i| Some(classify(model.predict_proba(m.row(i)).unwrap())) != m.label(i))
            .count();
        wrong as f64 / m.n_rows() as f64
    }

    #[test]
    fn separable_needs_one_stump() {
        let x: Vec<Vec<u32>> = (0..10).map(|i| vec![i]).collect();
        let y: Vec<Phenotype> = (0..10).map(|i| if i >= 6 { R } else { S }).collect();
        let m = dense_matrix(&x, &y);
        let (model, sums) = fit_adaboost_traced(&TrainingSet::labeled(&m), 50).unwrap();
        assert_eq!(model.stumps.len(), 1);
        assert_eq!(model.stumps[0].threshold, 5.5);
        assert_eq!(model.stumps[0].polarity, 1);
        assert!(model.alphas[0].is_finite());
        assert_eq!(training_error(&model, &m), 0.0);
        assert!((sums[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn chance_level_first_round_is_degenerate() {
        // balanced XOR: every stump has weighted error exactly 0.5
        let x = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let m = dense_matrix(&x, &[S, R, R, S]);
        assert!(matches!(
            fit_adaboost(&m, 10, 0),
            Err(Error::DegenerateWeakLearner)
        ));
        let m = dense_matrix(&[vec![0], vec![0]], &[S, R]);
        assert!(matches!(
            fit_adaboost(&m, 10, 0),
            Err(Error::DegenerateWeakLearner)
        ));
        let m = dense_matrix(&[vec![0], vec![1]], &[R, R]);
        assert!(matches!(fit_adaboost(&m, 10, 0), Err(Error::SingleClassTraining)));
    }

    #[test]
    fn boosting_improves_on_an_interval() {
        // an independent reference run of the same algorithm on this data
        // reaches training error 0.3 after one round and 0.1 after 50
        let x: Vec<Vec<u32>> = (0..10).map(|i| vec![i]).collect();
        let y: Vec<Phenotype> = (0..10).map(|i| if (3..=6).contains(&i) { R } else { S }).collect();
        let m = dense_matrix(&x, &y);
        let single = fit_adaboost(&m, 1, 0).unwrap();
        let boosted = fit_adaboost(&m, 50, 0).unwrap();
        assert!((training_error(&single, &m) - 0.3).abs() < 1e-12);
        assert!((training_error(&boosted, &m) - 0.1).abs() < 1e-12);
        assert_eq!(boosted.stumps.len(), 50);
    }
}
