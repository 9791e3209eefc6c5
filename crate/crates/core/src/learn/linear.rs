//! L1-penalized logistic regression by cyclic coordinate descent.
//!
//! Minimizes `mean_i logloss(y_i, b + x_i . w) + lambda * sum_j |w_j|` over
//! standardized features (mean 0, variance 1 over the training rows; constant
//! columns are left out). The intercept is not penalized. Each coordinate
//! step minimizes a quadratic upper bound of the loss (curvature bound 1/4 of
//! the column's mean square) followed by soft-thresholding, so the objective
//! never increases. Sweeps alternate between the full feature set and the
//! currently nonzero coordinates; convergence is declared when a full sweep
//! moves no coordinate by more than the tolerance.

use super::{check_row, sigmoid, TrainingSet};
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    pub lambda: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams {
            lambda: 0.01,
            max_iters: 10_000,
            tolerance: 1e-6,
        }
    }
}

/// Weights in the original feature scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn decision_function(&self, row: SparseRow<'_>) -> Result<f64> {
        check_row(row, self.weights.len())?;
        Ok(self.intercept
            + row
                .iter()
                .map(|(j, v)| self.weights[j as usize] * v as f64)
                .sum::<f64>())
    }

    /// `sigmoid(w . x + b)`, the RES probability.
    pub fn predict_score(&self, row: SparseRow<'_>) -> Result<f64> {
        Ok(sigmoid(self.decision_function(row)?))
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub model: LinearModel,
    /// Objective before the first sweep and after every sweep.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct StdColumn {
    feature: u32,
    mean: f64,
    scale: f64,
    mean_sq: f64,
    /// (sample, raw value) for nonzero entries.
    entries: Vec<(u32, f64)>,
}

/// Standardized design over the non-constant columns of a training set.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    n: usize,
    n_features: usize,
    y: Vec<f64>,
    columns: Vec<StdColumn>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

impl LogisticProblem {
    pub fn new(data: &TrainingSet<'_>) -> Self {
        let n = data.len();
        let y = (0..n)
            .map(|s| if data.is_resistant(s) { 1.0 } else { 0.0 })
            .collect();
        let mut by_feature: Vec<(u32, u32, f64)> = Vec::new();
        for s in 0..n {
            for (j, v) in data.sample(s).iter() {
                by_feature.push((j, s as u32, v as f64));
            }
        }
        by_feature.sort_unstable_by_key(|e| (e.0, e.1));
        let mut columns = Vec::new();
        let mut start = 0;
        while start < by_feature.len() {
            let j = by_feature[start].0;
            let end = start
                + by_feature[start..]
                    .iter()
                    .take_while(|e| e.0 == j)
                    .count();
            let entries: Vec<(u32, f64)> =
                by_feature[start..end].iter().map(|e| (e.1, e.2)).collect();
            start = end;
            let constant =
                entries.len() == n && entries.iter().all(|e| e.1 == entries[0].1);
            if constant {
                continue;
            }
            let nf = n as f64;
            let mean = entries.iter().map(|e| e.1).sum::<f64>() / nf;
            let zeros = (n - entries.len()) as f64;
            let ss = entries.iter().map(|e| (e.1 - mean).powi(2)).sum::<f64>() + zeros * mean * mean;
            let var = ss / nf;
            if var <= 0.0 {
                continue;
            }
            let scale = var.sqrt();
            let mean_sq = ss / (scale * scale) / nf;
            columns.push(StdColumn {
                feature: j,
                mean,
                scale,
                mean_sq,
                entries,
            });
        }
        LogisticProblem {
            n,
            n_features: data.n_features(),
            y,
            columns,
        }
    }

    /// Number of non-constant (optimized) columns.
    pub fn n_active(&self) -> usize {
        self.columns.len()
    }

    /// Feature index of each optimized column.
    pub fn active_features(&self) -> Vec<u32> {
        self.columns.iter().map(|c| c.feature).collect()
    }

    /// Standardized value of column `c` for sample `i`.
    pub fn standardized(&self, c: usize, i: usize) -> f64 {
        let col = &self.columns[c];
        let raw = match col.entries.binary_search_by_key(&(i as u32), |e| e.0) {
            Ok(p) => col.entries[p].1,
            Err(_) => 0.0,
        };
        (raw - col.mean) / col.scale
    }

    fn linear_predictor(&self, w: &[f64], b: f64) -> Vec<f64> {
        let mut eta = vec![b; self.n];
        for (col, &wc) in self.columns.iter().zip(w) {
            if wc != 0.0 {
                self.add_column(&mut eta, col, wc);
            }
        }
        eta
    }

    fn add_column(&self, eta: &mut [f64], col: &StdColumn, delta: f64) {
        let shift = -delta * col.mean / col.scale;
        eta.iter_mut().for_each(|e| *e += shift);
        let step = delta / col.scale;
        for &(i, v) in &col.entries {
            eta[i as usize] += step * v;
        }
    }

    fn loss_from_eta(&self, eta: &[f64]) -> f64 {
        eta.iter()
            .zip(&self.y)
            .map(|(&e, &y)| softplus(e) - y * e)
            .sum::<f64>()
            / self.n as f64
    }

    /// Mean logistic loss at standardized weights `w` and intercept `b`.
    pub fn loss(&self, w: &[f64], b: f64) -> f64 {
        self.loss_from_eta(&self.linear_predictor(w, b))
    }

    pub fn objective(&self, w: &[f64], b: f64, lambda: f64) -> f64 {
        self.loss(w, b) + lambda * w.iter().map(|x| x.abs()).sum::<f64>()
    }

    /// d loss / d w_c given residuals `p_i - y_i` and their sum; the same
    /// expression drives every coordinate update.
    fn coordinate_gradient(&self, c: usize, residuals: &[f64], residual_sum: f64) -> f64 {
        let col = &self.columns[c];
        let dot: f64 = col
            .entries
            .iter()
            .map(|&(i, v)| residuals[i as usize] * v)
            .sum();
        (dot - col.mean * residual_sum) / (col.scale * self.n as f64)
    }

    fn residuals(&self, eta: &[f64]) -> (Vec<f64>, f64) {
        let r: Vec<f64> = eta
            .iter()
            .zip(&self.y)
            .map(|(&e, &y)| sigmoid(e) - y)
            .collect();
        let sum = r.iter().sum();
        (r, sum)
    }

    /// Gradient of the mean loss: one entry per active column, then the intercept.
    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let eta = self.linear_predictor(w, b);
        let (r, rsum) = self.residuals(&eta);
        let g = (0..self.columns.len())
            .map(|c| self.coordinate_gradient(c, &r, rsum))
            .collect();
        (g, rsum / self.n as f64)
    }

    fn solve(
        &self,
        params: &LinearParams,
        mut w: Vec<f64>,
        mut b: f64,
    ) -> (Vec<f64>, f64, Vec<f64>, usize, bool) {
        let lambda = params.lambda;
        let mut eta = self.linear_predictor(&w, b);
        let (mut r, mut rsum) = self.residuals(&eta);
        let penalty = |w: &[f64]| lambda * w.iter().map(|x| x.abs()).sum::<f64>();
        let mut trace = vec![self.loss_from_eta(&eta) + penalty(&w)];
        let mut sweeps = 0;
        let mut converged = false;
        let mut full = true;

        while sweeps < params.max_iters {
            let mut max_delta = 0.0f64;

            let db = -4.0 * rsum / self.n as f64;
            if db != 0.0 {
                b += db;
                eta.iter_mut().for_each(|e| *e += db);
                (r, rsum) = self.residuals(&eta);
            }
            max_delta = max_delta.max(db.abs());

            for c in 0..self.columns.len() {
                if !full && w[c] == 0.0 {
                    continue;
                }
                let col = &self.columns[c];
                let curvature = col.mean_sq / 4.0;
                let g = self.coordinate_gradient(c, &r, rsum);
                let updated = soft_threshold(w[c] - g / curvature, lambda / curvature);
                let delta = updated - w[c];
                if delta != 0.0 {
                    w[c] = updated;
                    self.add_column(&mut eta, col, delta);
                    (r, rsum) = self.residuals(&eta);
                }
                max_delta = max_delta.max(delta.abs());
            }
            sweeps += 1;
            trace.push(self.loss_from_eta(&eta) + penalty(&w));

            if max_delta < params.tolerance {
                if full {
                    converged = true;
                    break;
                }
                full = true;
            } else {
                full = false;
            }
        }
        (w, b, trace, sweeps, converged)
    }

    fn to_model(&self, w: &[f64], b: f64, lambda: f64) -> LinearModel {
        let mut weights = vec![0.0; self.n_features];
        let mut intercept = b;
        for (col, &wc) in self.columns.iter().zip(w) {
            if wc != 0.0 {
                weights[col.feature as usize] = wc / col.scale;
                intercept -= wc * col.mean / col.scale;
            }
        }
        LinearModel {
            weights,
            intercept,
            lambda,
        }
    }

    fn standardized_weights(&self, model: &LinearModel) -> (Vec<f64>, f64) {
        let mut b = model.intercept;
        let w = self
            .columns
            .iter()
            .map(|col| {
                let wo = model.weights[col.feature as usize];
                b += wo * col.mean;
                wo * col.scale
            })
            .collect();
        (w, b)
    }
}

fn validate(data: &TrainingSet<'_>, params: &LinearParams) -> Result<()> {
    data.require_two_classes()?;
    if !(params.lambda >= 0.0) || !params.lambda.is_finite() {
        return Err(Error::InvalidParameter("lambda must be finite and >= 0".into()));
    }
    if !(params.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    Ok(())
}

fn log_odds(data: &TrainingSet<'_>) -> f64 {
    let (sus, res) = data.class_counts();
    (res as f64 / sus as f64).ln()
}

pub fn fit_l1_linear_on(data: &TrainingSet<'_>, params: &LinearParams) -> Result<LinearFit> {
    validate(data, params)?;
    let problem = LogisticProblem::new(data);
    let (w, b, objective_trace, sweeps, converged) =
        problem.solve(params, vec![0.0; problem.n_active()], log_odds(data));
    Ok(LinearFit {
        model: problem.to_model(&w, b, params.lambda),
        objective_trace,
        sweeps,
        converged,
    })
}

/// Fits on every labeled row of `matrix`.
pub fn fit_l1_linear(
    matrix: &FeatureMatrix,
    lambda: f64,
    max_iters: usize,
    tolerance: f64,
) -> Result<LinearModel> {
    let params = LinearParams {
        lambda,
        max_iters,
        tolerance,
    };
    fit_l1_linear_on(&TrainingSet::labeled(matrix), &params).map(|f| f.model)
}

/// Solves for each lambda, warm-starting from the next larger one. Results
/// come back in the order of `lambdas`.
pub fn fit_l1_path(
    data: &TrainingSet<'_>,
    lambdas: &[f64],
    max_iters: usize,
    tolerance: f64,
) -> Result<Vec<LinearFit>> {
    let base = LinearParams {
        lambda: 0.0,
        max_iters,
        tolerance,
    };
    for &l in lambdas {
        validate(data, &LinearParams { lambda: l, ..base })?;
    }
    let problem = LogisticProblem::new(data);
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut w = vec![0.0; problem.n_active()];
    let mut b = log_odds(data);
    let mut fits: Vec<Option<LinearFit>> = vec![None; lambdas.len()];
    for i in order {
        let params = LinearParams {
            lambda: lambdas[i],
            ..base
        };
        let (w_new, b_new, objective_trace, sweeps, converged) = problem.solve(&params, w, b);
        fits[i] = Some(LinearFit {
            model: problem.to_model(&w_new, b_new, lambdas[i]),
            objective_trace,
            sweeps,
            converged,
        });
        w = w_new;
        b = b_new;
    }
    Ok(fits.into_iter().map(|f| f.expect("every lambda solved")).collect())
}

/// Penalized objective of `model` on `data`, with the penalty measured on
/// standardized weights exactly as during training.
pub fn l1_objective(model: &LinearModel, data: &TrainingSet<'_>) -> f64 {
    let problem = LogisticProblem::new(data);
    let (w, b) = problem.standardized_weights(model);
    problem.objective(&w, b, model.lambda)
}
