//! From-scratch binary classifiers over sparse k-mer matrices.

mod boost;
mod forest;
mod linear;
mod model_io;
pub(crate) mod tree;

pub use boost::{fit_adaboost, fit_adaboost_on, fit_adaboost_traced, BoostModel, Stump, DEFAULT_ROUNDS};
pub use forest::{bootstrap_counts, fit_forest, fit_forest_on, ForestModel, ForestParams, MaxFeatures};
pub use linear::{
    fit_l1_linear, fit_l1_linear_on, fit_l1_path, l1_objective, LinearFit, LinearModel,
    LinearParams, LogisticProblem,
};
pub use model_io::{load_model, save_model, Model};
pub use tree::{best_split, fit_tree, gini_impurity, DecisionTree, Split, TreeNode, TreeParams};

use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, SparseRow};
use crate::seqio::Phenotype;

/// Labeled rows of a matrix selected for training.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    matrix: &'a FeatureMatrix,
    rows: Vec<usize>,
    resistant: Vec<bool>,
}

impl<'a> TrainingSet<'a> {
    /// All labeled rows of `matrix`.
    pub fn labeled(matrix: &'a FeatureMatrix) -> Self {
        Self::from_rows(matrix, &matrix.labeled_rows())
    }

    /// The given rows; unlabeled rows are skipped.
    pub fn from_rows(matrix: &'a FeatureMatrix, rows: &[usize]) -> Self {
        let mut kept = Vec::with_capacity(rows.len());
        let mut resistant = Vec::with_capacity(rows.len());
        for &r in rows {
            if let Some(label) = matrix.label(r) {
                kept.push(r);
                resistant.push(label == Phenotype::Resistant);
            }
        }
        TrainingSet {
            matrix,
            rows: kept,
            resistant,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.n_features()
    }

    pub fn matrix(&self) -> &'a FeatureMatrix {
        self.matrix
    }

    /// Matrix row indices of the samples, in sample order.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Sparse features of sample `s` (a position in this set, not a matrix row).
    pub fn sample(&self, s: usize) -> SparseRow<'a> {
        self.matrix.row(self.rows[s])
    }

    pub fn is_resistant(&self, s: usize) -> bool {
        self.resistant[s]
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let res = self.resistant.iter().filter(|&&r| r).count();
        (self.len() - res, res)
    }

    /// Both classes must be present.
    pub(crate) fn require_two_classes(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::NoLabeledSamples);
        }
        let (sus, res) = self.class_counts();
        if sus == 0 || res == 0 {
            return Err(Error::SingleClassTraining);
        }
        Ok(())
    }
}

/// A learning algorithm with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Learner {
    Forest(ForestParams),
    AdaBoost { rounds: usize },
    Lasso(LinearParams),
}

impl Learner {
    pub fn name(&self) -> &'static str {
        match self {
            Learner::Forest(_) => "forest",
            Learner::AdaBoost { .. } => "adaboost",
            Learner::Lasso(_) => "lasso",
        }
    }

    /// The same learner with its random seed replaced (only the forest uses one).
    pub fn with_seed(&self, seed: u64) -> Learner {
        match *self {
            Learner::Forest(p) => Learner::Forest(ForestParams { seed, ..p }),
            other => other,
        }
    }

    pub fn fit(&self, data: &TrainingSet<'_>) -> Result<Model> {
        Ok(match self {
            Learner::Forest(p) => Model::Forest(fit_forest_on(data, p)?),
            Learner::AdaBoost { rounds } => Model::Boost(fit_adaboost_on(data, *rounds)?),
            Learner::Lasso(p) => Model::Linear(fit_l1_linear_on(data, p)?.model),
        })
    }
}

/// Fails when `row` references a column beyond `n_features`.
pub(crate) fn check_row(row: SparseRow<'_>, n_features: usize) -> Result<()> {
    match row.indices.last() {
        Some(&j) if j as usize >= n_features => Err(Error::IndexOutOfRange {
            index: j as usize,
            n_features,
        }),
        _ => Ok(()),
    }
}

/// Classification rule shared by every model: RES iff the probability is at
/// least 0.5, so an exact tie resolves to RES.
pub fn classify(proba: f64) -> Phenotype {
    if proba >= 0.5 {
        Phenotype::Resistant
    } else {
        Phenotype::Susceptible
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
