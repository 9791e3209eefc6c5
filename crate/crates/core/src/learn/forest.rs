//! Random forest of CART trees with mean-decrease-impurity importances.
//!
//! Tree `t` draws all of its randomness (bootstrap and per-node feature
//! sampling) from its own stream seeded by `(seed, t)`, so trees can be
//! trained in any order on any number of threads with identical results.

use rand::Rng as _;
use rayon::prelude::*;

use super::tree::{grow_tree, ColumnIndex, SplitWorkspace};
pub use super::tree::MaxFeatures;
use super::{check_row, DecisionTree, TrainingSet, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, SparseRow};
use crate::seed::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_features: self.max_features,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
        }
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        if let MaxFeatures::Fixed(m) = self.max_features {
            if m == 0 || m > n_features {
                return Err(Error::InvalidParameter(format!(
                    "max_features={m} must be in 1..={n_features}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub params: ForestParams,
    /// Non-negative, summing to 1 (all zero when no tree split).
    pub importances: Vec<f64>,
}

/// Multiplicity of each of `n` samples in a bootstrap resample of size `n`.
pub fn bootstrap_counts(n: usize, rng: &mut Rng) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts
}

/// Fits a forest on every labeled row of `matrix`.
pub fn fit_forest(matrix: &FeatureMatrix, params: &ForestParams) -> Result<ForestModel> {
    fit_forest_on(&TrainingSet::labeled(matrix), params)
}

pub fn fit_forest_on(data: &TrainingSet<'_>, params: &ForestParams) -> Result<ForestModel> {
    data.require_two_classes()?;
    let n_features = data.n_features();
    params.validate(n_features)?;
    let tree_params = params.tree_params();
    let n = data.len();
    let columns = ColumnIndex::build(data);

    let grown: Vec<(DecisionTree, Vec<(u32, f64)>)> = (0..params.n_trees)
        .into_par_iter()
        .map_init(
            || SplitWorkspace::new(data),
            |ws, t| {
                let mut rng = rng_from_seed(derive_seed(params.seed, &[t as u64]));
                let samples: Vec<(u32, u32)> = if params.bootstrap {
                    bootstrap_counts(n, &mut rng)
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, c)| c > 0)
                        .map(|(s, c)| (s as u32, c))
                        .collect()
                } else {
                    (0..n as u32).map(|s| (s, 1)).collect()
                };
                grow_tree(data, &columns, samples, &tree_params, &mut rng, ws)
            },
        )
        .collect();

    let mut importances = vec![0.0f64; n_features];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, contributions) in grown {
        let total: f64 = contributions.iter().map(|c| c.1).sum();
        if total > 0.0 {
            for (j, c) in contributions {
                importances[j as usize] += c / total;
            }
        }
        trees.push(tree);
    }
    let sum: f64 = importances.iter().sum();
    if sum > 0.0 {
        importances.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(ForestModel {
        trees,
        n_features,
        params: *params,
        importances,
    })
}

impl ForestModel {
    /// Mean over trees of the leaf RES fraction.
    pub fn predict_proba(&self, row: SparseRow<'_>) -> Result<f64> {
        check_row(row, self.n_features)?;
        let sum: f64 = self.trees.iter().map(|t| t.predict_proba(row)).sum();
        Ok(sum / self.trees.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{classify, fit_tree};
    use crate::seqio::Phenotype::{self, Resistant as R, Susceptible as S};
    use crate::learn::tree::tests::dense_matrix;

    #[test]
    fn separable_feature_gets_all_importance() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40u32 {
            let res = i % 2 == 0;
            x.push(vec![if res { 1 } else { 0 }]);
            y.push(if res { R } else { S });
        }
        let m = dense_matrix(&x, &y);
        let model = fit_forest(&m, &ForestParams::default()).unwrap();
        assert_eq!(model.trees.len(), 100);
        assert_eq!(model.importances, vec![1.0]);
    }

    #[test]
    fn informative_feature_dominates_importance() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..60u32 {
            let res = i % 3 != 0;
            // feature 2 separates; 0 and 1 are noise
            x.push(vec![(i / 7) % 3, (i / 2) % 2, if res { 2 } else { 0 }]);
            y.push(if res { R } else { S });
        }
        let m = dense_matrix(&x, &y);
        let params = ForestParams {
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let model = fit_forest(&m, &params).unwrap();
        assert!(model.importances[2] > 0.99, "{:?}", model.importances);
        assert!((model.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_single_tree_equivalence() {
        let x: Vec<Vec<u32>> = (0..30u32)
            .map(|i| vec![(i * 7) % 5, (i * 3) % 4, i % 2, (i * 11) % 7])
            .collect();
        let y: Vec<Phenotype> = (0..30).map(|i| if (i * 13) % 5 < 2 { R } else { S }).collect();
        let m = dense_matrix(&x, &y);
        let params = ForestParams {
            n_trees: 10,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(fit_forest(&m, &params).unwrap(), fit_forest(&m, &params).unwrap());

        let single = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            seed: 5,
            ..Default::default()
        };
        let forest = fit_forest(&m, &single).unwrap();
        let mut rng = rng_from_seed(123);
        let tree = fit_tree(&TrainingSet::labeled(&m), &single.tree_params(), &mut rng).unwrap();
        assert_eq!(forest.trees[0], tree);
        for i in 0..m.n_rows() {
            assert_eq!(classify(forest.predict_proba(m.row(i)).unwrap()), y[i]);
        }
    }

    #[test]
    fn bootstrap_draws_exactly_n() {
        let mut rng = rng_from_seed(3);
        for n in [1, 7, 100] {
            assert_eq!(bootstrap_counts(n, &mut rng).iter().sum::<u32>() as usize, n);
        }
    }

    #[test]
    fn errors() {
        let m = dense_matrix(&[vec![0], vec![1]], &[S, S]);
        assert!(matches!(
            fit_forest(&m, &ForestParams::default()),
            Err(Error::SingleClassTraining)
        ));
        let m = dense_matrix(&[vec![0], vec![1]], &[S, R]);
        let bad = ForestParams {
            max_features: MaxFeatures::Fixed(2),
            ..Default::default()
        };
        assert!(matches!(fit_forest(&m, &bad), Err(Error::InvalidParameter(_))));
        let model = fit_forest(&m, &ForestParams::default()).unwrap();
        let other = dense_matrix(&[vec![0, 1]], &[S]);
        assert!(matches!(
            model.predict_proba(other.row(0)),
            Err(Error::IndexOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn tie_rule_resolves_to_resistant() {
        use crate::learn::TreeNode;
        let leaf = |sus, res| DecisionTree::from_nodes(vec![TreeNode::Leaf { sus, res }]).unwrap();
        let model = ForestModel {
            trees: vec![leaf(0, 3), leaf(2, 0)],
            n_features: 1,
            params: ForestParams::default(),
            importances: vec![0.0],
        };
        let m = dense_matrix(&[vec![0]], &[S]);
        let p = model.predict_proba(m.row(0)).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(classify(p), R);
        let all_res = ForestModel {
            trees: vec![leaf(0, 3), leaf(0, 1)],
            ..model.clone()
        };
        assert_eq!(all_res.predict_proba(m.row(0)).unwrap(), 1.0);
        let all_sus = ForestModel {
            trees: vec![leaf(4, 0)],
            ..model
        };
        assert_eq!(all_sus.predict_proba(m.row(0)).unwrap(), 0.0);
    }
}
