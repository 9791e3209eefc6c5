//! Repeated-holdout experiments over subsamples of increasing size.
//!
//! Cell `(size, repeat)` derives all of its randomness from
//! `derive_seed(seed, [size, repeat])`: stream 0 draws the subsample, stream
//! 1 the holdout split and stream 2 seeds the learner. Cells run in parallel
//! and are collected by index.

use rayon::prelude::*;
use serde::Serialize;

use super::regions::{rank_importances, RegionAnnotation};
use super::split::{split_rows, stratified_subsample, SplitSpec};
use crate::error::{Error, Result};
use crate::learn::{classify, Learner, Model, TrainingSet};
use crate::matrix::FeatureMatrix;
use crate::seed::derive_seed;

/// Which rows a learning-curve cell is tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveProtocol {
    /// Subsample `size` rows, then split the subsample.
    #[default]
    SubsampleThenSplit,
    /// Hold out one test set from all rows once; subsample `size` training
    /// rows from the remainder.
    FixedTestSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningCurve {
    pub sizes: Vec<usize>,
    pub mean_accuracy: Vec<f64>,
    /// Sample standard deviation (0 with a single repeat).
    pub std_accuracy: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    /// Per size, the accuracy of every repeat.
    pub accuracies: Vec<Vec<f64>>,
}

impl LearningCurve {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("size\tmean_accuracy\tstd_accuracy\n");
        for i in 0..self.sizes.len() {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                self.sizes[i], self.mean_accuracy[i], self.std_accuracy[i]
            ));
        }
        out
    }
}

/// Seeds of one cell: (subsample, split, learner).
pub fn cell_seeds(seed: u64, size: usize, repeat: usize) -> (u64, u64, u64) {
    let cell = derive_seed(seed, &[size as u64, repeat as u64]);
    (
        derive_seed(cell, &[0]),
        derive_seed(cell, &[1]),
        derive_seed(cell, &[2]),
    )
}

/// Test-set accuracy of `model` on `rows` (labeled rows only).
pub fn model_accuracy(model: &Model, matrix: &FeatureMatrix, rows: &[usize]) -> Result<f64> {
    if model.n_features() != matrix.n_features() {
        return Err(Error::FeatureCountMismatch {
            model: model.n_features(),
            data: matrix.n_features(),
        });
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for &r in rows {
        if let Some(label) = matrix.label(r) {
            total += 1;
            if classify(model.predict_proba(matrix.row(r))?) == label {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::NoLabeledSamples);
    }
    Ok(hits as f64 / total as f64)
}

/// Splits `rows`, fits on the training part and returns test accuracy.
pub fn holdout_accuracy(
    matrix: &FeatureMatrix,
    rows: &[usize],
    split: &SplitSpec,
    learner: &Learner,
) -> Result<f64> {
    let (train, test) = split_rows(matrix, rows, split)?;
    let model = learner.fit(&TrainingSet::from_rows(matrix, &train))?;
    model_accuracy(&model, matrix, &test)
}

fn check_sizes(sizes: &[usize], available: usize, repeats: usize) -> Result<()> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "sizes must be non-empty and strictly ascending".into(),
        ));
    }
    if let Some(&size) = sizes.iter().find(|&&s| s > available) {
        return Err(Error::SizeExceedsDataset { size, available });
    }
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[allow(clippy::too_many_arguments)]
pub fn learning_curve_with(
    matrix: &FeatureMatrix,
    sizes: &[usize],
    repeats: usize,
    learner: &Learner,
    seed: u64,
    test_fraction: f64,
    protocol: CurveProtocol,
) -> Result<LearningCurve> {
    let labeled = matrix.labeled_rows();
    let (pool, fixed_test) = match protocol {
        CurveProtocol::SubsampleThenSplit => (labeled, Vec::new()),
        CurveProtocol::FixedTestSet => {
            let split = SplitSpec {
                test_fraction,
                stratified: true,
                seed: derive_seed(seed, &[u64::MAX]),
            };
            split_rows(matrix, &labeled, &split)?
        }
    };
    check_sizes(sizes, pool.len(), repeats)?;

    let cells: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&s| (0..repeats).map(move |r| (s, r)))
        .collect();
    let accs: Vec<f64> = cells
        .par_iter()
        .map(|&(size, repeat)| {
            let (sub_seed, split_seed, fit_seed) = cell_seeds(seed, size, repeat);
            let rows = stratified_subsample(matrix, &pool, size, sub_seed)?;
            let learner = learner.with_seed(fit_seed);
            match protocol {
                CurveProtocol::SubsampleThenSplit => {
                    let split = SplitSpec {
                        test_fraction,
                        stratified: true,
                        seed: split_seed,
                    };
                    holdout_accuracy(matrix, &rows, &split, &learner)
                }
                CurveProtocol::FixedTestSet => {
                    let model = learner.fit(&TrainingSet::from_rows(matrix, &rows))?;
                    model_accuracy(&model, matrix, &fixed_test)
                }
            }
        })
        .collect::<Result<_>>()?;

    let accuracies: Vec<Vec<f64>> = accs.chunks(repeats).map(<[f64]>::to_vec).collect();
    let (mean_accuracy, std_accuracy) = accuracies.iter().map(|a| mean_std(a)).unzip();
    Ok(LearningCurve {
        sizes: sizes.to_vec(),
        mean_accuracy,
        std_accuracy,
        repeats,
        seed,
        accuracies,
    })
}

/// Subsample-then-split learning curve with an 80/20 holdout per cell.
pub fn learning_curve(
    matrix: &FeatureMatrix,
    sizes: &[usize],
    repeats: usize,
    learner: &Learner,
    seed: u64,
) -> Result<LearningCurve> {
    learning_curve_with(
        matrix,
        sizes,
        repeats,
        learner,
        seed,
        0.2,
        CurveProtocol::SubsampleThenSplit,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub size: usize,
    pub region: String,
    pub median_rank: f64,
    pub best_rank: usize,
    /// Rank in each repeat.
    pub ranks: Vec<usize>,
}

/// Per size, one row per region, ordered by median rank, then best rank,
/// then region id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityTable {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub rows: Vec<StabilityRow>,
}

impl StabilityTable {
    pub fn row(&self, size: usize, region: &str) -> Option<&StabilityRow> {
        self.rows.iter().find(|r| r.size == size && r.region == region)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("size\tregion_id\tmedian_rank\tbest_rank\tranks\n");
        for r in &self.rows {
            let ranks: Vec<String> = r.ranks.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.size,
                r.region,
                r.median_rank,
                r.best_rank,
                ranks.join(",")
            ));
        }
        out
    }
}

fn median(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Fits a forest on each stratified subsample (no holdout) and ranks regions
/// by aggregated importance. Only forest learners carry importances.
pub fn rank_stability(
    matrix: &FeatureMatrix,
    sizes: &[usize],
    repeats: usize,
    annotation: &RegionAnnotation,
    learner: &Learner,
    seed: u64,
) -> Result<StabilityTable> {
    if !matches!(learner, Learner::Forest(_)) {
        return Err(Error::InvalidParameter(
            "rank stability needs a forest learner".into(),
        ));
    }
    let labeled = matrix.labeled_rows();
    check_sizes(sizes, labeled.len(), repeats)?;
    let cells: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&s| (0..repeats).map(move |r| (s, r)))
        .collect();
    let rankings = cells
        .par_iter()
        .map(|&(size, repeat)| {
            let (sub_seed, _, fit_seed) = cell_seeds(seed, size, repeat);
            let rows = stratified_subsample(matrix, &labeled, size, sub_seed)?;
            let Model::Forest(model) = learner
                .with_seed(fit_seed)
                .fit(&TrainingSet::from_rows(matrix, &rows))?
            else {
                unreachable!("forest learner yields a forest model")
            };
            rank_importances(&model.importances, matrix.vocabulary(), annotation, None)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (si, &size) in sizes.iter().enumerate() {
        let group = &rankings[si * repeats..(si + 1) * repeats];
        let mut regions: Vec<&str> = group
            .iter()
            .flat_map(|r| r.entries.iter().map(|e| e.region.as_str()))
            .collect();
        regions.sort_unstable();
        regions.dedup();
        let mut size_rows: Vec<StabilityRow> = regions
            .into_iter()
            .map(|region| {
                let ranks: Vec<usize> = group.iter().filter_map(|r| r.rank_of(region)).collect();
                let mut sorted = ranks.clone();
                sorted.sort_unstable();
                StabilityRow {
                    size,
                    region: region.to_string(),
                    median_rank: median(&sorted),
                    best_rank: sorted[0],
                    ranks,
                }
            })
            .collect();
        size_rows.sort_by(|a, b| {
            a.median_rank
                .total_cmp(&b.median_rank)
                .then(a.best_rank.cmp(&b.best_rank))
                .then_with(|| a.region.cmp(&b.region))
        });
        rows.extend(size_rows);
    }
    Ok(StabilityTable {
        sizes: sizes.to_vec(),
        repeats,
        seed,
        rows,
    })
}
