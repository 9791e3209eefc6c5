//! Holdout and cross-dataset evaluation reports.

use serde::Serialize;

use super::curve::LearningCurve;
use super::regions::{rank_importances, RegionAnnotation, RegionScore};
use super::roc::{accuracy, roc_curve};
use super::split::{train_test_split, SplitSpec};
use crate::error::{Error, Result};
use crate::learn::{classify, Learner, Model, TrainingSet};
use crate::matrix::FeatureMatrix;
use crate::seqio::Phenotype;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub size: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Serialized with a fixed field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub algorithm: String,
    pub k: usize,
    pub canonical: bool,
    pub n_isolates: usize,
    pub n_features: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    /// Absent when the evaluated rows contain a single class.
    pub auc: Option<f64>,
    pub roc_points: Vec<(f64, f64)>,
    pub curve: Vec<CurvePoint>,
    pub top_regions: Vec<RegionScore>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn roc_tsv(&self) -> String {
        let mut out = String::from("fpr\ttpr\n");
        for (x, y) in &self.roc_points {
            out.push_str(&format!("{x}\t{y}\n"));
        }
        out
    }

    pub fn with_curve(mut self, curve: &LearningCurve) -> Self {
        self.curve = (0..curve.sizes.len())
            .map(|i| CurvePoint {
                size: curve.sizes[i],
                mean_accuracy: curve.mean_accuracy[i],
                std_accuracy: curve.std_accuracy[i],
            })
            .collect();
        self
    }

    /// Adds the `top_n` regions by forest importance; other models have none.
    pub fn with_regions(
        mut self,
        model: &Model,
        matrix: &FeatureMatrix,
        annotation: &RegionAnnotation,
        top_n: usize,
    ) -> Result<Self> {
        if let Model::Forest(f) = model {
            self.top_regions =
                rank_importances(&f.importances, matrix.vocabulary(), annotation, Some(top_n))?
                    .entries;
        }
        Ok(self)
    }
}

/// Scores `model` on the labeled rows among `rows` of `data`.
pub fn evaluate_model(
    model: &Model,
    data: &FeatureMatrix,
    rows: &[usize],
    n_train: usize,
    seed: u64,
) -> Result<EvalReport> {
    if model.n_features() != data.n_features() {
        return Err(Error::FeatureCountMismatch {
            model: model.n_features(),
            data: data.n_features(),
        });
    }
    let mut scores = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for &r in rows {
        if let Some(label) = data.label(r) {
            scores.push(model.predict_proba(data.row(r))?);
            labels.push(label);
        }
    }
    if labels.is_empty() {
        return Err(Error::NoLabeledSamples);
    }
    let predictions: Vec<Phenotype> = scores.iter().map(|&p| classify(p)).collect();
    let (auc, roc_points) = match roc_curve(&scores, &labels) {
        Ok(roc) => (Some(roc.auc), roc.points),
        Err(Error::SingleClassEval) => (None, Vec::new()),
        Err(e) => return Err(e),
    };
    let spec = data.vocabulary().spec;
    Ok(EvalReport {
        algorithm: model.kind().to_string(),
        k: spec.k(),
        canonical: spec.canonical(),
        n_isolates: data.n_rows(),
        n_features: data.n_features(),
        seed,
        n_train,
        n_test: labels.len(),
        accuracy: accuracy(&predictions, &labels)?,
        auc,
        roc_points,
        curve: Vec::new(),
        top_regions: Vec::new(),
    })
}

/// Splits `matrix`, fits `learner` on the training rows and evaluates on the
/// test rows. Returns the fitted model with the report.
pub fn evaluate_holdout(
    matrix: &FeatureMatrix,
    split: &SplitSpec,
    learner: &Learner,
) -> Result<(Model, EvalReport)> {
    let (train, test) = train_test_split(matrix, split)?;
    let model = learner.fit(&TrainingSet::from_rows(matrix, &train))?;
    let report = evaluate_model(&model, matrix, &test, train.len(), split.seed)?;
    Ok((model, report))
}

/// Fits on every labeled row of `train` and evaluates on every labeled row of
/// `test`. Both matrices must share one vocabulary.
pub fn cross_dataset_eval(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    learner: &Learner,
    seed: u64,
) -> Result<(Model, EvalReport)> {
    if train.vocabulary() != test.vocabulary() {
        return Err(Error::VocabularyMismatch);
    }
    let data = TrainingSet::labeled(train);
    let model = learner.with_seed(seed).fit(&data)?;
    let rows: Vec<usize> = (0..test.n_rows()).collect();
    let report = evaluate_model(&model, test, &rows, data.len(), seed)?;
    Ok((model, report))
}
