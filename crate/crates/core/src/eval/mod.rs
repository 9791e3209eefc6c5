//! Holdout accuracy, ROC analysis, learning curves and region rankings.

mod curve;
mod regions;
mod report;
mod roc;
mod split;

pub use curve::{
    cell_seeds, holdout_accuracy, learning_curve, learning_curve_with, model_accuracy,
    rank_stability, CurveProtocol, LearningCurve, StabilityRow, StabilityTable,
};
pub use regions::{
    load_region_annotation, rank_importances, rank_regions, RegionAnnotation, RegionRanking,
    RegionScore, UNANNOTATED,
};
pub use report::{cross_dataset_eval, evaluate_holdout, evaluate_model, CurvePoint, EvalReport};
pub use roc::{accuracy, auc_pairwise, roc_curve, RocCurve};
pub use split::{split_rows, stratified_subsample, train_test_split, SplitSpec};
