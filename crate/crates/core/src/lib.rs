//! k-mer based antimicrobial-resistance phenotype prediction.
//!
//! Assembled contigs are turned into sparse k-mer count matrices, classified
//! with a random forest, AdaBoost or L1-penalized logistic regression, and
//! evaluated with holdout accuracy, ROC curves, learning curves and region
//! importance rankings. [`synth`] produces labeled corpora with a planted
//! marker for end-to-end checks.

pub mod error;
pub mod eval;
pub mod kmer;
pub mod learn;
pub mod matrix;
pub mod seed;
pub mod seqio;
pub mod synth;

pub use error::{Error, Result};
