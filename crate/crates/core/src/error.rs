use std::io;

use thiserror::Error;

/// Every failure the pipeline can report.
///
/// Each variant has a stable machine-readable [`Error::code`] that the CLI
/// prints on failure.
#[derive(Error, Debug)]
pub enum Error {
    #[error("malformed FASTA at byte {offset} (record {record:?}): {reason}")]
    MalformedFasta {
        offset: usize,
        record: Option<String>,
        reason: String,
    },
    #[error("malformed label table at line {line}: {reason}")]
    MalformedLabels { line: usize, reason: String },
    #[error("conflicting labels for isolate {0:?}")]
    ConflictingLabel(String),
    #[error("unknown phenotype {0:?} (expected SUS or RES)")]
    UnknownPhenotype(String),
    #[error("dataset contains no isolates")]
    EmptyDataset,
    #[error("duplicate isolate id {0:?}")]
    DuplicateIsolateId(String),
    #[error("invalid isolate {id:?}: {reason}")]
    InvalidIsolate { id: String, reason: String },
    #[error("ambiguous base {base:?} at position {position}")]
    AmbiguousBase { base: char, position: usize },
    #[error("k={0} exceeds the maximum of 32")]
    KTooLarge(usize),
    #[error("isolate has no A/C/G/T bases")]
    NoValidBases,
    #[error("k-mer tables were built with different k-mer specs")]
    MixedSpecs,
    #[error("k-mer count {0} does not fit in 32 bits")]
    CountOverflow(u64),
    #[error("corrupt vocabulary file: {0}")]
    CorruptVocabularyFile(String),
    #[error("corrupt matrix file: {0}")]
    CorruptMatrixFile(String),
    #[error("corrupt model file: {0}")]
    CorruptModelFile(String),
    #[error("impurity of an empty node is undefined")]
    EmptyNode,
    #[error("no labeled samples to train on")]
    NoLabeledSamples,
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("no weak learner beats chance in the first round")]
    DegenerateWeakLearner,
    #[error("feature index {index} out of range for {n_features} features")]
    IndexOutOfRange { index: usize, n_features: usize },
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("evaluation labels contain a single class")]
    SingleClassEval,
    #[error("subsample size {size} exceeds {available} labeled rows")]
    SizeExceedsDataset { size: usize, available: usize },
    #[error("k-mer {kmer:?} has length {found}, expected {expected}")]
    InconsistentK {
        kmer: String,
        found: usize,
        expected: usize,
    },
    #[error("model has {model} features but the data has {data}")]
    FeatureCountMismatch { model: usize, data: usize },
    #[error("train and test vocabularies differ")]
    VocabularyMismatch,
    #[error("marker of length {marker} is longer than contigs of length {contig}")]
    MarkerLongerThanContig { marker: usize, contig: usize },
    #[error("malformed annotation at line {line}: {reason}")]
    MalformedAnnotation { line: usize, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    /// Stable identifier used in machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedFasta { .. } => "MalformedFasta",
            Error::MalformedLabels { .. } => "MalformedLabels",
            Error::ConflictingLabel(_) => "ConflictingLabel",
            Error::UnknownPhenotype(_) => "UnknownPhenotype",
            Error::EmptyDataset => "EmptyDataset",
            Error::DuplicateIsolateId(_) => "DuplicateIsolateId",
            Error::InvalidIsolate { .. } => "InvalidIsolate",
            Error::AmbiguousBase { .. } => "AmbiguousBase",
            Error::KTooLarge(_) => "KTooLarge",
            Error::NoValidBases => "NoValidBases",
            Error::MixedSpecs => "MixedSpecs",
            Error::CountOverflow(_) => "CountOverflow",
            Error::CorruptVocabularyFile(_) => "CorruptVocabularyFile",
            Error::CorruptMatrixFile(_) => "CorruptMatrixFile",
            Error::CorruptModelFile(_) => "CorruptModelFile",
            Error::EmptyNode => "EmptyNode",
            Error::NoLabeledSamples => "NoLabeledSamples",
            Error::SingleClassTraining => "SingleClassTraining",
            Error::DegenerateWeakLearner => "DegenerateWeakLearner",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::TooFewSamples(_) => "TooFewSamples",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::SingleClassEval => "SingleClassEval",
            Error::SizeExceedsDataset { .. } => "SizeExceedsDataset",
            Error::InconsistentK { .. } => "InconsistentK",
            Error::FeatureCountMismatch { .. } => "FeatureCountMismatch",
            Error::VocabularyMismatch => "VocabularyMismatch",
            Error::MarkerLongerThanContig { .. } => "MarkerLongerThanContig",
            Error::MalformedAnnotation { .. } => "MalformedAnnotation",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
