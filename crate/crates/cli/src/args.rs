use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "amrkit", version, about = "k-mer based resistance phenotype prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled corpus with a planted marker k-mer
    Synth(SynthArgs),
    /// Count k-mers per isolate and write occurrence histograms
    Count(CountArgs),
    /// Build a sparse k-mer feature matrix
    Matrix(MatrixArgs),
    /// Fit a classifier on a matrix
    Train(TrainArgs),
    /// Holdout or cross-dataset evaluation report
    Eval(EvalArgs),
    /// Accuracy over subsamples of increasing size
    LearningCurve(CurveArgs),
    /// Rank annotated regions by forest importance
    Regions(RegionsArgs),
    /// Region rank stability across subsamples
    Stability(StabilityArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Count(_) => "count",
            Command::Matrix(_) => "matrix",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::LearningCurve(_) => "learning-curve",
            Command::Regions(_) => "regions",
            Command::Stability(_) => "stability",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Synth(a) => &a.common,
            Command::Count(a) => &a.common,
            Command::Matrix(a) => &a.common,
            Command::Train(a) => &a.common,
            Command::Eval(a) => &a.common,
            Command::LearningCurve(a) => &a.common,
            Command::Regions(a) => &a.common,
            Command::Stability(a) => &a.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory receiving every output (created when missing)
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Root seed; all randomness derives from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads, 0 for all cores; outputs do not depend on it
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// key=value file supplying flag values; explicit flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// FASTA files, one isolate each (comma separated)
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set)]
    pub fasta: Vec<PathBuf>,
    /// Directory scanned for *.fa, *.fasta, *.fna and *.fas files
    #[arg(long)]
    pub fasta_dir: Option<PathBuf>,
    /// isolate_id<TAB>SUS|RES file
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KmerArgs {
    /// k-mer length (1..=32)
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Fold each k-mer with its reverse complement
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub canonical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Forest,
    Adaboost,
    Lasso,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    #[arg(long, value_enum, default_value_t = Algorithm::Forest)]
    pub algorithm: Algorithm,
    /// Forest size
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    /// Features examined per split: sqrt, all or a count
    #[arg(long, default_value = "sqrt")]
    pub max_features: String,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub bootstrap: bool,
    /// Maximum tree depth (unlimited when absent)
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    /// AdaBoost rounds
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    /// L1 penalty of the lasso learner
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Coordinate-descent sweep cap
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Coordinate-descent convergence threshold
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub stratified: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 200)]
    pub n_isolates: usize,
    #[arg(long, default_value_t = 1)]
    pub n_contigs: usize,
    #[arg(long, default_value_t = 5000)]
    pub contig_length: usize,
    #[arg(long, default_value_t = 0.5)]
    pub resistant_fraction: f64,
    /// Planted k-mer; its length fixes k for the annotation
    #[arg(long, default_value = "GATCCTAGGC")]
    pub marker: String,
    #[arg(long, default_value_t = 0.95)]
    pub presence_res: f64,
    #[arg(long, default_value_t = 0.05)]
    pub presence_sus: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gc: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CountArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub kmer: KmerArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub kmer: KmerArgs,
    /// Store presence/absence instead of counts
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub binarize: bool,
    /// Project onto this vocabulary file instead of building one
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Fit on the training part of the seeded split only, so that `eval
    /// --model` with the same seed scores unseen rows
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub holdout: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: PathBuf,
    /// Score this model instead of fitting one
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Evaluate on this matrix (same vocabulary) instead of a holdout split
    #[arg(long)]
    pub test_matrix: Option<PathBuf>,
    /// kmer<TAB>region file for the top_regions field (forest only)
    #[arg(long)]
    pub annotation: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
    /// Also run a learning curve over these sizes
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    /// Subsample, then split the subsample
    Subsample,
    /// One held-out test set; subsample training rows from the rest
    Fixed,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: PathBuf,
    /// Ascending subsample sizes
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set, required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, value_enum, default_value_t = Protocol::Subsample)]
    pub protocol: Protocol,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct RegionsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Forest model file
    #[arg(long)]
    pub model: PathBuf,
    /// Matrix supplying the vocabulary the model was trained on
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub annotation: PathBuf,
    /// Number of regions to report, 0 for all
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub annotation: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set, required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[command(flatten)]
    pub learner: LearnerArgs,
}
