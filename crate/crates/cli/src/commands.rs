use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use amrkit::eval::{
    cross_dataset_eval, evaluate_holdout, evaluate_model, learning_curve, learning_curve_with,
    load_region_annotation, rank_regions, rank_stability, train_test_split, CurveProtocol,
    RegionAnnotation, SplitSpec,
};
use amrkit::kmer::{gc_content, histogram, KmerSpec, KmerVocabulary};
use amrkit::learn::{
    load_model, save_model, ForestParams, Learner, LinearParams, MaxFeatures, Model, TrainingSet,
};
use amrkit::matrix::{
    binarize, build_matrix, build_matrix_with_vocabulary, count_dataset, load_matrix, save_matrix,
    FeatureMatrix,
};
use amrkit::seqio::{assemble_dataset, load_labels, Dataset, Phenotype};
use amrkit::synth::{generate, write_corpus, SynthSpec};
use amrkit::{Error, Result};

use crate::args::*;

const FASTA_EXTENSIONS: [&str; 4] = ["fa", "fasta", "fna", "fas"];

pub fn run(command: &Command) -> Result<()> {
    let out = &command.common().out_dir;
    fs::create_dir_all(out)?;
    match command {
        Command::Synth(a) => synth(a),
        Command::Count(a) => count(a),
        Command::Matrix(a) => matrix(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::LearningCurve(a) => curve(a),
        Command::Regions(a) => regions(a),
        Command::Stability(a) => stability(a),
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n_isolates: a.n_isolates,
        n_contigs_per_isolate: a.n_contigs,
        contig_length: a.contig_length,
        resistant_fraction: a.resistant_fraction,
        marker: a.marker.clone(),
        marker_presence_in_res: a.presence_res,
        marker_presence_in_sus: a.presence_sus,
        background_gc: a.gc,
        seed: a.common.seed,
    };
    let corpus = generate(&spec)?;
    write_corpus(&corpus, &a.common.out_dir)?;
    let c = corpus.dataset.class_counts();
    eprintln!(
        "synth: {} isolates ({} RES, {} SUS) in {}",
        corpus.dataset.isolates.len(),
        c.resistant,
        c.susceptible,
        a.common.out_dir.display()
    );
    Ok(())
}

fn fasta_paths(inputs: &Inputs) -> Result<Vec<PathBuf>> {
    let mut paths = inputs.fasta.clone();
    if let Some(dir) = &inputs.fasta_dir {
        let mut found = Vec::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if path.is_file() && FASTA_EXTENSIONS.contains(&ext) {
                found.push(path);
            }
        }
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(Error::InvalidParameter(
            "no FASTA input (use --fasta or --fasta-dir)".into(),
        ));
    }
    Ok(paths)
}

fn load_dataset(inputs: &Inputs) -> Result<Dataset> {
    let labels = match &inputs.labels {
        Some(p) => load_labels(fs::File::open(p)?)?,
        None => BTreeMap::new(),
    };
    assemble_dataset(&fasta_paths(inputs)?, &labels)
}

fn label_str(label: Option<Phenotype>) -> &'static str {
    label.map_or("NA", Phenotype::as_str)
}

fn count(a: &CountArgs) -> Result<()> {
    let spec = KmerSpec::new(a.kmer.k, a.kmer.canonical)?;
    let dataset = load_dataset(&a.inputs)?;
    let all = count_dataset(&dataset, spec);
    let out = &a.common.out_dir;
    fs::create_dir_all(out.join("counts"))?;
    fs::create_dir_all(out.join("histograms"))?;
    let mut summary = String::from("isolate_id\tlabel\tlength\tgc\tdistinct_kmers\ttotal_kmers\n");
    for (iso, counts) in dataset.isolates.iter().zip(&all) {
        let mut table = String::from("kmer\tcount\n");
        for (code, n) in counts.sorted() {
            table.push_str(&format!("{}\t{n}\n", code.decode(spec.k())));
        }
        fs::write(out.join("counts").join(format!("{}.tsv", iso.isolate_id)), table)?;
        fs::write(
            out.join("histograms").join(format!("{}.tsv", iso.isolate_id)),
            histogram(counts).to_tsv(),
        )?;
        summary.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            iso.isolate_id,
            label_str(iso.label),
            iso.total_length(),
            gc_content(iso)?,
            counts.distinct(),
            counts.total()
        ));
    }
    fs::write(out.join("count_summary.tsv"), summary)?;
    Ok(())
}

fn matrix(a: &MatrixArgs) -> Result<()> {
    let dataset = load_dataset(&a.inputs)?;
    let mut m = match &a.vocabulary {
        Some(p) => {
            let vocab = KmerVocabulary::read_from(std::io::BufReader::new(fs::File::open(p)?))?;
            build_matrix_with_vocabulary(&dataset, &vocab)?
        }
        None => build_matrix(&dataset, KmerSpec::new(a.kmer.k, a.kmer.canonical)?)?,
    };
    if a.binarize {
        m = binarize(&m);
    }
    let out = &a.common.out_dir;
    save_matrix(&m, &out.join("matrix.kmat"))?;
    m.vocabulary()
        .write_to(BufWriter::new(fs::File::create(out.join("vocabulary.kvoc"))?))?;
    println!("vocabulary_size\t{}", m.n_features());
    Ok(())
}

fn parse_max_features(s: &str) -> Result<MaxFeatures> {
    match s.to_ascii_lowercase().as_str() {
        "sqrt" => Ok(MaxFeatures::Sqrt),
        "all" => Ok(MaxFeatures::All),
        n => n.parse().map(MaxFeatures::Fixed).map_err(|_| {
            Error::InvalidParameter(format!("max_features must be sqrt, all or a count, got {s:?}"))
        }),
    }
}

fn learner(a: &LearnerArgs, seed: u64) -> Result<Learner> {
    Ok(match a.algorithm {
        Algorithm::Forest => Learner::Forest(ForestParams {
            n_trees: a.n_trees,
            max_features: parse_max_features(&a.max_features)?,
            bootstrap: a.bootstrap,
            max_depth: a.max_depth,
            min_samples_split: a.min_samples_split,
            seed,
        }),
        Algorithm::Adaboost => Learner::AdaBoost { rounds: a.rounds },
        Algorithm::Lasso => Learner::Lasso(LinearParams {
            lambda: a.lambda,
            max_iters: a.max_iters,
            tolerance: a.tolerance,
        }),
    })
}

fn split_spec(a: &SplitArgs, seed: u64) -> SplitSpec {
    SplitSpec {
        test_fraction: a.test_fraction,
        stratified: a.stratified,
        seed,
    }
}

fn train(a: &TrainArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    let seed = a.common.seed;
    let rows = if a.holdout {
        train_test_split(&m, &split_spec(&a.split, seed))?.0
    } else {
        m.labeled_rows()
    };
    let model = learner(&a.learner, seed)?.fit(&TrainingSet::from_rows(&m, &rows))?;
    save_model(&model, &a.common.out_dir.join("model.kmod"))?;
    eprintln!("train: {} on {} rows", model.kind(), rows.len());
    Ok(())
}

fn load_annotation(path: &Path, m: &FeatureMatrix) -> Result<RegionAnnotation> {
    load_region_annotation(fs::File::open(path)?, m.vocabulary().spec)
}

fn eval(a: &EvalArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    let seed = a.common.seed;
    let learner = learner(&a.learner, seed)?;
    let test = a.test_matrix.as_deref().map(load_matrix).transpose()?;
    let (model, report) = match (&a.model, &test) {
        (Some(p), Some(t)) => {
            let model = load_model(p)?;
            let rows: Vec<usize> = (0..t.n_rows()).collect();
            let report = evaluate_model(&model, t, &rows, 0, seed)?;
            (model, report)
        }
        (Some(p), None) => {
            // the test side of the split that `train --holdout true` used
            let model = load_model(p)?;
            let (train, test) = train_test_split(&m, &split_spec(&a.split, seed))?;
            let report = evaluate_model(&model, &m, &test, train.len(), seed)?;
            (model, report)
        }
        (None, Some(t)) => cross_dataset_eval(&m, t, &learner, seed)?,
        (None, None) => evaluate_holdout(&m, &split_spec(&a.split, seed), &learner)?,
    };
    let mut report = report;
    if let Some(p) = &a.annotation {
        let annotation = load_annotation(p, &m)?;
        report = report.with_regions(&model, &m, &annotation, a.top_n)?;
    }
    if !a.sizes.is_empty() {
        report = report.with_curve(&learning_curve(&m, &a.sizes, a.repeats, &learner, seed)?);
    }
    let out = &a.common.out_dir;
    fs::write(out.join("eval_report.json"), report.to_json())?;
    fs::write(out.join("roc.tsv"), report.roc_tsv())?;
    match report.auc {
        Some(auc) => eprintln!("eval: accuracy {} auc {auc}", report.accuracy),
        None => eprintln!("eval: accuracy {} (single-class test set)", report.accuracy),
    }
    Ok(())
}

fn curve(a: &CurveArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    let seed = a.common.seed;
    let protocol = match a.protocol {
        Protocol::Subsample => CurveProtocol::SubsampleThenSplit,
        Protocol::Fixed => CurveProtocol::FixedTestSet,
    };
    let c = learning_curve_with(
        &m,
        &a.sizes,
        a.repeats,
        &learner(&a.learner, seed)?,
        seed,
        a.test_fraction,
        protocol,
    )?;
    let out = &a.common.out_dir;
    fs::write(out.join("learning_curve.tsv"), c.to_tsv())?;
    let mut json = serde_json::to_string_pretty(&c).expect("curve serializes");
    json.push('\n');
    fs::write(out.join("learning_curve.json"), json)?;
    Ok(())
}

fn regions(a: &RegionsArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    let Model::Forest(forest) = load_model(&a.model)? else {
        return Err(Error::InvalidParameter(
            "region ranking needs a forest model".into(),
        ));
    };
    let annotation = load_annotation(&a.annotation, &m)?;
    let top_n = (a.top_n > 0).then_some(a.top_n);
    let ranking = rank_regions(&forest, m.vocabulary(), &annotation, top_n)?;
    fs::write(a.common.out_dir.join("regions.tsv"), ranking.to_tsv())?;
    Ok(())
}

fn stability(a: &StabilityArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    let seed = a.common.seed;
    let annotation = load_annotation(&a.annotation, &m)?;
    let table = rank_stability(
        &m,
        &a.sizes,
        a.repeats,
        &annotation,
        &learner(&a.learner, seed)?,
        seed,
    )?;
    fs::write(a.common.out_dir.join("stability.tsv"), table.to_tsv())?;
    Ok(())
}
