//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is printed on every run.
//! Each criterion checks against an oracle written here, independent of the
//! library code under test.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use amrkit::eval::{
    evaluate_holdout, learning_curve, rank_regions, rank_stability, roc_curve, SplitSpec,
};
use amrkit::kmer::{count_kmers, gc_content, KmerCode, KmerSpec, KmerVocabulary};
use amrkit::learn::{
    classify, fit_adaboost_traced, fit_forest, fit_l1_path, ForestParams, Learner,
    LogisticProblem, MaxFeatures, Model, TrainingSet,
};
use amrkit::matrix::{binarize, build_matrix, FeatureMatrix};
use amrkit::seed::rng_from_seed;
use amrkit::seqio::{Contig, Isolate, Phenotype};
use amrkit::synth::{generate, SynthCorpus, SynthSpec, PLANTED_REGION};
use amrkit::Error;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_bases(rng: &mut impl Rng, len: usize, alphabet: &[u8]) -> Vec<u8> {
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn isolate(contigs: Vec<Vec<u8>>) -> Isolate {
    let contigs = contigs
        .into_iter()
        .enumerate()
        .map(|(i, bases)| Contig {
            id: format!("c{i}"),
            bases,
        })
        .collect();
    Isolate::new("x", contigs, None).unwrap()
}

fn complement(b: u8) -> u8 {
    match b {
        b'A' => b'T',
        b'C' => b'G',
        b'G' => b'C',
        b'T' => b'A',
        _ => unreachable!(),
    }
}

/// Substring counting over the text itself.
fn naive_counts(seq: &[u8], k: usize, canonical: bool) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    if seq.len() < k {
        return out;
    }
    for w in seq.windows(k) {
        let w = w.to_ascii_uppercase();
        if !w.iter().all(|b| b"ACGT".contains(b)) {
            continue;
        }
        let fwd = String::from_utf8(w.clone()).unwrap();
        let key = if canonical {
            let rc: String = w.iter().rev().map(|&b| complement(b) as char).collect();
            fwd.min(rc)
        } else {
            fwd
        };
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

fn c1_kmer_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(101);
    for i in 0..1000 {
        let len = rng.gen_range(1..=500);
        let k = rng.gen_range(1..=12);
        let canonical = i % 2 == 0;
        // mostly ACGT with some soft-masked and ambiguous letters
        let seq = random_bases(&mut rng, len, b"ACGTACGTACGTACGTacgtN");
        let got: BTreeMap<String, u64> = count_kmers(&isolate(vec![seq.clone()]), KmerSpec::new(k, canonical).unwrap())
            .table
            .iter()
            .map(|(c, &n)| (c.decode(k), n))
            .collect();
        ensure(got == naive_counts(&seq, k, canonical), || {
            format!("sequence {i} (len {len}, k {k}, canonical {canonical}) differs")
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1}s"))?;
    Ok(format!("1000 sequences match in {secs:.2}s"))
}

fn c2_window_conservation() -> Outcome {
    let mut rng = rng_from_seed(102);
    for i in 0..100 {
        let k = rng.gen_range(1..=12);
        let len = rng.gen_range(k..=2000);
        let seq = random_bases(&mut rng, len, b"ACGT");
        let total = count_kmers(&isolate(vec![seq]), KmerSpec::new(k, false).unwrap()).total();
        ensure(total == (len - k + 1) as u64, || {
            format!("isolate {i}: sum {total} != {}", len - k + 1)
        })?;
    }
    Ok("100 isolates, sum = L - k + 1".into())
}

fn c3_vocabulary_monotone() -> Outcome {
    let corpus = generate(&SynthSpec {
        n_isolates: 50,
        contig_length: 10_000,
        seed: 3,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let mut sizes = Vec::new();
    for k in [4, 6, 8, 10, 12] {
        let m = build_matrix(&corpus.dataset, KmerSpec::new(k, true).unwrap()).map_err(|e| e.to_string())?;
        sizes.push(m.n_features());
    }
    ensure(sizes.windows(2).all(|w| w[0] <= w[1]), || format!("sizes {sizes:?}"))?;
    Ok(format!("k=4..12 vocabulary sizes {sizes:?}"))
}

fn c4_gc_identity() -> Outcome {
    let mut rng = rng_from_seed(104);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n_contigs = rng.gen_range(1..=4);
        let alphabet: &[u8] = if i % 2 == 0 { b"ACGT" } else { b"AACGTTGCCGNa" };
        let contigs: Vec<Vec<u8>> = (0..n_contigs)
            .map(|_| {
                let len = rng.gen_range(1..=3000);
                random_bases(&mut rng, len, alphabet)
            })
            .collect();
        let (mut gc, mut acgt) = (0u64, 0u64);
        for b in contigs.iter().flatten().map(u8::to_ascii_uppercase) {
            match b {
                b'G' | b'C' => {
                    gc += 1;
                    acgt += 1;
                }
                b'A' | b'T' => acgt += 1,
                _ => {}
            }
        }
        if acgt == 0 {
            continue;
        }
        let got = gc_content(&isolate(contigs)).map_err(|e| e.to_string())?;
        let diff = (got - gc as f64 / acgt as f64).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-12, || format!("isolate {i}: diff {diff:e}"))?;
    }
    Ok(format!("100 isolates, max diff {worst:e}"))
}

fn pairwise_auc(scores: &[f64], labels: &[Phenotype]) -> f64 {
    let (mut sum, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == Phenotype::Resistant && lj == Phenotype::Susceptible {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    sum += 1.0;
                } else if scores[i] == scores[j] {
                    sum += 0.5;
                }
            }
        }
    }
    sum / pairs
}

fn c5_auc() -> Outcome {
    let mut rng = rng_from_seed(105);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = rng.gen_range(2..=200);
        let mut labels: Vec<Phenotype> = (0..n)
            .map(|j| match j {
                0 => Phenotype::Susceptible,
                1 => Phenotype::Resistant,
                _ if rng.gen_bool(0.5) => Phenotype::Resistant,
                _ => Phenotype::Susceptible,
            })
            .collect();
        labels.shuffle(&mut rng);
        // half the instances draw from few levels to force ties
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if i % 2 == 0 {
                    rng.gen_range(0..5) as f64 / 4.0
                } else {
                    rng.gen()
                }
            })
            .collect();
        let got = roc_curve(&scores, &labels).map_err(|e| e.to_string())?.auc;
        let diff = (got - pairwise_auc(&scores, &labels)).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-9, || format!("instance {i}: diff {diff:e}"))?;
    }
    let labels = [
        Phenotype::Susceptible,
        Phenotype::Resistant,
        Phenotype::Susceptible,
        Phenotype::Resistant,
    ];
    let perfect = roc_curve(&[0.1, 0.9, 0.2, 0.8], &labels).unwrap().auc;
    ensure(perfect == 1.0, || format!("perfect separation gave {perfect}"))?;
    let constant = roc_curve(&[0.3; 4], &labels).unwrap().auc;
    ensure(constant == 0.5, || format!("constant scores gave {constant}"))?;
    Ok(format!("200 instances, max diff {worst:e}; perfect 1.0; constant 0.5"))
}

fn matrix_from_dense(x: &[Vec<u32>], labels: Vec<Option<Phenotype>>) -> FeatureMatrix {
    let n_features = x.first().map_or(0, Vec::len);
    let vocab = KmerVocabulary::from_sorted_codes(
        KmerSpec::new(8, false).unwrap(),
        (0..n_features as u64).map(KmerCode).collect(),
    )
    .unwrap();
    let rows = x
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0)
                .map(|(j, &v)| (j as u32, v))
                .collect()
        })
        .collect();
    let ids = (0..x.len()).map(|i| format!("r{i}")).collect();
    FeatureMatrix::from_rows(vocab, ids, labels, rows, false).unwrap()
}

fn random_label(rng: &mut impl Rng) -> Phenotype {
    if rng.gen_bool(0.5) {
        Phenotype::Resistant
    } else {
        Phenotype::Susceptible
    }
}

/// Random rows with random labels; repeated rows are dropped so the labels
/// are consistent. Both classes are present.
fn consistent_fixture(rng: &mut impl Rng) -> FeatureMatrix {
    loop {
        let n = rng.gen_range(10..=60);
        let f = rng.gen_range(3..=30);
        let mut x: Vec<Vec<u32>> = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<u32> = (0..f)
                .map(|_| if rng.gen_bool(0.6) { 0 } else { rng.gen_range(1..=4) })
                .collect();
            if !x.contains(&row) {
                x.push(row);
                y.push(Some(random_label(rng)));
            }
        }
        if y.contains(&Some(Phenotype::Resistant)) && y.contains(&Some(Phenotype::Susceptible)) {
            return matrix_from_dense(&x, y);
        }
    }
}

fn training_accuracy(model: &Model, m: &FeatureMatrix) -> f64 {
    let hits = (0..m.n_rows())
        .filter(|&i| Some(classify(model.predict_proba(m.row(i)).unwrap())) == m.label(i))
        .count();
    hits as f64 / m.n_rows() as f64
}

fn c6_forest_sanity() -> Outcome {
    let mut rng = rng_from_seed(106);
    for i in 0..20 {
        let m = consistent_fixture(&mut rng);
        let params = ForestParams {
            n_trees: 10,
            max_features: MaxFeatures::All,
            bootstrap: false,
            max_depth: None,
            min_samples_split: 2,
            seed: i,
        };
        let model = Model::Forest(fit_forest(&m, &params).map_err(|e| e.to_string())?);
        let acc = training_accuracy(&model, &m);
        ensure(acc == 1.0, || format!("fixture {i}: training accuracy {acc}"))?;
    }
    Ok("20 fixtures at training accuracy 1.0".into())
}

fn planted_matrix(corpus: &SynthCorpus) -> FeatureMatrix {
    build_matrix(&corpus.dataset, KmerSpec::new(10, true).unwrap()).unwrap()
}

/// The seed-0 planted-marker corpus and its k=10 matrix.
fn planted() -> &'static (SynthCorpus, FeatureMatrix) {
    static CELL: OnceLock<(SynthCorpus, FeatureMatrix)> = OnceLock::new();
    CELL.get_or_init(|| {
        let corpus = generate(&SynthSpec::default()).unwrap();
        let m = planted_matrix(&corpus);
        (corpus, m)
    })
}

fn planted_forest(seed: u64) -> Learner {
    Learner::Forest(ForestParams {
        n_trees: 100,
        max_features: MaxFeatures::All,
        seed,
        ..Default::default()
    })
}

fn c7_planted_recovery() -> Outcome {
    let start = Instant::now();
    let (mut accurate, mut top) = (0, 0);
    let mut accs = Vec::new();
    for seed in 0..10u64 {
        let corpus = generate(&SynthSpec {
            seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let m = planted_matrix(&corpus);
        let split = SplitSpec {
            seed,
            ..Default::default()
        };
        let (model, report) =
            evaluate_holdout(&m, &split, &planted_forest(seed)).map_err(|e| e.to_string())?;
        let Model::Forest(forest) = &model else {
            unreachable!()
        };
        let rank = rank_regions(forest, m.vocabulary(), &corpus.annotation, None)
            .map_err(|e| e.to_string())?
            .rank_of(PLANTED_REGION);
        accs.push(report.accuracy);
        accurate += (report.accuracy >= 0.90) as usize;
        top += (rank == Some(1)) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "accuracy >= 0.90 in {accurate}/10 seeds, PLANTED #1 in {top}/10, accuracies {accs:?}, {secs:.1}s"
    );
    ensure(accurate >= 9 && top >= 9 && secs < 120.0, || detail.clone())?;
    Ok(detail)
}

fn c8_top5_at_25() -> Outcome {
    let (corpus, m) = planted();
    let table = rank_stability(m, &[25], 10, &corpus.annotation, &planted_forest(0), 0)
        .map_err(|e| e.to_string())?;
    let row = table
        .row(25, PLANTED_REGION)
        .ok_or("PLANTED missing from the table")?;
    let detail = format!("median rank {} (ranks {:?})", row.median_rank, row.ranks);
    ensure(row.median_rank <= 5.0, || detail.clone())?;
    Ok(detail)
}

fn c9_learning_curve() -> Outcome {
    let (_, m) = planted();
    let c = learning_curve(m, &[25, 200], 10, &planted_forest(0), 0).map_err(|e| e.to_string())?;
    let detail = format!(
        "size 25: {:.4} +/- {:.4}; size 200: {:.4} +/- {:.4}",
        c.mean_accuracy[0], c.std_accuracy[0], c.mean_accuracy[1], c.std_accuracy[1]
    );
    ensure(c.mean_accuracy[1] >= c.mean_accuracy[0], || detail.clone())?;
    Ok(detail)
}

fn c10_adaboost() -> Outcome {
    let mut rng = rng_from_seed(110);
    let mut rounds_checked = 0;
    for i in 0..50 {
        // one feature, labels decided by a threshold in either direction
        let (x, y) = loop {
            let n = rng.gen_range(4..=50);
            let t = rng.gen_range(0..100u32);
            let flip = rng.gen_bool(0.5);
            let x: Vec<Vec<u32>> = (0..n).map(|_| vec![rng.gen_range(0..=100)]).collect();
            let y: Vec<Option<Phenotype>> = x
                .iter()
                .map(|r| {
                    Some(if (r[0] > t) != flip {
                        Phenotype::Resistant
                    } else {
                        Phenotype::Susceptible
                    })
                })
                .collect();
            if y.contains(&Some(Phenotype::Resistant)) && y.contains(&Some(Phenotype::Susceptible)) {
                break (x, y);
            }
        };
        let m = matrix_from_dense(&x, y);
        let (model, _) =
            fit_adaboost_traced(&TrainingSet::labeled(&m), 1).map_err(|e| e.to_string())?;
        let acc = training_accuracy(&Model::Boost(model), &m);
        ensure(acc == 1.0, || format!("separable fixture {i}: training error {}", 1.0 - acc))?;
    }
    let mut fixtures = 0;
    while fixtures < 50 {
        let m = consistent_fixture(&mut rng);
        let (_, sums) = match fit_adaboost_traced(&TrainingSet::labeled(&m), 50) {
            Ok(r) => r,
            Err(Error::DegenerateWeakLearner) => continue,
            Err(e) => return Err(e.to_string()),
        };
        fixtures += 1;
        for (round, s) in sums.iter().enumerate() {
            ensure((s - 1.0).abs() <= 1e-9, || {
                format!("fixture {fixtures} round {round}: weight sum {s}")
            })?;
        }
        rounds_checked += sums.len();
    }
    Ok(format!(
        "50 separable fixtures at error 0 after 1 round; weight sums = 1 over {rounds_checked} rounds"
    ))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean logistic loss written out from the standardized design.
fn reference_loss(p: &LogisticProblem, n: usize, y: &[f64], w: &[f64], b: f64) -> f64 {
    (0..n)
        .map(|i| {
            let eta = b + (0..w.len()).map(|c| w[c] * p.standardized(c, i)).sum::<f64>();
            softplus(eta) - y[i] * eta
        })
        .sum::<f64>()
        / n as f64
}

fn c11_l1_path() -> Outcome {
    let (_, m) = planted();
    let b = binarize(m);
    let lambdas = [0.001, 0.01, 0.1, 1.0, 10.0];
    let fits = fit_l1_path(&TrainingSet::labeled(&b), &lambdas, 10_000, 1e-6).map_err(|e| e.to_string())?;
    let nnz: Vec<usize> = fits.iter().map(|f| f.model.nonzero_weights()).collect();
    ensure(nnz.windows(2).all(|w| w[0] >= w[1]), || format!("nonzero counts {nnz:?}"))?;
    for (fit, l) in fits.iter().zip(lambdas) {
        for (s, w) in fit.objective_trace.windows(2).enumerate() {
            ensure(w[1] <= w[0] + 1e-12, || {
                format!("lambda {l}: objective rose at sweep {s}: {} -> {}", w[0], w[1])
            })?;
        }
    }

    let mut rng = rng_from_seed(111);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let m = consistent_fixture(&mut rng);
        let data = TrainingSet::labeled(&m);
        let p = LogisticProblem::new(&data);
        let y: Vec<f64> = (0..data.len()).map(|s| data.is_resistant(s) as u8 as f64).collect();
        let w: Vec<f64> = (0..p.n_active()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b0 = rng.gen_range(-1.0..1.0);
        let (g, gb) = p.gradient(&w, b0);
        let h = 1e-5;
        let loss = |w: &[f64], b: f64| reference_loss(&p, data.len(), &y, w, b);
        let mut check = |analytic: f64, numeric: f64, what: String| {
            let rel = (analytic - numeric).abs() / numeric.abs().max(1e-6);
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || format!("fixture {i} {what}: {analytic} vs {numeric}"))
        };
        for c in 0..w.len() {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[c] += h;
            wm[c] -= h;
            check(g[c], (loss(&wp, b0) - loss(&wm, b0)) / (2.0 * h), format!("w[{c}]"))?;
        }
        check(gb, (loss(&w, b0 + h) - loss(&w, b0 - h)) / (2.0 * h), "intercept".into())?;
    }
    Ok(format!(
        "nonzero weights {nnz:?} over lambda {lambdas:?}; traces monotone; gradient max rel err {worst:e}"
    ))
}

fn run_cli(cwd: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_amrkit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.insert(rel, std::fs::read(&path).unwrap());
        }
    }
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut n_files = 0;
    for seed in ["1", "2", "3"] {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let root = tmp.path().join(format!("seed{seed}_threads{threads}"));
            std::fs::create_dir_all(&root).unwrap();
            let common = ["--seed", seed, "--threads", threads];
            let steps: [&[&str]; 6] = [
                &["synth", "--n-isolates", "80", "--contig-length", "3000", "--out-dir", "corpus"],
                &["matrix", "--fasta-dir", "corpus/fasta", "--labels", "corpus/labels.tsv", "--k", "10", "--out-dir", "matrix"],
                &["train", "--matrix", "matrix/matrix.kmat", "--n-trees", "50", "--out-dir", "model"],
                &["eval", "--matrix", "matrix/matrix.kmat", "--model", "model/model.kmod", "--annotation", "corpus/annotation.tsv", "--out-dir", "eval"],
                &["eval", "--matrix", "matrix/matrix.kmat", "--n-trees", "30", "--sizes", "20,40", "--repeats", "3", "--out-dir", "eval_fit"],
                &["stability", "--matrix", "matrix/matrix.kmat", "--annotation", "corpus/annotation.tsv", "--sizes", "20,40", "--repeats", "3", "--n-trees", "20", "--out-dir", "stability"],
            ];
            for step in steps {
                let args: Vec<&str> = step.iter().chain(&common).copied().collect();
                run_cli(&root, &args)?;
            }
            let mut files = BTreeMap::new();
            collect_files(&root, &root, &mut files);
            outputs.push(files);
        }
        let names: Vec<&String> = outputs[0].keys().collect();
        ensure(outputs[0].keys().eq(outputs[1].keys()), || {
            format!("seed {seed}: different file sets")
        })?;
        for name in names {
            ensure(outputs[0][name] == outputs[1][name], || {
                format!("seed {seed}: {name} differs between 1 and 8 threads")
            })?;
        }
        n_files += outputs[0].len();
    }
    Ok(format!("{n_files} artifacts identical across 1 and 8 threads for 3 seeds"))
}

fn random_matrix(rng: &mut impl Rng) -> FeatureMatrix {
    let k = rng.gen_range(1..=12usize);
    let space = 1u64 << (2 * k);
    let mut codes: Vec<u64> = (0..rng.gen_range(0..=40)).map(|_| rng.gen_range(0..space)).collect();
    codes.sort_unstable();
    codes.dedup();
    let vocab = KmerVocabulary::from_sorted_codes(
        KmerSpec::new(k, rng.gen_bool(0.5)).unwrap(),
        codes.into_iter().map(KmerCode).collect(),
    )
    .unwrap();
    let binarized = rng.gen_bool(0.5);
    let n = rng.gen_range(0..=15);
    let rows = (0..n)
        .map(|_| {
            let mut row = Vec::new();
            for j in 0..vocab.len() as u32 {
                if rng.gen_bool(0.3) {
                    row.push((j, if binarized { 1 } else { rng.gen_range(1..=1000) }));
                }
            }
            row
        })
        .collect();
    let labels = (0..n)
        .map(|_| match rng.gen_range(0..3) {
            0 => None,
            1 => Some(Phenotype::Susceptible),
            _ => Some(Phenotype::Resistant),
        })
        .collect();
    let ids = (0..n).map(|i| format!("isolate_{i}")).collect();
    FeatureMatrix::from_rows(vocab, ids, labels, rows, binarized).unwrap()
}

fn random_model(i: usize, rng: &mut impl Rng) -> Model {
    let m = consistent_fixture(rng);
    let data = TrainingSet::labeled(&m);
    match i % 3 {
        0 => Model::Forest(
            fit_forest(
                &m,
                &ForestParams {
                    n_trees: rng.gen_range(1..=8),
                    max_depth: rng.gen_bool(0.5).then(|| rng.gen_range(1..=4)),
                    seed: rng.gen(),
                    ..Default::default()
                },
            )
            .unwrap(),
        ),
        1 => match fit_adaboost_traced(&data, rng.gen_range(1..=10)) {
            Ok((b, _)) => Model::Boost(b),
            Err(_) => random_model(i, rng),
        },
        _ => {
            let l = [0.001, 0.01, 0.1][rng.gen_range(0..3)];
            Model::Linear(fit_l1_path(&data, &[l], 1000, 1e-8).unwrap().remove(0).model)
        }
    }
}

fn c13_serialization() -> Outcome {
    let mut rng = rng_from_seed(113);
    let mut truncations = 0usize;
    for i in 0..20 {
        let m = random_matrix(&mut rng);
        let bytes = m.to_bytes();
        let back = FeatureMatrix::read_from(&bytes[..]).map_err(|e| e.to_string())?;
        ensure(back == m, || format!("matrix {i} changed in a round trip"))?;
        for len in 0..bytes.len() {
            ensure(
                matches!(FeatureMatrix::read_from(&bytes[..len]), Err(Error::CorruptMatrixFile(_))),
                || format!("matrix {i} truncated to {len} bytes was accepted"),
            )?;
            truncations += 1;
        }
        let mut extra = bytes.clone();
        extra.push(0);
        ensure(
            matches!(FeatureMatrix::read_from(&extra[..]), Err(Error::CorruptMatrixFile(_))),
            || format!("matrix {i} with a trailing byte was accepted"),
        )?;

        let model = random_model(i, &mut rng);
        let bytes = model.to_bytes();
        let back = Model::from_bytes(&bytes).map_err(|e| e.to_string())?;
        ensure(back == model, || format!("{} model {i} changed in a round trip", model.kind()))?;
        for len in 0..bytes.len() {
            ensure(
                matches!(Model::from_bytes(&bytes[..len]), Err(Error::CorruptModelFile(_))),
                || format!("{} model {i} truncated to {len} bytes was accepted", model.kind()),
            )?;
            truncations += 1;
        }
    }
    Ok(format!("20 matrices and 20 models round-trip; {truncations} truncations rejected"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("k-mer oracle equivalence", c1_kmer_oracle),
        ("window conservation", c2_window_conservation),
        ("vocabulary monotonicity", c3_vocabulary_monotone),
        ("GC identity", c4_gc_identity),
        ("AUC correctness", c5_auc),
        ("forest sanity", c6_forest_sanity),
        ("planted-marker recovery", c7_planted_recovery),
        ("top-5 at 25 samples", c8_top5_at_25),
        ("learning-curve shape", c9_learning_curve),
        ("AdaBoost", c10_adaboost),
        ("L1 path", c11_l1_path),
        ("determinism across thread counts", c12_determinism),
        ("serialization", c13_serialization),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
