use std::fs;

use amrkit::kmer::gc_content;
use amrkit::seqio::{assemble_dataset, load_labels, Phenotype};
use amrkit::synth::{generate, marker_code, write_corpus, SynthSpec, PLANTED_REGION};

fn three_se(p: f64, n: f64) -> f64 {
    3.0 * (p * (1.0 - p) / n).sqrt()
}

#[test]
fn background_gc_matches() {
    for gc in [0.3, 0.5, 0.65] {
        let spec = SynthSpec {
            n_isolates: 20,
            background_gc: gc,
            marker_presence_in_res: 0.0,
            marker_presence_in_sus: 0.0,
            seed: 4,
            ..Default::default()
        };
        let corpus = generate(&spec).unwrap();
        let n = (spec.n_isolates * spec.contig_length) as f64;
        let observed = corpus
            .dataset
            .isolates
            .iter()
            .map(|i| gc_content(i).unwrap() * i.total_length() as f64)
            .sum::<f64>()
            / n;
        // scrubbing touches a handful of bases, far below one standard error
        assert!((observed - gc).abs() <= three_se(gc, n), "gc {gc}: {observed}");
    }
}

#[test]
fn class_balance_matches() {
    for (seed, fraction) in [(1, 0.5), (2, 0.3), (3, 0.8)] {
        let spec = SynthSpec {
            n_isolates: 400,
            contig_length: 50,
            resistant_fraction: fraction,
            seed,
            ..Default::default()
        };
        let counts = generate(&spec).unwrap().dataset.class_counts();
        let observed = counts.resistant as f64 / 400.0;
        assert!((observed - fraction).abs() <= three_se(fraction, 400.0));
    }
}

#[test]
fn truth_matches_a_scan_of_the_sequences() {
    let spec = SynthSpec {
        n_isolates: 60,
        n_contigs_per_isolate: 3,
        contig_length: 800,
        marker: "ACGTTGCA".into(),
        seed: 8,
        ..Default::default()
    };
    let corpus = generate(&spec).unwrap();
    let marker = b"ACGTTGCA";
    let rc: Vec<u8> = marker
        .iter()
        .rev()
        .map(|b| match b {
            b'A' => b'T',
            b'C' => b'G',
            b'G' => b'C',
            _ => b'A',
        })
        .collect();
    for (iso, truth) in corpus.dataset.isolates.iter().zip(&corpus.truth.isolates) {
        assert_eq!(iso.isolate_id, truth.isolate_id);
        assert_eq!(iso.label, Some(truth.label));
        let mut hits = Vec::new();
        for c in &iso.contigs {
            for (p, w) in c.bases.windows(marker.len()).enumerate() {
                if w == marker || w == rc.as_slice() {
                    hits.push((c.id.clone(), p));
                }
            }
        }
        let expected: Vec<(String, usize)> = truth
            .marker
            .iter()
            .map(|m| (m.contig_id.clone(), m.position))
            .collect();
        assert_eq!(hits, expected, "{}", iso.isolate_id);
    }
    let code = marker_code(&spec).unwrap();
    assert_eq!(corpus.annotation.region_of(code), Some(PLANTED_REGION));
}

#[test]
fn default_presence_rate_in_res() {
    let corpus = generate(&SynthSpec::default()).unwrap();
    let res: Vec<_> = corpus
        .truth
        .isolates
        .iter()
        .filter(|t| t.label == Phenotype::Resistant)
        .collect();
    let rate = res.iter().filter(|t| t.marker.is_some()).count() as f64 / res.len() as f64;
    assert!((rate - 0.95).abs() <= 0.095, "{rate}");
}

#[test]
fn written_corpus_reloads_and_is_reproducible() {
    let spec = SynthSpec {
        n_isolates: 12,
        n_contigs_per_isolate: 2,
        contig_length: 300,
        seed: 21,
        ..Default::default()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let corpus = generate(&spec).unwrap();
    write_corpus(&corpus, a.path()).unwrap();
    write_corpus(&generate(&spec).unwrap(), b.path()).unwrap();
    for name in ["labels.tsv", "annotation.tsv", "truth.json", "fasta/iso001.fa"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }

    let labels = load_labels(fs::File::open(a.path().join("labels.tsv")).unwrap()).unwrap();
    let mut paths: Vec<_> = fs::read_dir(a.path().join("fasta"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    let reloaded = assemble_dataset(&paths, &labels).unwrap();
    assert_eq!(reloaded.isolates, corpus.dataset.isolates);
}
