//! Synthetic labeled corpora with one planted marker k-mer.
//!
//! Backgrounds are i.i.d. bases. Chance occurrences of the marker (or its
//! reverse complement) are removed from every contig, so the truth record
//! lists every occurrence in the emitted sequences.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::RegionAnnotation;
use crate::kmer::{encode_kmer, reverse_complement, KmerCode, KmerSpec, MAX_K};
use crate::seed::{rng_from_seed, Rng};
use crate::seqio::{write_fasta, Contig, Dataset, Isolate, Phenotype};

/// Region id given to the marker in the emitted annotation.
pub const PLANTED_REGION: &str = "PLANTED";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_isolates: usize,
    pub n_contigs_per_isolate: usize,
    pub contig_length: usize,
    pub resistant_fraction: f64,
    pub marker: String,
    pub marker_presence_in_res: f64,
    pub marker_presence_in_sus: f64,
    pub background_gc: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_isolates: 200,
            n_contigs_per_isolate: 1,
            contig_length: 5000,
            resistant_fraction: 0.5,
            marker: "GATCCTAGGC".into(),
            marker_presence_in_res: 0.95,
            marker_presence_in_sus: 0.05,
            background_gc: 0.5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidParameter(m));
        if self.n_isolates == 0 || self.n_contigs_per_isolate == 0 {
            return invalid("n_isolates and n_contigs_per_isolate must be positive".into());
        }
        let k = self.marker.len();
        if k == 0 {
            return invalid("marker is empty".into());
        }
        if k > MAX_K {
            return Err(Error::KTooLarge(k));
        }
        encode_kmer(self.marker.to_ascii_uppercase().as_bytes())?;
        if self.contig_length < k {
            return Err(Error::MarkerLongerThanContig {
                marker: k,
                contig: self.contig_length,
            });
        }
        for (name, v) in [
            ("resistant_fraction", self.resistant_fraction),
            ("background_gc", self.background_gc),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie strictly between 0 and 1"));
            }
        }
        for (name, v) in [
            ("marker_presence_in_res", self.marker_presence_in_res),
            ("marker_presence_in_sus", self.marker_presence_in_sus),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.marker.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Insertion {
    pub contig_id: String,
    /// 0-based offset of the first marker base.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthIsolate {
    pub isolate_id: String,
    pub label: Phenotype,
    pub marker: Option<Insertion>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRecord {
    pub marker: String,
    pub region: String,
    pub seed: u64,
    pub isolates: Vec<TruthIsolate>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub dataset: Dataset,
    pub annotation: RegionAnnotation,
    pub truth: TruthRecord,
}

fn draw_base(rng: &mut Rng, gc: f64) -> u8 {
    let u: f64 = rng.gen();
    if u < gc / 2.0 {
        b'G'
    } else if u < gc {
        b'C'
    } else if u < gc + (1.0 - gc) / 2.0 {
        b'A'
    } else {
        b'T'
    }
}

fn other_base(rng: &mut Rng, b: u8) -> u8 {
    let others: Vec<u8> = b"ACGT".iter().copied().filter(|&x| x != b).collect();
    others[rng.gen_range(0..3)]
}

/// Mutates bases until neither pattern occurs except at `keep`.
fn scrub(bases: &mut [u8], patterns: &[&[u8]], keep: Option<usize>, rng: &mut Rng) {
    let k = patterns[0].len();
    let protected = |j: usize| keep.is_some_and(|q| (q..q + k).contains(&j));
    let mut p = 0;
    while p + k <= bases.len() {
        let window = &bases[p..p + k];
        if Some(p) != keep && patterns.contains(&window) {
            let j = (p..p + k)
                .find(|&j| !protected(j))
                .expect("a distinct occurrence has an unprotected base");
            bases[j] = other_base(rng, bases[j]);
            // only windows covering j can have changed
            p = (j + 1).saturating_sub(k).min(p);
            continue;
        }
        p += 1;
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let marker = spec.marker.to_ascii_uppercase().into_bytes();
    let k = marker.len();
    let rc_code = reverse_complement(encode_kmer(&marker)?, k);
    let rc = rc_code.decode(k).into_bytes();
    let patterns: [&[u8]; 2] = [&marker, &rc];

    let mut rng = rng_from_seed(spec.seed);
    let width = spec.n_isolates.to_string().len().max(3);
    let mut isolates = Vec::with_capacity(spec.n_isolates);
    let mut truth = Vec::with_capacity(spec.n_isolates);
    for i in 0..spec.n_isolates {
        let isolate_id = format!("iso{:0width$}", i + 1);
        let label = if rng.gen_bool(spec.resistant_fraction) {
            Phenotype::Resistant
        } else {
            Phenotype::Susceptible
        };
        let mut contigs: Vec<Contig> = (0..spec.n_contigs_per_isolate)
            .map(|c| Contig {
                id: format!("{isolate_id}_c{}", c + 1),
                bases: (0..spec.contig_length)
                    .map(|_| draw_base(&mut rng, spec.background_gc))
                    .collect(),
            })
            .collect();
        let presence = match label {
            Phenotype::Resistant => spec.marker_presence_in_res,
            Phenotype::Susceptible => spec.marker_presence_in_sus,
        };
        let insertion = if rng.gen_bool(presence) {
            let c = rng.gen_range(0..contigs.len());
            let position = rng.gen_range(0..=spec.contig_length - k);
            contigs[c].bases[position..position + k].copy_from_slice(&marker);
            Some((c, position))
        } else {
            None
        };
        for (c, contig) in contigs.iter_mut().enumerate() {
            let keep = insertion.filter(|&(ic, _)| ic == c).map(|(_, p)| p);
            scrub(&mut contig.bases, &patterns, keep, &mut rng);
        }
        truth.push(TruthIsolate {
            isolate_id: isolate_id.clone(),
            label,
            marker: insertion.map(|(c, position)| Insertion {
                contig_id: contigs[c].id.clone(),
                position,
            }),
        });
        isolates.push(Isolate::new(isolate_id, contigs, Some(label))?);
    }

    let mut dataset = Dataset::new(isolates)?;
    dataset.metadata.insert("synth_seed".into(), spec.seed.to_string());
    let mut annotation = RegionAnnotation::new(KmerSpec::new(k, true)?);
    annotation.insert(&String::from_utf8_lossy(&marker), PLANTED_REGION)?;
    Ok(SynthCorpus {
        dataset,
        annotation,
        truth: TruthRecord {
            marker: String::from_utf8_lossy(&marker).into_owned(),
            region: PLANTED_REGION.into(),
            seed: spec.seed,
            isolates: truth,
        },
    })
}

/// Canonical code of the marker.
pub fn marker_code(spec: &SynthSpec) -> Result<KmerCode> {
    let code = encode_kmer(spec.marker.to_ascii_uppercase().as_bytes())?;
    Ok(crate::kmer::canonical(code, spec.k()))
}

/// Writes `fasta/<isolate>.fa`, `labels.tsv`, `annotation.tsv` and
/// `truth.json` under `dir`.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<()> {
    let fasta_dir = dir.join("fasta");
    fs::create_dir_all(&fasta_dir)?;
    let mut labels = String::new();
    for iso in &corpus.dataset.isolates {
        let mut w = BufWriter::new(fs::File::create(fasta_dir.join(format!("{}.fa", iso.isolate_id)))?);
        write_fasta(&mut w, &iso.contigs, 80)?;
        w.flush()?;
        if let Some(label) = iso.label {
            labels.push_str(&format!("{}\t{}\n", iso.isolate_id, label));
        }
    }
    fs::write(dir.join("labels.tsv"), labels)?;
    fs::write(dir.join("annotation.tsv"), corpus.annotation.to_tsv())?;
    let mut truth = serde_json::to_string_pretty(&corpus.truth).expect("truth serializes");
    truth.push('\n');
    fs::write(dir.join("truth.json"), truth)?;
    Ok(())
}
