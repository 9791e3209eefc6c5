//! Aggregation of feature importances into annotated regions.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kmer::{canonical, encode_kmer, KmerCode, KmerSpec, KmerVocabulary};
use crate::learn::ForestModel;

/// Region assigned to features without an annotation.
pub const UNANNOTATED: &str = "UNANNOTATED";

/// k-mer to region map; keys are canonicalized when the spec is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionAnnotation {
    pub spec: KmerSpec,
    pub regions: BTreeMap<KmerCode, String>,
}

impl RegionAnnotation {
    pub fn new(spec: KmerSpec) -> Self {
        RegionAnnotation {
            spec,
            regions: BTreeMap::new(),
        }
    }

    fn key(&self, code: KmerCode) -> KmerCode {
        if self.spec.canonical() {
            canonical(code, self.spec.k())
        } else {
            code
        }
    }

    /// Adds `kmer` (ACGT text of length k) under `region`.
    pub fn insert(&mut self, kmer: &str, region: &str) -> Result<()> {
        if kmer.len() != self.spec.k() {
            return Err(Error::InconsistentK {
                kmer: kmer.to_string(),
                found: kmer.len(),
                expected: self.spec.k(),
            });
        }
        let code = self.key(encode_kmer(kmer.as_bytes())?);
        self.regions.insert(code, region.to_string());
        Ok(())
    }

    pub fn region_of(&self, code: KmerCode) -> Option<&str> {
        self.regions.get(&self.key(code)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Two-column TSV (`kmer`, `region_id`) without a header.
    pub fn to_tsv(&self) -> String {
        let k = self.spec.k();
        self.regions
            .iter()
            .map(|(code, region)| format!("{}\t{}\n", code.decode(k), region))
            .collect()
    }
}

/// Reads `kmer<TAB>region_id` lines; blank lines are skipped.
pub fn load_region_annotation<R: Read>(mut reader: R, spec: KmerSpec) -> Result<RegionAnnotation> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut annotation = RegionAnnotation::new(spec);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::MalformedAnnotation {
                line: i + 1,
                reason: format!("expected 2 tab-separated columns, found {}", fields.len()),
            });
        }
        let region = fields[1].trim();
        annotation.insert(fields[0].trim(), region)?;
        if region.is_empty() {
            return Err(Error::MalformedAnnotation {
                line: i + 1,
                reason: "empty region id".into(),
            });
        }
    }
    Ok(annotation)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionScore {
    pub region: String,
    pub importance: f64,
}

/// Regions sorted by importance descending, then id ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRanking {
    pub entries: Vec<RegionScore>,
}

impl RegionRanking {
    /// 1-based rank of `region`.
    pub fn rank_of(&self, region: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.region == region).map(|p| p + 1)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\tregion_id\timportance\n");
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{}\n", i + 1, e.region, e.importance));
        }
        out
    }
}

/// Groups per-feature `importances` by region. Every region that owns at
/// least one vocabulary feature appears, as does [`UNANNOTATED`] when some
/// feature has no region. `top_n = None` keeps the full ranking.
pub fn rank_importances(
    importances: &[f64],
    vocabulary: &KmerVocabulary,
    annotation: &RegionAnnotation,
    top_n: Option<usize>,
) -> Result<RegionRanking> {
    if importances.len() != vocabulary.len() {
        return Err(Error::FeatureCountMismatch {
            model: importances.len(),
            data: vocabulary.len(),
        });
    }
    if annotation.spec.k() != vocabulary.spec.k() {
        return Err(Error::InconsistentK {
            kmer: String::new(),
            found: annotation.spec.k(),
            expected: vocabulary.spec.k(),
        });
    }
    let mut totals: HashMap<&str, f64> = HashMap::new();
    for (code, &imp) in vocabulary.codes().iter().zip(importances) {
        let region = annotation.region_of(*code).unwrap_or(UNANNOTATED);
        *totals.entry(region).or_insert(0.0) += imp;
    }
    let mut entries: Vec<RegionScore> = totals
        .into_iter()
        .map(|(region, importance)| RegionScore {
            region: region.to_string(),
            importance,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.importance
            .total_cmp(&a.importance)
            .then_with(|| a.region.cmp(&b.region))
    });
    if let Some(n) = top_n {
        entries.truncate(n);
    }
    Ok(RegionRanking { entries })
}

pub fn rank_regions(
    model: &ForestModel,
    vocabulary: &KmerVocabulary,
    annotation: &RegionAnnotation,
    top_n: Option<usize>,
) -> Result<RegionRanking> {
    rank_importances(&model.importances, vocabulary, annotation, top_n)
}
