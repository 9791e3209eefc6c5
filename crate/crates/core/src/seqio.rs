//! FASTA contigs, phenotype label tables and per-isolate datasets.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary resistance phenotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phenotype {
    #[serde(rename = "SUS")]
    Susceptible,
    #[serde(rename = "RES")]
    Resistant,
}

impl Phenotype {
    pub fn as_str(self) -> &'static str {
        match self {
            Phenotype::Susceptible => "SUS",
            Phenotype::Resistant => "RES",
        }
    }

    pub fn is_resistant(self) -> bool {
        self == Phenotype::Resistant
    }
}

impl fmt::Display for Phenotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phenotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SUS" => Ok(Phenotype::Susceptible),
            "RES" => Ok(Phenotype::Resistant),
            _ => Err(Error::UnknownPhenotype(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contig {
    pub id: String,
    /// Uppercased IUPAC letters.
    pub bases: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isolate {
    pub isolate_id: String,
    pub contigs: Vec<Contig>,
    pub label: Option<Phenotype>,
}

impl Isolate {
    /// Checks the isolate invariants: non-empty id, at least one contig,
    /// unique non-empty contig ids and non-empty sequences.
    pub fn new(
        isolate_id: impl Into<String>,
        contigs: Vec<Contig>,
        label: Option<Phenotype>,
    ) -> Result<Self> {
        let isolate_id = isolate_id.into();
        let invalid = |reason: &str| Error::InvalidIsolate {
            id: isolate_id.clone(),
            reason: reason.to_string(),
        };
        if isolate_id.is_empty() {
            return Err(invalid("empty isolate id"));
        }
        if contigs.is_empty() {
            return Err(invalid("no contigs"));
        }
        let mut seen = HashSet::new();
        for c in &contigs {
            if c.id.is_empty() || c.bases.is_empty() {
                return Err(invalid("contig with empty id or sequence"));
            }
            if !seen.insert(c.id.as_str()) {
                return Err(invalid(&format!("duplicate contig id {:?}", c.id)));
            }
        }
        Ok(Isolate {
            isolate_id,
            contigs,
            label,
        })
    }

    pub fn total_length(&self) -> usize {
        self.contigs.iter().map(|c| c.bases.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClassCounts {
    pub isolates: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub susceptible: usize,
    pub resistant: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub isolates: Vec<Isolate>,
    pub metadata: BTreeMap<String, String>,
}

impl Dataset {
    /// Builds a dataset, rejecting empty input and repeated isolate ids.
    pub fn new(isolates: Vec<Isolate>) -> Result<Self> {
        if isolates.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for iso in &isolates {
            if !seen.insert(iso.isolate_id.as_str()) {
                return Err(Error::DuplicateIsolateId(iso.isolate_id.clone()));
            }
        }
        Ok(Dataset {
            isolates,
            metadata: BTreeMap::new(),
        })
    }

    pub fn class_counts(&self) -> ClassCounts {
        let mut counts = ClassCounts {
            isolates: self.isolates.len(),
            ..Default::default()
        };
        for iso in &self.isolates {
            match iso.label {
                Some(Phenotype::Susceptible) => counts.susceptible += 1,
                Some(Phenotype::Resistant) => counts.resistant += 1,
                None => counts.unlabeled += 1,
            }
        }
        counts.labeled = counts.susceptible + counts.resistant;
        counts
    }
}

fn is_iupac(b: u8) -> bool {
    matches!(
        b,
        b'A' | b'C'
            | b'G'
            | b'T'
            | b'U'
            | b'R'
            | b'Y'
            | b'S'
            | b'W'
            | b'K'
            | b'M'
            | b'B'
            | b'D'
            | b'H'
            | b'V'
            | b'N'
    )
}

/// Parses '>'-headed FASTA records from a byte slice.
///
/// Sequence lines are concatenated with whitespace removed and uppercased.
/// The header text up to the first whitespace becomes the contig id.
pub fn parse_fasta_bytes(data: &[u8]) -> Result<Vec<Contig>> {
    let mut contigs: Vec<Contig> = Vec::new();
    let mut current: Option<(Contig, usize)> = None;
    let mut offset = 0usize;

    let finish = |rec: (Contig, usize), contigs: &mut Vec<Contig>| -> Result<()> {
        let (contig, header_offset) = rec;
        if contig.bases.is_empty() {
            return Err(Error::MalformedFasta {
                offset: header_offset,
                record: Some(contig.id),
                reason: "record has an empty sequence".into(),
            });
        }
        contigs.push(contig);
        Ok(())
    };

    for raw_line in data.split_inclusive(|&b| b == b'\n') {
        let line_start = offset;
        offset += raw_line.len();
        let line = raw_line
            .strip_suffix(b"\n")
            .unwrap_or(raw_line);
        let line = line.strip_suffix(b"\r").unwrap_or(line);

        let lead = line.iter().position(|b| !b.is_ascii_whitespace());
        let Some(lead) = lead else { continue };

        if line[lead] == b'>' {
            if let Some(rec) = current.take() {
                finish(rec, &mut contigs)?;
            }
            let header = &line[lead + 1..];
            let id_end = header
                .iter()
                .position(|b| b.is_ascii_whitespace())
                .unwrap_or(header.len());
            let id = std::str::from_utf8(&header[..id_end]).map_err(|_| Error::MalformedFasta {
                offset: line_start,
                record: None,
                reason: "header is not valid UTF-8".into(),
            })?;
            if id.is_empty() {
                return Err(Error::MalformedFasta {
                    offset: line_start,
                    record: None,
                    reason: "empty record id".into(),
                });
            }
            current = Some((
                Contig {
                    id: id.to_string(),
                    bases: Vec::new(),
                },
                line_start,
            ));
            continue;
        }

        let Some((contig, _)) = current.as_mut() else {
            return Err(Error::MalformedFasta {
                offset: line_start + lead,
                record: None,
                reason: "sequence data before the first header".into(),
            });
        };
        for (i, &b) in line.iter().enumerate() {
            if b.is_ascii_whitespace() {
                continue;
            }
            let upper = b.to_ascii_uppercase();
            if !is_iupac(upper) {
                return Err(Error::MalformedFasta {
                    offset: line_start + i,
                    record: Some(contig.id.clone()),
                    reason: format!("invalid character {:?}", b as char),
                });
            }
            contig.bases.push(upper);
        }
    }
    if let Some(rec) = current.take() {
        finish(rec, &mut contigs)?;
    }
    Ok(contigs)
}

pub fn parse_fasta<R: Read>(mut reader: R) -> Result<Vec<Contig>> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    parse_fasta_bytes(&buf)
}

/// Writes contigs as FASTA with sequence lines wrapped at `width` bases.
pub fn write_fasta<W: Write>(mut writer: W, contigs: &[Contig], width: usize) -> Result<()> {
    let width = width.max(1);
    for c in contigs {
        writeln!(writer, ">{}", c.id)?;
        for chunk in c.bases.chunks(width) {
            writer.write_all(chunk)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reads a two-column (isolate_id, phenotype) TSV with no header row.
pub fn load_labels<R: Read>(mut reader: R) -> Result<BTreeMap<String, Phenotype>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut labels = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::MalformedLabels {
                line: i + 1,
                reason: format!("expected 2 tab-separated columns, found {}", fields.len()),
            });
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(Error::MalformedLabels {
                line: i + 1,
                reason: "empty isolate id".into(),
            });
        }
        let pheno: Phenotype = fields[1].parse()?;
        match labels.get(id) {
            Some(&prev) if prev != pheno => return Err(Error::ConflictingLabel(id.to_string())),
            Some(_) => {}
            None => {
                labels.insert(id.to_string(), pheno);
            }
        }
    }
    Ok(labels)
}

/// Isolate id derived from a FASTA path: the file name without its last extension.
pub fn isolate_id_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// One FASTA file per isolate, id taken from the file stem.
pub fn assemble_dataset(
    fasta_paths: &[PathBuf],
    labels: &BTreeMap<String, Phenotype>,
) -> Result<Dataset> {
    let named: Vec<(String, PathBuf)> = fasta_paths
        .iter()
        .map(|p| (isolate_id_from_path(p), p.clone()))
        .collect();
    assemble_dataset_with_ids(&named, labels)
}

/// Like [`assemble_dataset`] with explicit isolate ids.
pub fn assemble_dataset_with_ids(
    inputs: &[(String, PathBuf)],
    labels: &BTreeMap<String, Phenotype>,
) -> Result<Dataset> {
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let isolates = inputs
        .par_iter()
        .map(|(id, path)| {
            let bytes = fs::read(path)?;
            let contigs = parse_fasta_bytes(&bytes)?;
            Isolate::new(id.clone(), contigs, labels.get(id).copied())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dataset = Dataset::new(isolates)?;
    let counts = dataset.class_counts();
    dataset
        .metadata
        .insert("labeled".into(), counts.labeled.to_string());
    dataset
        .metadata
        .insert("unlabeled".into(), counts.unlabeled.to_string());
    Ok(dataset)
}
