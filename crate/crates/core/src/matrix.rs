//! Sparse isolate x k-mer count matrices and the KMAT1 file format.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! "KMAT1"
//! vocabulary block          "KVOC1", k: u8, canonical: u8, n: u64, n x code: u64
//! binarized: u8             0 or 1
//! rows: u64
//! per row:
//!   id_len: u32, id: UTF-8 bytes
//!   label: u8               0 = SUS, 1 = RES, 255 = none
//!   nnz: u64
//!   nnz x (index: u32, count: u32)
//! ```

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kmer::{build_vocabulary, count_kmers, read_vocabulary, KmerCounts, KmerSpec, KmerVocabulary};
use crate::seqio::{Dataset, Phenotype};

const MATRIX_MAGIC: &[u8; 5] = b"KMAT1";

/// Borrowed view of one sparse row: ascending column indices and positive counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparseRow<'a> {
    pub indices: &'a [u32],
    pub values: &'a [u32],
}

impl SparseRow<'_> {
    /// Value at column `j`, zero when absent.
    #[inline]
    pub fn get(&self, j: u32) -> u32 {
        match self.indices.binary_search(&j) {
            Ok(p) => self.values[p],
            Err(_) => 0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

/// Compressed sparse rows over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMatrix {
    vocabulary: KmerVocabulary,
    row_ids: Vec<String>,
    labels: Vec<Option<Phenotype>>,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<u32>,
    binarized: bool,
}

impl FeatureMatrix {
    /// Assembles a matrix from explicit rows of (column, count) pairs,
    /// validating every structural invariant.
    pub fn from_rows(
        vocabulary: KmerVocabulary,
        row_ids: Vec<String>,
        labels: Vec<Option<Phenotype>>,
        rows: Vec<Vec<(u32, u32)>>,
        binarized: bool,
    ) -> Result<Self> {
        if row_ids.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: row_ids.len(),
                right: rows.len(),
            });
        }
        if labels.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: rows.len(),
            });
        }
        let n_cols = vocabulary.len();
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            let mut prev: Option<u32> = None;
            for (j, v) in row {
                if j as usize >= n_cols {
                    return Err(Error::IndexOutOfRange {
                        index: j as usize,
                        n_features: n_cols,
                    });
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(Error::InvalidParameter(
                        "row indices must be strictly ascending".into(),
                    ));
                }
                if v == 0 || (binarized && v != 1) {
                    return Err(Error::InvalidParameter(format!(
                        "invalid stored value {v} at column {j}"
                    )));
                }
                prev = Some(j);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(FeatureMatrix {
            vocabulary,
            row_ids,
            labels,
            indptr,
            indices,
            values,
            binarized,
        })
    }

    pub fn vocabulary(&self) -> &KmerVocabulary {
        &self.vocabulary
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn labels(&self) -> &[Option<Phenotype>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<Phenotype> {
        self.labels[i]
    }

    pub fn is_binarized(&self) -> bool {
        self.binarized
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow {
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }

    /// Indices of rows that carry a label, ascending.
    pub fn labeled_rows(&self) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&i| self.labels[i].is_some())
            .collect()
    }

    /// Dense copy, for tests and small inspections.
    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        (0..self.n_rows())
            .map(|i| {
                let mut d = vec![0; self.n_features()];
                for (j, v) in self.row(i).iter() {
                    d[j as usize] = v;
                }
                d
            })
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MATRIX_MAGIC)?;
        self.vocabulary.write_to(&mut w)?;
        w.write_all(&[self.binarized as u8])?;
        w.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        for i in 0..self.n_rows() {
            let id = self.row_ids[i].as_bytes();
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id)?;
            let label = match self.labels[i] {
                Some(Phenotype::Susceptible) => 0u8,
                Some(Phenotype::Resistant) => 1,
                None => 255,
            };
            w.write_all(&[label])?;
            let row = self.row(i);
            w.write_all(&(row.nnz() as u64).to_le_bytes())?;
            for (j, v) in row.iter() {
                w.write_all(&j.to_le_bytes())?;
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptMatrixFile(m.to_string());
        let eof = |e: std::io::Error| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::CorruptMatrixFile("truncated file".into())
            } else {
                Error::Io(e)
            }
        };
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic).map_err(eof)?;
        if &magic != MATRIX_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let vocabulary = read_vocabulary(&mut r, Error::CorruptMatrixFile)?;
        let mut b1 = [0u8; 1];
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b1).map_err(eof)?;
        let binarized = match b1[0] {
            0 => false,
            1 => true,
            _ => return Err(corrupt("invalid binarized flag")),
        };
        r.read_exact(&mut b8).map_err(eof)?;
        let n_rows = u64::from_le_bytes(b8);
        let mut row_ids = Vec::new();
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for _ in 0..n_rows {
            r.read_exact(&mut b4).map_err(eof)?;
            let len = u32::from_le_bytes(b4) as usize;
            let mut id = Vec::new();
            (&mut r).take(len as u64).read_to_end(&mut id)?;
            if id.len() != len {
                return Err(corrupt("truncated file"));
            }
            let id = String::from_utf8(id).map_err(|_| corrupt("row id is not UTF-8"))?;
            r.read_exact(&mut b1).map_err(eof)?;
            let label = match b1[0] {
                0 => Some(Phenotype::Susceptible),
                1 => Some(Phenotype::Resistant),
                255 => None,
                _ => return Err(corrupt("invalid label byte")),
            };
            r.read_exact(&mut b8).map_err(eof)?;
            let nnz = u64::from_le_bytes(b8);
            if nnz > vocabulary.len() as u64 {
                return Err(corrupt("row has more entries than columns"));
            }
            let mut row = Vec::with_capacity(nnz as usize);
            for _ in 0..nnz {
                r.read_exact(&mut b4).map_err(eof)?;
                let j = u32::from_le_bytes(b4);
                r.read_exact(&mut b4).map_err(eof)?;
                row.push((j, u32::from_le_bytes(b4)));
            }
            row_ids.push(id);
            labels.push(label);
            rows.push(row);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(corrupt("trailing bytes after last row"));
        }
        FeatureMatrix::from_rows(vocabulary, row_ids, labels, rows, binarized)
            .map_err(|e| Error::CorruptMatrixFile(e.to_string()))
    }
}

pub fn save_matrix(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    matrix.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path)?;
    FeatureMatrix::read_from(&bytes[..])
}

fn project(counts: &KmerCounts, vocabulary: &KmerVocabulary) -> Result<Vec<(u32, u32)>> {
    let mut row = Vec::with_capacity(counts.table.len());
    for (&code, &n) in &counts.table {
        if let Some(j) = vocabulary.index_of(code) {
            let n = u32::try_from(n).map_err(|_| Error::CountOverflow(n))?;
            row.push((j as u32, n));
        }
    }
    row.sort_unstable();
    Ok(row)
}

/// Counts every isolate, builds the union vocabulary and projects each
/// isolate onto it. Row order follows the dataset.
pub fn build_matrix(dataset: &Dataset, spec: KmerSpec) -> Result<FeatureMatrix> {
    if dataset.isolates.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = count_dataset(dataset, spec);
    let vocabulary = build_vocabulary(&counts)?;
    matrix_from_counts(dataset, &counts, vocabulary)
}

/// Projects a dataset onto an existing vocabulary; k-mers outside it are dropped.
pub fn build_matrix_with_vocabulary(
    dataset: &Dataset,
    vocabulary: &KmerVocabulary,
) -> Result<FeatureMatrix> {
    if dataset.isolates.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = count_dataset(dataset, vocabulary.spec);
    matrix_from_counts(dataset, &counts, vocabulary.clone())
}

pub fn count_dataset(dataset: &Dataset, spec: KmerSpec) -> Vec<KmerCounts> {
    dataset
        .isolates
        .par_iter()
        .map(|iso| count_kmers(iso, spec))
        .collect()
}

fn matrix_from_counts(
    dataset: &Dataset,
    counts: &[KmerCounts],
    vocabulary: KmerVocabulary,
) -> Result<FeatureMatrix> {
    let rows = counts
        .par_iter()
        .map(|c| project(c, &vocabulary))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(
        vocabulary,
        dataset.isolates.iter().map(|i| i.isolate_id.clone()).collect(),
        dataset.isolates.iter().map(|i| i.label).collect(),
        rows,
        false,
    )
}

/// Presence/absence copy: every stored count becomes 1.
pub fn binarize(matrix: &FeatureMatrix) -> FeatureMatrix {
    let mut out = matrix.clone();
    out.values.iter_mut().for_each(|v| *v = 1);
    out.binarized = true;
    out
}
