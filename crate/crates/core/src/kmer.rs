//! 2-bit k-mer encoding, per-isolate counting, occurrence histograms and
//! corpus vocabularies.
//!
//! Bases are packed A=0, C=1, G=2, T=3 with the leftmost base in the most
//! significant pair, so integer order on codes equals lexicographic order on
//! the k-mer text.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::seqio::Isolate;

pub const MAX_K: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KmerSpec {
    k: usize,
    canonical: bool,
}

impl KmerSpec {
    pub fn new(k: usize, canonical: bool) -> Result<Self> {
        if k > MAX_K {
            return Err(Error::KTooLarge(k));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(KmerSpec { k, canonical })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn canonical(&self) -> bool {
        self.canonical
    }

    fn mask(&self) -> u64 {
        mask_for(self.k)
    }
}

fn mask_for(k: usize) -> u64 {
    if k >= 32 {
        u64::MAX
    } else {
        (1u64 << (2 * k)) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KmerCode(pub u64);

impl KmerCode {
    pub fn decode(self, k: usize) -> String {
        (0..k)
            .map(|i| {
                let shift = 2 * (k - 1 - i);
                b"ACGT"[((self.0 >> shift) & 3) as usize] as char
            })
            .collect()
    }
}

#[inline]
fn base_code(b: u8) -> Option<u64> {
    match b {
        b'A' | b'a' => Some(0),
        b'C' | b'c' => Some(1),
        b'G' | b'g' => Some(2),
        b'T' | b't' => Some(3),
        _ => None,
    }
}

pub fn encode_kmer(bases: &[u8]) -> Result<KmerCode> {
    if bases.len() > MAX_K {
        return Err(Error::KTooLarge(bases.len()));
    }
    let mut code = 0u64;
    for (i, &b) in bases.iter().enumerate() {
        let c = base_code(b).ok_or(Error::AmbiguousBase {
            base: b as char,
            position: i,
        })?;
        code = (code << 2) | c;
    }
    Ok(KmerCode(code))
}

pub fn reverse_complement(code: KmerCode, k: usize) -> KmerCode {
    // complement is 3 - x, i.e. bitwise not of each pair
    let mut x = !code.0;
    // reverse the order of the 2-bit groups within the word
    x = ((x >> 2) & 0x3333_3333_3333_3333) | ((x & 0x3333_3333_3333_3333) << 2);
    x = ((x >> 4) & 0x0F0F_0F0F_0F0F_0F0F) | ((x & 0x0F0F_0F0F_0F0F_0F0F) << 4);
    x = ((x >> 8) & 0x00FF_00FF_00FF_00FF) | ((x & 0x00FF_00FF_00FF_00FF) << 8);
    x = ((x >> 16) & 0x0000_FFFF_0000_FFFF) | ((x & 0x0000_FFFF_0000_FFFF) << 16);
    x = x.rotate_left(32);
    KmerCode(x >> (64 - 2 * k))
}

pub fn canonical(code: KmerCode, k: usize) -> KmerCode {
    code.min(reverse_complement(code, k))
}

/// Occurrence counts of the k-mers of one isolate. Absent k-mers are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmerCounts {
    pub spec: KmerSpec,
    pub table: HashMap<KmerCode, u64>,
}

impl KmerCounts {
    pub fn distinct(&self) -> usize {
        self.table.len()
    }

    pub fn total(&self) -> u64 {
        self.table.values().sum()
    }

    /// Entries sorted by code.
    pub fn sorted(&self) -> Vec<(KmerCode, u64)> {
        let mut v: Vec<_> = self.table.iter().map(|(&c, &n)| (c, n)).collect();
        v.sort_unstable();
        v
    }
}

/// Adds every valid window of `seq` to `table`. Windows holding a non-ACGT
/// letter are skipped.
fn count_sequence(seq: &[u8], spec: KmerSpec, table: &mut HashMap<KmerCode, u64>) {
    let k = spec.k;
    let mask = spec.mask();
    let rc_shift = 2 * (k as u32 - 1);
    let mut fwd = 0u64;
    let mut rev = 0u64;
    let mut valid = 0usize;
    for &b in seq {
        let Some(c) = base_code(b) else {
            valid = 0;
            fwd = 0;
            rev = 0;
            continue;
        };
        fwd = ((fwd << 2) | c) & mask;
        rev = (rev >> 2) | ((3 - c) << rc_shift);
        valid += 1;
        if valid >= k {
            let key = if spec.canonical { fwd.min(rev) } else { fwd };
            *table.entry(KmerCode(key)).or_insert(0) += 1;
        }
    }
}

/// Counts k-mers over every contig of an isolate; windows never span contigs.
pub fn count_kmers(isolate: &Isolate, spec: KmerSpec) -> KmerCounts {
    let mut table = HashMap::new();
    for contig in &isolate.contigs {
        count_sequence(&contig.bases, spec, &mut table);
    }
    KmerCounts { spec, table }
}

/// Fraction of G+C among unambiguous bases, computed from k=1 counts.
pub fn gc_content(isolate: &Isolate) -> Result<f64> {
    let spec = KmerSpec::new(1, false)?;
    let counts = count_kmers(isolate, spec);
    let get = |b: u8| -> u64 {
        let code = encode_kmer(&[b]).expect("valid base");
        counts.table.get(&code).copied().unwrap_or(0)
    };
    let (a, c, g, t) = (get(b'A'), get(b'C'), get(b'G'), get(b'T'));
    let total = a + c + g + t;
    if total == 0 {
        return Err(Error::NoValidBases);
    }
    Ok((g + c) as f64 / total as f64)
}

/// `bins[v]` is the number of distinct k-mers that occur exactly `v` times.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KmerHistogram {
    pub bins: BTreeMap<u64, u64>,
}

impl KmerHistogram {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("occurrence_count\tnum_kmers\n");
        for (occ, n) in &self.bins {
            let _ = writeln!(out, "{occ}\t{n}");
        }
        out
    }
}

pub fn histogram(counts: &KmerCounts) -> KmerHistogram {
    let mut bins = BTreeMap::new();
    for &v in counts.table.values() {
        *bins.entry(v).or_insert(0) += 1;
    }
    KmerHistogram { bins }
}

/// Sorted union of k-mer codes across a corpus; a code's position is its
/// feature column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmerVocabulary {
    pub spec: KmerSpec,
    codes: Vec<KmerCode>,
}

const VOCAB_MAGIC: &[u8; 5] = b"KVOC1";

impl KmerVocabulary {
    /// Builds a vocabulary from codes that must already be strictly ascending.
    pub fn from_sorted_codes(spec: KmerSpec, codes: Vec<KmerCode>) -> Result<Self> {
        let limit = spec.mask();
        if codes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "vocabulary codes must be strictly ascending".into(),
            ));
        }
        if codes.iter().any(|c| c.0 & !limit != 0) {
            return Err(Error::InvalidParameter(
                "vocabulary code exceeds 2k bits".into(),
            ));
        }
        Ok(KmerVocabulary { spec, codes })
    }

    pub fn codes(&self) -> &[KmerCode] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Column index of `code`, if present.
    pub fn index_of(&self, code: KmerCode) -> Option<usize> {
        self.codes.binary_search(&code).ok()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(VOCAB_MAGIC)?;
        w.write_all(&[self.spec.k as u8, self.spec.canonical as u8])?;
        w.write_all(&(self.codes.len() as u64).to_le_bytes())?;
        for c in &self.codes {
            w.write_all(&c.0.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(15 + 8 * self.codes.len());
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        read_vocabulary(r, Error::CorruptVocabularyFile)
    }
}

/// Shared by the standalone vocabulary file and the block embedded in matrix files.
pub(crate) fn read_vocabulary<R: Read>(
    mut r: R,
    corrupt: fn(String) -> Error,
) -> Result<KmerVocabulary> {
    let eof = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            corrupt("truncated vocabulary block".into())
        } else {
            Error::Io(e)
        }
    };
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(eof)?;
    if &magic != VOCAB_MAGIC {
        return Err(corrupt("bad vocabulary magic".into()));
    }
    let mut hdr = [0u8; 2];
    r.read_exact(&mut hdr).map_err(eof)?;
    let spec = match (KmerSpec::new(hdr[0] as usize, hdr[1] != 0), hdr[1]) {
        (Ok(spec), 0 | 1) => spec,
        _ => return Err(corrupt("invalid k or canonical flag".into())),
    };
    let mut n = [0u8; 8];
    r.read_exact(&mut n).map_err(eof)?;
    let n = u64::from_le_bytes(n);
    let mut codes = Vec::with_capacity(n.min(1 << 24) as usize);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf).map_err(eof)?;
        codes.push(KmerCode(u64::from_le_bytes(buf)));
    }
    KmerVocabulary::from_sorted_codes(spec, codes).map_err(|e| corrupt(e.to_string()))
}

pub fn build_vocabulary(counts_per_isolate: &[KmerCounts]) -> Result<KmerVocabulary> {
    let Some(first) = counts_per_isolate.first() else {
        return Err(Error::EmptyDataset);
    };
    let spec = first.spec;
    if counts_per_isolate.iter().any(|c| c.spec != spec) {
        return Err(Error::MixedSpecs);
    }
    let mut codes: Vec<KmerCode> = counts_per_isolate
        .iter()
        .flat_map(|c| c.table.keys().copied())
        .collect();
    codes.sort_unstable();
    codes.dedup();
    Ok(KmerVocabulary { spec, codes })
}
