//! Holdout splits and stratified subsampling of labeled rows.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::seed::rng_from_seed;
use crate::seqio::Phenotype;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test_fraction {} must lie strictly between 0 and 1",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Rows of `rows` grouped by label (SUS first); unlabeled rows are dropped.
fn by_class(matrix: &FeatureMatrix, rows: &[usize]) -> [Vec<usize>; 2] {
    let mut groups = [Vec::new(), Vec::new()];
    for &r in rows {
        match matrix.label(r) {
            Some(Phenotype::Susceptible) => groups[0].push(r),
            Some(Phenotype::Resistant) => groups[1].push(r),
            None => {}
        }
    }
    groups
}

/// Splits `total` across groups proportionally to `sizes` by largest
/// remainder; ties go to the earlier group.
fn apportion(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut quota: Vec<usize> = sizes.iter().map(|&s| total * s / n).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse((total * sizes[i]) % n), i));
    let mut left = total - quota.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        quota[i] += 1;
        left -= 1;
    }
    quota
}

/// Partitions the labeled rows among `rows` into sorted (train, test) lists.
pub fn split_rows(
    matrix: &FeatureMatrix,
    rows: &[usize],
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let groups = by_class(matrix, rows);
    let n = groups[0].len() + groups[1].len();
    let n_test = (spec.test_fraction * n as f64).round() as usize;
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(n_test);

    if spec.stratified {
        for (g, name) in groups.iter().zip(["SUS", "RES"]) {
            if g.len() < 2 {
                return Err(Error::TooFewSamples(format!(
                    "stratified split needs at least 2 {name} rows, found {}",
                    g.len()
                )));
            }
        }
        let mut quota = apportion(n_test, &[groups[0].len(), groups[1].len()]);
        for c in 0..2 {
            if quota[c] == 0 {
                // borrow from the other class when it can spare one
                if quota[1 - c] > 1 {
                    quota[1 - c] -= 1;
                }
                quota[c] = 1;
            }
            quota[c] = quota[c].min(groups[c].len() - 1);
        }
        for (c, g) in groups.into_iter().enumerate() {
            let mut g = g;
            g.shuffle(&mut rng);
            test.extend_from_slice(&g[..quota[c]]);
            train.extend_from_slice(&g[quota[c]..]);
        }
    } else {
        if n_test == 0 || n_test >= n {
            return Err(Error::TooFewSamples(format!(
                "{n} labeled rows cannot be split with test_fraction {}",
                spec.test_fraction
            )));
        }
        let mut all: Vec<usize> = groups.concat();
        all.sort_unstable();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..n_test]);
        train.extend_from_slice(&all[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits all labeled rows of `matrix`.
pub fn train_test_split(matrix: &FeatureMatrix, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    split_rows(matrix, &matrix.labeled_rows(), spec)
}

/// Draws `size` labeled rows from `rows` with class proportions preserved
/// (each class keeps at least two rows when it has them). Result is sorted.
pub fn stratified_subsample(
    matrix: &FeatureMatrix,
    rows: &[usize],
    size: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let groups = by_class(matrix, rows);
    let available = groups[0].len() + groups[1].len();
    if size > available {
        return Err(Error::SizeExceedsDataset { size, available });
    }
    let sizes = [groups[0].len(), groups[1].len()];
    let mut quota = apportion(size, &sizes);
    for c in 0..2 {
        let floor = sizes[c].min(2);
        while quota[c] < floor && quota[1 - c] > sizes[1 - c].min(2) {
            quota[c] += 1;
            quota[1 - c] -= 1;
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut picked = Vec::with_capacity(size);
    for (c, mut g) in groups.into_iter().enumerate() {
        g.shuffle(&mut rng);
        picked.extend_from_slice(&g[..quota[c]]);
    }
    picked.sort_unstable();
    Ok(picked)
}
