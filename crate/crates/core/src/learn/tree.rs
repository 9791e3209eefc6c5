//! CART classification trees with Gini impurity on sparse count features.
//!
//! Absent sparse entries are exact zeros. Candidate thresholds are midpoints
//! between consecutive distinct values observed in a node, including zero
//! when some sample in the node lacks the feature. Split quality is compared
//! with exact integer arithmetic so ties resolve the same way on every
//! platform: higher impurity decrease, then lower feature index, then lower
//! threshold.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::index;

use super::TrainingSet;
use crate::error::{Error, Result};
use crate::matrix::SparseRow;
use crate::seed::Rng;

/// `1 - sum_c (n_c / n)^2` over the (SUS, RES) counts.
pub fn gini_impurity(class_counts: (u64, u64)) -> Result<f64> {
    let (s, r) = class_counts;
    let n = s + r;
    if n == 0 {
        return Err(Error::EmptyNode);
    }
    let (ps, pr) = (s as f64 / n as f64, r as f64 / n as f64);
    Ok(1.0 - ps * ps - pr * pr)
}

/// Number of features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt() as usize).max(1),
            MaxFeatures::All => n_features,
            MaxFeatures::Fixed(m) => m,
        }
        .min(n_features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    /// Samples with `value <= threshold` go to `left`.
    Internal {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf { sus: u32, res: u32 },
}

/// Nodes stored in depth-first order; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("tree has no nodes".into()));
        }
        let n = nodes.len() as u32;
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                TreeNode::Internal { left, right, threshold, .. } => {
                    if left <= i as u32 || right <= i as u32 || left >= n || right >= n {
                        return Err(Error::InvalidParameter("invalid child index".into()));
                    }
                    if !threshold.is_finite() {
                        return Err(Error::InvalidParameter("non-finite threshold".into()));
                    }
                }
                TreeNode::Leaf { sus, res } => {
                    if sus as u64 + res as u64 == 0 {
                        return Err(Error::InvalidParameter("empty leaf".into()));
                    }
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => {
                    1 + go(nodes, left as usize).max(go(nodes, right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_counts(&self, row: SparseRow<'_>) -> (u32, u32) {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { sus, res } => return (sus, res),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row.get(feature) as f64 <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    /// Fraction of RES training weight in the leaf reached by `row`.
    pub fn predict_proba(&self, row: SparseRow<'_>) -> f64 {
        let (sus, res) = self.leaf_counts(row);
        res as f64 / (sus as f64 + res as f64)
    }
}

/// A chosen split and its impurity decrease (parent Gini minus the
/// weighted mean of the children's Gini).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: u32,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// `sum_child (sus^2 + res^2) / n_child` as an exact fraction. Maximizing it
/// minimizes the weighted Gini of the children.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn parent((s, r): (u64, u64)) -> Score {
        Score {
            num: (s as u128).pow(2) + (r as u128).pow(2),
            den: (s + r) as u128,
        }
    }

    fn children(l: (u64, u64), r: (u64, u64)) -> Score {
        let ln = (l.0 + l.1) as u128;
        let rn = (r.0 + r.1) as u128;
        let lq = (l.0 as u128).pow(2) + (l.1 as u128).pow(2);
        let rq = (r.0 as u128).pow(2) + (r.1 as u128).pow(2);
        Score {
            num: lq * rn + rq * ln,
            den: ln * rn,
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: Score,
    feature: u32,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        match self.score.cmp(&other.score) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                (self.feature, self.threshold) < (other.feature, other.threshold)
            }
        }
    }
}

fn approx_score(l: (u64, u64), r: (u64, u64)) -> f64 {
    let q = |c: (u64, u64)| {
        let (a, b) = (c.0 as f64, c.1 as f64);
        (a * a + b * b) / (a + b)
    };
    q(l) + q(r)
}

/// Running best candidate. A float screen discards clearly worse splits
/// before the exact comparison; its relative error is far below the margin.
#[derive(Default)]
struct Best {
    cand: Option<Candidate>,
    approx: f64,
}

impl Best {
    #[inline]
    fn offer(&mut self, left: (u64, u64), right: (u64, u64), feature: u32, threshold: f64) {
        let approx = approx_score(left, right);
        if self.cand.is_some() && approx < self.approx * (1.0 - 1e-9) {
            return;
        }
        let cand = Candidate {
            score: Score::children(left, right),
            feature,
            threshold,
        };
        if self.cand.as_ref().is_none_or(|b| cand.beats(b)) {
            self.cand = Some(cand);
            self.approx = approx;
        }
    }
}

fn sub(a: (u64, u64), b: (u64, u64)) -> (u64, u64) {
    (a.0 - b.0, a.1 - b.1)
}

/// Nonzero entries of a training set grouped by feature, each column
/// sorted by (value, sample). Features whose columns are identical share
/// one stored column; they always yield identical candidates, of which the
/// lowest feature index wins, so only that representative is scanned.
pub(crate) struct ColumnIndex {
    offsets: Vec<usize>,
    entries: Vec<(u32, u32)>,
    /// Lowest feature index of each stored column, ascending.
    representative: Vec<u32>,
    /// Stored column of each feature; `u32::MAX` when the feature is absent.
    column_of: Vec<u32>,
    sample_nnz: Vec<u32>,
}

impl ColumnIndex {
    pub(crate) fn build(data: &TrainingSet<'_>) -> Self {
        let p = data.n_features();
        let mut starts = vec![0usize; p + 1];
        let mut sample_nnz = Vec::with_capacity(data.len());
        for s in 0..data.len() {
            let row = data.sample(s);
            sample_nnz.push(row.nnz() as u32);
            for &j in row.indices {
                starts[j as usize + 1] += 1;
            }
        }
        for j in 0..p {
            starts[j + 1] += starts[j];
        }
        let mut fill = starts.clone();
        let mut all = vec![(0u32, 0u32); starts[p]];
        for s in 0..data.len() {
            for (j, v) in data.sample(s).iter() {
                all[fill[j as usize]] = (v, s as u32);
                fill[j as usize] += 1;
            }
        }
        drop(fill);
        for j in 0..p {
            let col = &mut all[starts[j]..starts[j + 1]];
            if !col.is_sorted() {
                col.sort_unstable();
            }
        }

        let mut ids: HashMap<&[(u32, u32)], u32> = HashMap::new();
        let mut offsets = vec![0usize];
        let mut entries = Vec::new();
        let mut representative = Vec::new();
        let mut column_of = vec![u32::MAX; p];
        for j in 0..p {
            let col = &all[starts[j]..starts[j + 1]];
            if col.is_empty() {
                continue;
            }
            column_of[j] = *ids.entry(col).or_insert_with(|| {
                representative.push(j as u32);
                entries.extend_from_slice(col);
                offsets.push(entries.len());
                (representative.len() - 1) as u32
            });
        }
        ColumnIndex {
            offsets,
            entries,
            representative,
            column_of,
            sample_nnz,
        }
    }

    fn stored(&self, c: usize) -> &[(u32, u32)] {
        &self.entries[self.offsets[c]..self.offsets[c + 1]]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Slot {
    seen: u32,
    candidate: u32,
    first_value: u32,
    nz_sus: u32,
    nz_res: u32,
    multi: bool,
}

/// Per-feature scratch state, reused across nodes and trees. Slots are
/// valid only when stamped with the current tag.
pub(crate) struct SplitWorkspace {
    tag: u32,
    slots: Vec<Slot>,
    touched: Vec<u32>,
    entries: Vec<(u32, u32, u32, bool)>,
    node_weight: Vec<u32>,
    offered: Vec<bool>,
}

impl SplitWorkspace {
    pub(crate) fn new(data: &TrainingSet<'_>) -> Self {
        SplitWorkspace {
            tag: 0,
            slots: vec![Slot::default(); data.n_features()],
            touched: Vec::new(),
            entries: Vec::new(),
            node_weight: vec![0; data.len()],
            offered: Vec::new(),
        }
    }

    /// Best split of the weighted `samples` over `candidates` (all features
    /// when `None`), including splits with zero impurity decrease. Both
    /// strategies return the same candidate; the cheaper one is chosen.
    fn search(
        &mut self,
        data: &TrainingSet<'_>,
        columns: &ColumnIndex,
        samples: &[(u32, u32)],
        totals: (u64, u64),
        candidates: Option<&[u32]>,
    ) -> Option<Candidate> {
        let node_nnz: usize = samples
            .iter()
            .map(|&(s, _)| columns.sample_nnz[s as usize] as usize)
            .sum();
        // a random slot access costs roughly 8 sequential column reads
        let by_columns = candidates.is_some()
            || node_nnz * 8 > columns.entries.len() + columns.offsets.len();
        if by_columns {
            self.search_columns(data, columns, samples, totals, candidates)
        } else {
            self.search_rows(data, samples, totals, candidates)
        }
    }

    /// Column-wise search: sequential scan of the candidate columns.
    fn search_columns(
        &mut self,
        data: &TrainingSet<'_>,
        columns: &ColumnIndex,
        samples: &[(u32, u32)],
        totals: (u64, u64),
        candidates: Option<&[u32]>,
    ) -> Option<Candidate> {
        for &(s, w) in samples {
            self.node_weight[s as usize] = w;
        }
        let node_weight = &self.node_weight;
        let mut best = Best::default();
        // With features visited in ascending order, a (left, right) pair
        // already offered by an earlier feature cannot win: its score ties
        // and the lower feature index takes precedence.
        let stride = totals.1 as usize + 1;
        let cells = (totals.0 as usize + 1).saturating_mul(stride);
        let ascending = candidates.is_none_or(|c| c.windows(2).all(|w| w[0] < w[1]));
        let memo = ascending && cells <= 1 << 22;
        self.offered.clear();
        self.offered.resize(if memo { cells } else { 0 }, false);
        let offered = &mut self.offered;
        let mut fresh = |right: (u64, u64)| {
            if !memo {
                return true;
            }
            let cell = &mut offered[right.0 as usize * stride + right.1 as usize];
            !std::mem::replace(cell, true)
        };
        // one pass from the largest value down; `right` holds the node
        // weight above the current boundary
        let mut scan = |j: u32, col: &[(u32, u32)]| {
            let mut right = (0u64, 0u64);
            let mut above: Option<u32> = None;
            let mut i = col.len();
            while i > 0 {
                let v = col[i - 1].0;
                let mut group = (0u64, 0u64);
                while i > 0 && col[i - 1].0 == v {
                    let s = col[i - 1].1 as usize;
                    let w = node_weight[s] as u64;
                    if data.is_resistant(s) {
                        group.1 += w;
                    } else {
                        group.0 += w;
                    }
                    i -= 1;
                }
                if group.0 + group.1 == 0 {
                    continue;
                }
                if let Some(hv) = above {
                    if fresh(right) {
                        best.offer(sub(totals, right), right, j, (v as f64 + hv as f64) / 2.0);
                    }
                }
                right = (right.0 + group.0, right.1 + group.1);
                above = Some(v);
            }
            if let Some(lv) = above {
                let zeros = sub(totals, right);
                if zeros.0 + zeros.1 > 0 && fresh(right) {
                    best.offer(zeros, right, j, lv as f64 / 2.0);
                }
            }
        };
        match candidates {
            Some(c) => {
                for &j in c {
                    let stored = columns.column_of[j as usize];
                    if stored != u32::MAX {
                        scan(j, columns.stored(stored as usize));
                    }
                }
            }
            None => {
                for (c, &j) in columns.representative.iter().enumerate() {
                    scan(j, columns.stored(c));
                }
            }
        }
        for &(s, _) in samples {
            self.node_weight[s as usize] = 0;
        }
        best.cand
    }

    fn next_tag(&mut self) -> u32 {
        if self.tag == u32::MAX {
            self.slots.iter_mut().for_each(|s| *s = Slot::default());
            self.tag = 0;
        }
        self.tag += 1;
        self.tag
    }

    /// Row-wise search: cost proportional to the node's nonzeros, with
    /// random access into the per-feature slots.
    fn search_rows(
        &mut self,
        data: &TrainingSet<'_>,
        samples: &[(u32, u32)],
        totals: (u64, u64),
        candidates: Option<&[u32]>,
    ) -> Option<Candidate> {
        let tag = self.next_tag();
        if let Some(c) = candidates {
            for &j in c {
                self.slots[j as usize].candidate = tag;
            }
        }
        let restricted = candidates.is_some();
        self.touched.clear();
        for &(s, w) in samples {
            let res = data.is_resistant(s as usize);
            for (j, v) in data.sample(s as usize).iter() {
                let slot = &mut self.slots[j as usize];
                if restricted && slot.candidate != tag {
                    continue;
                }
                if slot.seen != tag {
                    *slot = Slot {
                        seen: tag,
                        candidate: slot.candidate,
                        first_value: v,
                        nz_sus: 0,
                        nz_res: 0,
                        multi: false,
                    };
                    self.touched.push(j);
                } else if v != slot.first_value {
                    slot.multi = true;
                }
                if res {
                    slot.nz_res += w;
                } else {
                    slot.nz_sus += w;
                }
            }
        }

        let mut best = Best::default();
        let mut any_multi = false;
        for &j in &self.touched {
            let slot = self.slots[j as usize];
            if slot.multi {
                any_multi = true;
                continue;
            }
            let nz = (slot.nz_sus as u64, slot.nz_res as u64);
            let zeros = sub(totals, nz);
            if zeros.0 + zeros.1 == 0 {
                continue;
            }
            best.offer(zeros, nz, j, slot.first_value as f64 / 2.0);
        }

        if any_multi {
            self.entries.clear();
            for &(s, w) in samples {
                let res = data.is_resistant(s as usize);
                for (j, v) in data.sample(s as usize).iter() {
                    let slot = &self.slots[j as usize];
                    if slot.seen == tag && slot.multi {
                        self.entries.push((j, v, w, res));
                    }
                }
            }
            self.entries.sort_unstable_by_key(|e| (e.0, e.1));
            let mut start = 0;
            while start < self.entries.len() {
                let j = self.entries[start].0;
                let end = start
                    + self.entries[start..]
                        .iter()
                        .take_while(|e| e.0 == j)
                        .count();
                let slot = &self.slots[j as usize];
                let zeros = sub(totals, (slot.nz_sus as u64, slot.nz_res as u64));
                let mut left = (0u64, 0u64);
                let mut prev: Option<u32> = None;
                if zeros.0 + zeros.1 > 0 {
                    left = zeros;
                    prev = Some(0);
                }
                let mut i = start;
                while i < end {
                    let v = self.entries[i].1;
                    if let Some(pv) = prev {
                        best.offer(left, sub(totals, left), j, (pv as f64 + v as f64) / 2.0);
                    }
                    while i < end && self.entries[i].1 == v {
                        let (_, _, w, res) = self.entries[i];
                        if res {
                            left.1 += w as u64;
                        } else {
                            left.0 += w as u64;
                        }
                        i += 1;
                    }
                    prev = Some(v);
                }
                start = end;
            }
        }
        best.cand
    }
}

fn decrease(parent: (u64, u64), cand: &Candidate) -> f64 {
    let p = Score::parent(parent);
    if cand.score.cmp(&p) != Ordering::Greater {
        return 0.0;
    }
    let n = (parent.0 + parent.1) as f64;
    ((cand.score.value() - p.value()) / n).max(0.0)
}

/// Best split of all samples (unit weights) over `candidate_features`.
/// Returns `None` when no split strictly decreases impurity.
pub fn best_split(data: &TrainingSet<'_>, candidate_features: &[u32]) -> Option<Split> {
    if data.len() < 2 || candidate_features.is_empty() {
        return None;
    }
    let samples: Vec<(u32, u32)> = (0..data.len() as u32).map(|s| (s, 1)).collect();
    let (sus, res) = data.class_counts();
    let totals = (sus as u64, res as u64);
    let columns = ColumnIndex::build(data);
    let mut ws = SplitWorkspace::new(data);
    let cand = ws.search(data, &columns, &samples, totals, Some(candidate_features))?;
    let d = decrease(totals, &cand);
    (d > 0.0).then_some(Split {
        feature: cand.feature,
        threshold: cand.threshold,
        impurity_decrease: d,
    })
}

/// Grows one tree on weighted samples. Returns the tree and the
/// (feature, weighted impurity decrease) contributions of its splits.
pub(crate) fn grow_tree(
    data: &TrainingSet<'_>,
    columns: &ColumnIndex,
    samples: Vec<(u32, u32)>,
    params: &TreeParams,
    rng: &mut Rng,
    ws: &mut SplitWorkspace,
) -> (DecisionTree, Vec<(u32, f64)>) {
    let n_features = data.n_features();
    let m = params.max_features.resolve(n_features);
    let mut nodes = vec![TreeNode::Leaf { sus: 0, res: 0 }];
    let mut contributions = Vec::new();
    let mut stack = vec![(0usize, samples, 0usize)];

    while let Some((idx, samples, depth)) = stack.pop() {
        let mut totals = (0u64, 0u64);
        for &(s, w) in &samples {
            if data.is_resistant(s as usize) {
                totals.1 += w as u64;
            } else {
                totals.0 += w as u64;
            }
        }
        let leaf = TreeNode::Leaf {
            sus: totals.0 as u32,
            res: totals.1 as u32,
        };
        let weight = totals.0 + totals.1;
        let stop = totals.0 == 0
            || totals.1 == 0
            || params.max_depth.is_some_and(|d| depth >= d)
            || weight < params.min_samples_split as u64
            || n_features == 0;
        if stop {
            nodes[idx] = leaf;
            continue;
        }
        let sampled: Option<Vec<u32>> = (m < n_features).then(|| {
            let mut c: Vec<u32> = index::sample(rng, n_features, m)
                .into_iter()
                .map(|j| j as u32)
                .collect();
            c.sort_unstable();
            c
        });
        let Some(cand) = ws.search(data, columns, &samples, totals, sampled.as_deref()) else {
            nodes[idx] = leaf;
            continue;
        };
        contributions.push((cand.feature, weight as f64 * decrease(totals, &cand)));

        let (left, right): (Vec<_>, Vec<_>) = samples.into_iter().partition(|&(s, _)| {
            data.sample(s as usize).get(cand.feature) as f64 <= cand.threshold
        });
        let li = nodes.len();
        nodes.push(TreeNode::Leaf { sus: 0, res: 0 });
        nodes.push(TreeNode::Leaf { sus: 0, res: 0 });
        nodes[idx] = TreeNode::Internal {
            feature: cand.feature,
            threshold: cand.threshold,
            left: li as u32,
            right: li as u32 + 1,
        };
        stack.push((li + 1, right, depth + 1));
        stack.push((li, left, depth + 1));
    }
    (DecisionTree { nodes }, contributions)
}

/// Fits a single tree on every sample with unit weight.
pub fn fit_tree(data: &TrainingSet<'_>, params: &TreeParams, rng: &mut Rng) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::NoLabeledSamples);
    }
    let samples = (0..data.len() as u32).map(|s| (s, 1)).collect();
    let columns = ColumnIndex::build(data);
    let mut ws = SplitWorkspace::new(data);
    Ok(grow_tree(data, &columns, samples, params, rng, &mut ws).0)
}
