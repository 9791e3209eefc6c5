//! Binary model files (little-endian). Each starts with a 5-byte magic:
//! `KFOR1` forest, `KADA1` AdaBoost, `KLIN1` L1-logistic.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{BoostModel, DecisionTree, ForestModel, ForestParams, LinearModel, MaxFeatures, Stump, TreeNode};
use crate::error::{Error, Result};
use crate::matrix::SparseRow;

const FOREST_MAGIC: &[u8; 5] = b"KFOR1";
const BOOST_MAGIC: &[u8; 5] = b"KADA1";
const LINEAR_MAGIC: &[u8; 5] = b"KLIN1";

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Forest(ForestModel),
    Boost(BoostModel),
    Linear(LinearModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Forest(_) => "forest",
            Model::Boost(_) => "adaboost",
            Model::Linear(_) => "lasso",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Forest(m) => m.n_features,
            Model::Boost(m) => m.n_features,
            Model::Linear(m) => m.n_features(),
        }
    }

    /// RES probability.
    pub fn predict_proba(&self, row: SparseRow<'_>) -> Result<f64> {
        match self {
            Model::Forest(m) => m.predict_proba(row),
            Model::Boost(m) => m.predict_proba(row),
            Model::Linear(m) => m.predict_score(row),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        match self {
            Model::Forest(m) => write_forest(&mut w, m),
            Model::Boost(m) => write_boost(&mut w, m),
            Model::Linear(m) => write_linear(&mut w, m),
        }
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let magic = r.take(5)?;
        let model = match magic {
            m if m == FOREST_MAGIC => Model::Forest(read_forest(&mut r)?),
            m if m == BOOST_MAGIC => Model::Boost(read_boost(&mut r)?),
            m if m == LINEAR_MAGIC => Model::Linear(read_linear(&mut r)?),
            _ => return Err(corrupt("bad magic")),
        };
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(model)
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&model.to_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    Model::from_bytes(&fs::read(path)?)
}

fn corrupt(msg: &str) -> Error {
    Error::CorruptModelFile(msg.to_string())
}

fn put_u8(w: &mut Vec<u8>, v: u8) {
    w.push(v);
}
fn put_u32(w: &mut Vec<u8>, v: u32) {
    w.extend_from_slice(&v.to_le_bytes());
}
fn put_u64(w: &mut Vec<u8>, v: u64) {
    w.extend_from_slice(&v.to_le_bytes());
}
fn put_f64(w: &mut Vec<u8>, v: f64) {
    w.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(corrupt("truncated file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(corrupt("invalid boolean byte")),
        }
    }
    /// A count that must fit in the remaining bytes at `unit` bytes each.
    fn len(&mut self, unit: usize) -> Result<usize> {
        let n = self.u64()?;
        if n > ((self.buf.len() - self.pos) / unit.max(1)) as u64 {
            return Err(corrupt("truncated file"));
        }
        Ok(n as usize)
    }
}

fn write_forest(w: &mut Vec<u8>, m: &ForestModel) {
    w.extend_from_slice(FOREST_MAGIC);
    put_u64(w, m.n_features as u64);
    let p = &m.params;
    put_u64(w, p.n_trees as u64);
    match p.max_features {
        MaxFeatures::Sqrt => {
            put_u8(w, 0);
            put_u64(w, 0)
        }
        MaxFeatures::All => {
            put_u8(w, 1);
            put_u64(w, 0)
        }
        MaxFeatures::Fixed(k) => {
            put_u8(w, 2);
            put_u64(w, k as u64)
        }
    }
    put_u8(w, p.bootstrap as u8);
    put_u64(w, p.max_depth.map_or(u64::MAX, |d| d as u64));
    put_u64(w, p.min_samples_split as u64);
    put_u64(w, p.seed);
    for &v in &m.importances {
        put_f64(w, v);
    }
    put_u64(w, m.trees.len() as u64);
    for tree in &m.trees {
        put_u64(w, tree.nodes().len() as u64);
        for node in tree.nodes() {
            match *node {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    put_u8(w, 0);
                    put_u32(w, feature);
                    put_f64(w, threshold);
                    put_u32(w, left);
                    put_u32(w, right);
                }
                TreeNode::Leaf { sus, res } => {
                    put_u8(w, 1);
                    put_u32(w, sus);
                    put_u32(w, res);
                }
            }
        }
    }
}

fn read_forest(r: &mut Reader<'_>) -> Result<ForestModel> {
    let n_features = r.len(8)?;
    let n_trees = r.u64()? as usize;
    let tag = r.u8()?;
    let k = r.u64()? as usize;
    let max_features = match tag {
        0 => MaxFeatures::Sqrt,
        1 => MaxFeatures::All,
        2 => MaxFeatures::Fixed(k),
        _ => return Err(corrupt("invalid max_features tag")),
    };
    let bootstrap = r.bool()?;
    let max_depth = match r.u64()? {
        u64::MAX => None,
        d => Some(d as usize),
    };
    let min_samples_split = r.u64()? as usize;
    let seed = r.u64()?;
    let importances = (0..n_features).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let n_stored = r.len(9)?;
    if n_stored != n_trees {
        return Err(corrupt("tree count disagrees with parameters"));
    }
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = r.len(9)?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            nodes.push(match r.u8()? {
                0 => {
                    let feature = r.u32()?;
                    if feature as usize >= n_features {
                        return Err(corrupt("split feature out of range"));
                    }
                    TreeNode::Internal {
                        feature,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    }
                }
                1 => TreeNode::Leaf {
                    sus: r.u32()?,
                    res: r.u32()?,
                },
                _ => return Err(corrupt("invalid node tag")),
            });
        }
        trees.push(DecisionTree::from_nodes(nodes).map_err(|e| corrupt(&e.to_string()))?);
    }
    Ok(ForestModel {
        trees,
        n_features,
        params: ForestParams {
            n_trees,
            max_features,
            bootstrap,
            max_depth,
            min_samples_split,
            seed,
        },
        importances,
    })
}

fn write_boost(w: &mut Vec<u8>, m: &BoostModel) {
    w.extend_from_slice(BOOST_MAGIC);
    put_u64(w, m.n_features as u64);
    put_u64(w, m.stumps.len() as u64);
    for (s, &a) in m.stumps.iter().zip(&m.alphas) {
        put_u32(w, s.feature);
        put_f64(w, s.threshold);
        put_u8(w, s.polarity as u8);
        put_f64(w, a);
    }
}

fn read_boost(r: &mut Reader<'_>) -> Result<BoostModel> {
    let n_features = r.u64()? as usize;
    let n = r.len(21)?;
    let mut stumps = Vec::with_capacity(n);
    let mut alphas = Vec::with_capacity(n);
    for _ in 0..n {
        let feature = r.u32()?;
        if feature as usize >= n_features {
            return Err(corrupt("stump feature out of range"));
        }
        let threshold = r.f64()?;
        let polarity = match r.u8()? as i8 {
            p @ (1 | -1) => p,
            _ => return Err(corrupt("invalid stump polarity")),
        };
        stumps.push(Stump {
            feature,
            threshold,
            polarity,
        });
        alphas.push(r.f64()?);
    }
    Ok(BoostModel {
        stumps,
        alphas,
        n_features,
    })
}

fn write_linear(w: &mut Vec<u8>, m: &LinearModel) {
    w.extend_from_slice(LINEAR_MAGIC);
    put_u64(w, m.weights.len() as u64);
    put_f64(w, m.lambda);
    put_f64(w, m.intercept);
    put_u64(w, m.nonzero_weights() as u64);
    for (j, &v) in m.weights.iter().enumerate() {
        if v != 0.0 {
            put_u32(w, j as u32);
            put_f64(w, v);
        }
    }
}

fn read_linear(r: &mut Reader<'_>) -> Result<LinearModel> {
    let n_features = r.u64()? as usize;
    let lambda = r.f64()?;
    let intercept = r.f64()?;
    let nnz = r.len(12)?;
    if nnz > n_features {
        return Err(corrupt("more weights than features"));
    }
    let mut weights = vec![0.0; n_features];
    let mut last: Option<u32> = None;
    for _ in 0..nnz {
        let j = r.u32()?;
        if j as usize >= n_features || last.is_some_and(|l| j <= l) {
            return Err(corrupt("weight indices not strictly increasing in range"));
        }
        weights[j as usize] = r.f64()?;
        last = Some(j);
    }
    Ok(LinearModel {
        weights,
        intercept,
        lambda,
    })
}
