//! Little-endian model file.
//!
//! `"ELRF"`, version `u32`, then the parameters (`n_trees u32`,
//! `max_depth u32` with 0 meaning unlimited, `min_leaf u32`, `mtry u32`,
//! `seed u64`), then per tree a node count `u32` followed by the nodes in
//! preorder. A node is a tag byte, 0 for a split (`feature u32`,
//! `threshold f64`, `left u32`, `right u32`) and 1 for a leaf
//! (`vessel u64`, `background u64`).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{ForestModel, ForestParams, Node, Tree};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ELRF";

pub fn write_model(model: &ForestModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::write(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&model_bytes(model))
        .and_then(|_| out.flush())
        .map_err(|e| Error::write(path, e))
}

pub fn save_model(model: &ForestModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, path)
}

fn model_bytes(model: &ForestModel) -> Vec<u8> {
    let p = model.params();
    let mut b = Vec::new();
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&ForestModel::FORMAT_VERSION.to_le_bytes());
    b.extend_from_slice(&(p.n_trees as u32).to_le_bytes());
    b.extend_from_slice(&(p.max_depth.unwrap_or(0) as u32).to_le_bytes());
    b.extend_from_slice(&(p.min_samples_leaf as u32).to_le_bytes());
    b.extend_from_slice(&(p.mtry as u32).to_le_bytes());
    b.extend_from_slice(&p.seed.to_le_bytes());
    for tree in model.trees() {
        b.extend_from_slice(&(tree.nodes().len() as u32).to_le_bytes());
        for node in tree.nodes() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    b.push(0);
                    b.extend_from_slice(&feature.to_le_bytes());
                    b.extend_from_slice(&threshold.to_le_bytes());
                    b.extend_from_slice(&left.to_le_bytes());
                    b.extend_from_slice(&right.to_le_bytes());
                }
                Node::Leaf { vessel, background } => {
                    b.push(1);
                    b.extend_from_slice(&vessel.to_le_bytes());
                    b.extend_from_slice(&background.to_le_bytes());
                }
            }
        }
    }
    b
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::CorruptModel(format!("truncated at {what}")))?;
        self.pos = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take::<1>(what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }
}

/// Parses a model from its file contents.
pub fn read_model(bytes: &[u8]) -> Result<ForestModel> {
    let mut c = Cursor { bytes, pos: 0 };
    if &c.take::<4>("magic")? != MAGIC {
        return Err(Error::CorruptModel("bad magic".into()));
    }
    let version = c.u32("version")?;
    if version != ForestModel::FORMAT_VERSION {
        return Err(Error::CorruptModel(format!("unsupported version {version}")));
    }
    let n_trees = c.u32("n_trees")? as usize;
    let depth = c.u32("max_depth")?;
    let params = ForestParams {
        n_trees,
        max_depth: (depth != 0).then_some(depth as usize),
        min_samples_leaf: c.u32("min_leaf")? as usize,
        mtry: c.u32("mtry")? as usize,
        seed: c.u64("seed")?,
    };
    params
        .validate()
        .map_err(|e| Error::CorruptModel(e.to_string()))?;

    let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
    for _ in 0..n_trees {
        let count = c.u32("node count")? as usize;
        // a node takes at least 17 bytes; reject absurd counts before allocating
        if count > (bytes.len() - c.pos) / 17 {
            return Err(Error::CorruptModel("node count exceeds file size".into()));
        }
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            nodes.push(match c.u8("node tag")? {
                0 => Node::Split {
                    feature: c.u32("feature")?,
                    threshold: c.f64("threshold")?,
                    left: c.u32("left")?,
                    right: c.u32("right")?,
                },
                1 => Node::Leaf {
                    vessel: c.u64("vessel count")?,
                    background: c.u64("background count")?,
                },
                t => return Err(Error::CorruptModel(format!("unknown node tag {t}"))),
            });
        }
        trees.push(Tree::from_nodes(nodes)?);
    }
    if c.pos != bytes.len() {
        return Err(Error::CorruptModel("trailing bytes".into()));
    }
    ForestModel::from_trees(params, trees).map_err(|e| Error::CorruptModel(e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ForestModel> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::read(path, e))?;
    read_model(&bytes)
}
