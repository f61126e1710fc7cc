//! Versioned binary encoding of a fitted forest.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "FERF" | version u32
//! n u64 | p u64 | B u64 | n_trees u64 | mtry u64 | min_node_size u64 | seed u64
//! per tree:
//!   node_count u64
//!   per node: tag u8 (0 split, 1 leaf)
//!             split: feature u32 | threshold f64 | left u32 | right u32
//!             leaf:  leaf_id u32 | value f64
//!   inbag_counts n x u32
//! ```

use std::io::{Read, Write};

use super::tree::{validate_layout, Node, Tree};
use super::{Forest, ForestParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FERF";
pub const FORMAT_VERSION: u32 = 1;

impl Forest {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for v in [
            self.train_n as u64,
            self.train_p as u64,
            self.trees.len() as u64,
            self.params.n_trees as u64,
            self.params.resolved_mtry(self.train_p) as u64,
            self.params.min_node_size as u64,
            self.params.seed,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for tree in &self.trees {
            w.write_all(&(tree.nodes().len() as u64).to_le_bytes())?;
            for node in tree.nodes() {
                match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        w.write_all(&[0])?;
                        w.write_all(&feature.to_le_bytes())?;
                        w.write_all(&threshold.to_bits().to_le_bytes())?;
                        w.write_all(&left.to_le_bytes())?;
                        w.write_all(&right.to_le_bytes())?;
                    }
                    Node::Leaf { leaf_id } => {
                        w.write_all(&[1])?;
                        w.write_all(&leaf_id.to_le_bytes())?;
                        let v = tree.leaf_values()[leaf_id as usize];
                        w.write_all(&v.to_bits().to_le_bytes())?;
                    }
                }
            }
            for &c in tree.inbag_counts() {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a forest file (bad magic)".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported forest format version {version}")));
        }
        let n = read_len(r)?;
        let p = read_len(r)?;
        let b = read_len(r)?;
        let params = ForestParams {
            n_trees: read_len(r)?,
            mtry: Some(read_len(r)?),
            min_node_size: read_len(r)?,
            seed: read_u64(r)?,
        };
        if b == 0 || params.n_trees != b {
            return Err(Error::Format("tree count does not match header".into()));
        }
        let mut trees = Vec::with_capacity(b.min(1 << 16));
        for _ in 0..b {
            let node_count = read_len(r)?;
            let mut nodes = Vec::with_capacity(node_count.min(1 << 20));
            let mut leaves: Vec<(u32, f64)> = Vec::new();
            for _ in 0..node_count {
                let mut tag = [0u8; 1];
                r.read_exact(&mut tag)?;
                match tag[0] {
                    0 => {
                        let feature = read_u32(r)?;
                        let threshold = f64::from_bits(read_u64(r)?);
                        let left = read_u32(r)?;
                        let right = read_u32(r)?;
                        nodes.push(Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        });
                    }
                    1 => {
                        let leaf_id = read_u32(r)?;
                        let value = f64::from_bits(read_u64(r)?);
                        leaves.push((leaf_id, value));
                        nodes.push(Node::Leaf { leaf_id });
                    }
                    t => return Err(Error::Format(format!("unknown node tag {t}"))),
                }
            }
            let n_leaves = validate_layout(&nodes, p).map_err(|e| Error::Format(e.to_string()))?;
            let values: Vec<f64> = leaves.iter().map(|&(_, v)| v).collect();
            debug_assert_eq!(values.len(), n_leaves);
            let mut inbag = Vec::with_capacity(n);
            for _ in 0..n {
                inbag.push(read_u32(r)?);
            }
            trees.push(Tree::from_raw(nodes, values, inbag));
        }
        Ok(Self {
            trees,
            params,
            train_n: n,
            train_p: p,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let forest = Self::read_from(&mut bytes)?;
        if !bytes.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after forest", bytes.len())));
        }
        Ok(forest)
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(read_u64(r)?).map_err(|_| Error::Format("length overflows usize".into()))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}
