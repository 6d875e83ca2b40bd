//! JSON encoding of [`EmbeddingTree`].
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! round trip bit-for-bit and re-encoding a decoded tree reproduces the input.

use std::collections::{BTreeMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};

use super::{EmbeddingTree, NodeKind, StoppingCriteria, TreeNode, TreeParams};
use crate::dataset::{BinningSpec, FeatureDescriptor, Schema};
use crate::error::{Error, Result};
use crate::split::{SplitConfig, SplitEvaluation};
use crate::Scalar;

pub const TREE_SCHEMA_VERSION: u64 = 1;

/// `serde_json` formatter printing floats as `{:.16e}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SigDigitsFormatter;

impl serde_json::ser::Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

#[derive(Serialize, Deserialize)]
struct TreeDocument {
    version: u64,
    params: ParamsDocument,
    fingerprint: String,
    features: Vec<FeatureDescriptor>,
    root: NodeDocument,
}

#[derive(Serialize, Deserialize)]
struct ParamsDocument {
    min_node_size: usize,
    max_depth: usize,
    bin_count: usize,
    boundaries: BTreeMap<String, Vec<f64>>,
    min_side: usize,
    variance_floor_scale: f64,
    schema: Schema,
}

#[derive(Serialize, Deserialize)]
struct NodeDocument {
    id: usize,
    kind: NodeKindTag,
    count: usize,
    depth: usize,
    split: Option<SplitDocument>,
    left: Option<Box<NodeDocument>>,
    right: Option<Box<NodeDocument>>,
    entities: Option<Vec<usize>>,
    mean: Vec<f64>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum NodeKindTag {
    Internal,
    Leaf,
}

#[derive(Serialize, Deserialize)]
struct SplitDocument {
    feature: usize,
    evaluation: EvaluationDocument,
}

#[derive(Serialize, Deserialize)]
struct EvaluationDocument {
    s: usize,
    mu1: f64,
    var1: f64,
    mu2: f64,
    var2: f64,
    w1: f64,
    w2: f64,
    loglik: f64,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u64,
}

pub(super) fn to_json<T: Scalar>(tree: &EmbeddingTree<T>) -> Vec<u8> {
    let doc = TreeDocument {
        version: TREE_SCHEMA_VERSION,
        params: ParamsDocument {
            min_node_size: tree.params.criteria.min_node_size,
            max_depth: tree.params.criteria.max_depth,
            bin_count: tree.params.binning.bin_count,
            boundaries: tree.params.binning.boundaries.clone(),
            min_side: tree.params.split.min_side,
            variance_floor_scale: tree.params.split.variance_floor_scale,
            schema: tree.params.schema.clone(),
        },
        fingerprint: tree.fingerprint.clone(),
        features: tree.features.clone(),
        root: encode_node(&tree.root),
    };
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitsFormatter);
    doc.serialize(&mut ser).expect("tree documents always serialize");
    out
}

fn encode_node<T: Scalar>(node: &TreeNode<T>) -> NodeDocument {
    let mean = node.mean.iter().map(|v| v.to_f64_lossy()).collect();
    match &node.kind {
        NodeKind::Leaf { entities } => NodeDocument {
            id: node.id,
            kind: NodeKindTag::Leaf,
            count: node.count,
            depth: node.depth,
            split: None,
            left: None,
            right: None,
            entities: Some(entities.clone()),
            mean,
        },
        NodeKind::Internal { split, left, right } => NodeDocument {
            id: node.id,
            kind: NodeKindTag::Internal,
            count: node.count,
            depth: node.depth,
            split: Some(SplitDocument {
                feature: split.feature_index,
                evaluation: EvaluationDocument {
                    s: split.s,
                    mu1: split.mu1.to_f64_lossy(),
                    var1: split.var1.to_f64_lossy(),
                    mu2: split.mu2.to_f64_lossy(),
                    var2: split.var2.to_f64_lossy(),
                    w1: split.w1.to_f64_lossy(),
                    w2: split.w2.to_f64_lossy(),
                    loglik: split.log_likelihood.to_f64_lossy(),
                },
            }),
            left: Some(Box::new(encode_node(left))),
            right: Some(Box::new(encode_node(right))),
            entities: None,
            mean,
        },
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedTree(msg.into())
}

pub(super) fn from_json<T: Scalar>(bytes: &[u8]) -> Result<EmbeddingTree<T>> {
    let probe: VersionProbe = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
    if probe.version != TREE_SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found: probe.version, expected: TREE_SCHEMA_VERSION });
    }
    let doc: TreeDocument = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;

    let criteria = StoppingCriteria { min_node_size: doc.params.min_node_size, max_depth: doc.params.max_depth };
    criteria.validate().map_err(|e| malformed(e.to_string()))?;
    let binning = BinningSpec { bin_count: doc.params.bin_count, boundaries: doc.params.boundaries };
    binning.validate().map_err(|e| malformed(e.to_string()))?;

    let mut decoder = Decoder { feature_count: doc.features.len(), dim: doc.root.mean.len(), ids: HashSet::new() };
    let root = decoder.decode_node(doc.root, 0)?;
    let mut entities = root.members();
    let total = entities.len();
    entities.dedup();
    if entities.len() != total || entities.iter().enumerate().any(|(i, &e)| i != e) {
        return Err(malformed("leaf entity lists must partition 0..N"));
    }

    Ok(EmbeddingTree {
        params: TreeParams {
            criteria,
            binning,
            split: SplitConfig { min_side: doc.params.min_side, variance_floor_scale: doc.params.variance_floor_scale },
            schema: doc.params.schema,
        },
        fingerprint: doc.fingerprint,
        features: doc.features,
        root,
    })
}

struct Decoder {
    feature_count: usize,
    dim: usize,
    ids: HashSet<usize>,
}

impl Decoder {
    fn decode_node<T: Scalar>(&mut self, doc: NodeDocument, depth: usize) -> Result<TreeNode<T>> {
        if !self.ids.insert(doc.id) {
            return Err(malformed(format!("duplicate node id {}", doc.id)));
        }
        if doc.depth != depth {
            return Err(malformed(format!("node {} has depth {} but sits at depth {depth}", doc.id, doc.depth)));
        }
        if doc.mean.len() != self.dim {
            return Err(malformed(format!("node {} mean has {} entries, expected {}", doc.id, doc.mean.len(), self.dim)));
        }
        let mean = doc.mean.iter().map(|&v| T::of(v)).collect();
        let kind = match (doc.kind, doc.split, doc.left, doc.right, doc.entities) {
            (NodeKindTag::Leaf, None, None, None, Some(mut entities)) => {
                if entities.len() != doc.count {
                    return Err(malformed(format!("leaf {} count does not match its entities", doc.id)));
                }
                entities.sort_unstable();
                NodeKind::Leaf { entities }
            }
            (NodeKindTag::Internal, Some(split), Some(left), Some(right), None) => {
                if split.feature >= self.feature_count {
                    return Err(malformed(format!("node {} splits on unknown feature {}", doc.id, split.feature)));
                }
                let left: TreeNode<T> = self.decode_node(*left, depth + 1)?;
                let right: TreeNode<T> = self.decode_node(*right, depth + 1)?;
                if left.count + right.count != doc.count || split.evaluation.s != left.count {
                    return Err(malformed(format!("node {} counts are inconsistent with its children", doc.id)));
                }
                let ev = split.evaluation;
                NodeKind::Internal {
                    split: SplitEvaluation {
                        feature_index: split.feature,
                        s: ev.s,
                        n_minus_s: doc.count - ev.s,
                        mu1: T::of(ev.mu1),
                        mu2: T::of(ev.mu2),
                        var1: T::of(ev.var1),
                        var2: T::of(ev.var2),
                        w1: T::of(ev.w1),
                        w2: T::of(ev.w2),
                        log_likelihood: T::of(ev.loglik),
                        valid: true,
                    },
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            _ => return Err(malformed(format!("node {} has fields inconsistent with its kind", doc.id))),
        };
        Ok(TreeNode { id: doc.id, depth, count: doc.count, mean, kind })
    }
}
