//! Recursive construction of the embedding tree.
//!
//! At each node the member embeddings are projected onto their own leading
//! principal direction, every binary feature that still varies inside the
//! node is scored by [`crate::split::best_split`], and the node is split on
//! the winner: bit 0 goes left, bit 1 goes right. Recursion stops when the
//! node is smaller than `min_node_size`, reaches `max_depth`, or has no valid
//! split.

mod codec;

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{self, binarize, BinaryFeatureMatrix, BinningSpec, EmbeddingMatrix, FeatureDescriptor, RawFeatureTable, Schema};
use crate::error::{Error, Result};
use crate::projection::{project_with, EigenSolver};
use crate::split::{best_split, SplitConfig, SplitEvaluation, SubsetBits};
use crate::Scalar;

pub use codec::{SigDigitsFormatter, TREE_SCHEMA_VERSION};

pub const DEFAULT_MIN_NODE_SIZE: usize = 20;
pub const DEFAULT_MAX_DEPTH: usize = 10;

/// Bounds on recursion: a node is split only while it holds at least
/// `min_node_size` entities and sits above `max_depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingCriteria {
    pub min_node_size: usize,
    pub max_depth: usize,
}

impl Default for StoppingCriteria {
    fn default() -> Self {
        Self { min_node_size: DEFAULT_MIN_NODE_SIZE, max_depth: DEFAULT_MAX_DEPTH }
    }
}

impl StoppingCriteria {
    pub fn new(min_node_size: usize, max_depth: usize) -> Result<Self> {
        let criteria = Self { min_node_size, max_depth };
        criteria.validate()?;
        Ok(criteria)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_node_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "minimum node size must be at least 2, got {}",
                self.min_node_size
            )));
        }
        Ok(())
    }

    pub fn allows_split(&self, count: usize, depth: usize) -> bool {
        count >= self.min_node_size && depth < self.max_depth
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub split: SplitConfig,
    /// Evaluate features and sibling subtrees on the rayon pool.
    pub parallel: bool,
    pub solver: EigenSolver,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { split: SplitConfig::default(), parallel: true, solver: EigenSolver::Auto }
    }
}

impl BuildOptions {
    pub fn sequential() -> Self {
        Self { parallel: false, ..Self::default() }
    }
}

/// Everything needed to rebuild or reinterpret a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub criteria: StoppingCriteria,
    pub binning: BinningSpec,
    pub split: SplitConfig,
    /// Kinds of the raw source features the tree was trained on.
    pub schema: Schema,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind<T> {
    Internal {
        /// Winning evaluation; `split.feature_index` is the split column.
        split: SplitEvaluation<T>,
        /// Entities with bit 0.
        left: Box<TreeNode<T>>,
        /// Entities with bit 1.
        right: Box<TreeNode<T>>,
    },
    Leaf {
        /// Ascending entity (row) indices.
        entities: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<T> {
    /// Breadth-first position in the tree, root = 0.
    pub id: usize,
    pub depth: usize,
    pub count: usize,
    /// Mean embedding of the node's members.
    pub mean: Vec<T>,
    pub kind: NodeKind<T>,
}

impl<T> TreeNode<T> {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn children(&self) -> Option<(&TreeNode<T>, &TreeNode<T>)> {
        match &self.kind {
            NodeKind::Internal { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn split(&self) -> Option<&SplitEvaluation<T>> {
        match &self.kind {
            NodeKind::Internal { split, .. } => Some(split),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn entities(&self) -> Option<&[usize]> {
        match &self.kind {
            NodeKind::Leaf { entities } => Some(entities),
            NodeKind::Internal { .. } => None,
        }
    }

    /// All entity indices below this node, ascending.
    pub fn members(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count);
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match &node.kind {
                NodeKind::Leaf { entities } => out.extend_from_slice(entities),
                NodeKind::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTree<T> {
    pub params: TreeParams,
    /// Hex digest of the training data, see [`dataset::fingerprint`].
    pub fingerprint: String,
    pub features: Vec<FeatureDescriptor>,
    pub root: TreeNode<T>,
}

impl<T: Scalar> EmbeddingTree<T> {
    /// Nodes in breadth-first (id) order.
    pub fn nodes(&self) -> Vec<&TreeNode<T>> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([&self.root]);
        while let Some(node) = queue.pop_front() {
            out.push(node);
            if let Some((l, r)) = node.children() {
                queue.push_back(l);
                queue.push_back(r);
            }
        }
        out
    }

    pub fn node(&self, id: usize) -> Option<&TreeNode<T>> {
        self.nodes().into_iter().find(|n| n.id == id)
    }

    pub fn leaves(&self) -> Vec<&TreeNode<T>> {
        self.nodes().into_iter().filter(|n| n.is_leaf()).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Depth of the deepest node.
    pub fn depth(&self) -> usize {
        self.nodes().iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn entity_count(&self) -> usize {
        self.root.count
    }

    /// Leaf holding the given training entity.
    pub fn leaf_of(&self, entity: usize) -> Option<&TreeNode<T>> {
        self.leaves().into_iter().find(|l| l.entities().is_some_and(|e| e.binary_search(&entity).is_ok()))
    }

    pub fn to_json(&self) -> Vec<u8> {
        codec::to_json(self)
    }

    /// Checks that the data is exactly what the tree was trained on.
    pub fn verify_dataset(&self, embeddings: &EmbeddingMatrix<T>, table: &RawFeatureTable) -> Result<()> {
        let data = dataset::fingerprint(embeddings, table);
        if data != self.fingerprint {
            return Err(Error::FingerprintMismatch { tree: self.fingerprint.clone(), data });
        }
        Ok(())
    }

    /// Loads the training data from CSV files, reading features with the
    /// stored schema, and verifies the fingerprint.
    pub fn load_dataset(&self, embeddings: &Path, features: &Path) -> Result<(EmbeddingMatrix<T>, RawFeatureTable)> {
        let schema = (!self.params.schema.is_empty()).then_some(&self.params.schema);
        let (matrix, table) = dataset::load_dataset_files(embeddings, features, schema)?;
        self.verify_dataset(&matrix, &table)?;
        Ok((matrix, table))
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        codec::from_json(bytes)
    }
}

struct Grower<'a, T> {
    embeddings: &'a EmbeddingMatrix<T>,
    features: &'a BinaryFeatureMatrix,
    criteria: StoppingCriteria,
    options: BuildOptions,
}

impl<T: Scalar> Grower<'_, T> {
    fn grow(&self, indices: Vec<usize>, depth: usize) -> Result<TreeNode<T>> {
        let mean = self.embeddings.mean_of(&indices);
        let count = indices.len();
        let leaf = |entities: Vec<usize>, mean: Vec<T>| TreeNode { id: 0, depth, count, mean, kind: NodeKind::Leaf { entities } };

        if !self.criteria.allows_split(count, depth) {
            return Ok(leaf(indices, mean));
        }
        let active: Vec<usize> = (0..self.features.feature_count())
            .filter(|&k| {
                let column = self.features.column(k);
                let first = column[indices[0]];
                indices.iter().any(|&i| column[i] != first)
            })
            .collect();
        if active.is_empty() {
            return Ok(leaf(indices, mean));
        }

        let rows: Vec<&[T]> = indices.iter().map(|&i| self.embeddings.row(i)).collect();
        let scores = project_with(&rows, 1, self.options.solver)?.scores;
        let view = SubsetBits { matrix: self.features, rows: &indices };
        let Some(split) = best_split(&scores, &view, &active, &self.options.split, self.options.parallel) else {
            return Ok(leaf(indices, mean));
        };

        let column = self.features.column(split.feature_index);
        let (right, left): (Vec<usize>, Vec<usize>) = indices.into_iter().partition(|&i| column[i]);
        let (left, right) = if self.options.parallel {
            rayon::join(|| self.grow(left, depth + 1), || self.grow(right, depth + 1))
        } else {
            (self.grow(left, depth + 1), self.grow(right, depth + 1))
        };
        Ok(TreeNode {
            id: 0,
            depth,
            count,
            mean,
            kind: NodeKind::Internal { split, left: Box::new(left?), right: Box::new(right?) },
        })
    }
}

fn assign_breadth_first_ids<T>(root: &mut TreeNode<T>) {
    let mut next = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        node.id = next;
        next += 1;
        if let NodeKind::Internal { left, right, .. } = &mut node.kind {
            queue.push_back(left);
            queue.push_back(right);
        }
    }
}

/// Builds a tree over pre-binarized features.
///
/// The fingerprint covers the embeddings and the feature columns; the
/// returned params carry an empty binning spec and schema. Use
/// [`build_tree_from_table`] to train from raw features.
pub fn build_tree<T: Scalar>(
    embeddings: &EmbeddingMatrix<T>,
    features: &BinaryFeatureMatrix,
    criteria: StoppingCriteria,
    options: &BuildOptions,
) -> Result<EmbeddingTree<T>> {
    criteria.validate()?;
    if embeddings.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.rows() != embeddings.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature rows for {} embeddings",
            features.rows(),
            embeddings.len()
        )));
    }
    let grower = Grower { embeddings, features, criteria, options: *options };
    let mut root = grower.grow((0..embeddings.len()).collect(), 0)?;
    assign_breadth_first_ids(&mut root);

    let table = RawFeatureTable {
        ids: embeddings.ids().to_vec(),
        columns: features
            .descriptors()
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let cells = features.column(k).iter().map(|&b| if b { "1" } else { "0" }.to_string()).collect();
                dataset::RawColumn::categorical(d.predicate.clone(), cells)
            })
            .collect(),
    };
    Ok(EmbeddingTree {
        params: TreeParams {
            criteria,
            binning: BinningSpec::default(),
            split: options.split,
            schema: Schema::new(),
        },
        fingerprint: dataset::fingerprint(embeddings, &table),
        features: features.descriptors().to_vec(),
        root,
    })
}

/// Binarizes the raw feature table and builds the tree over it.
pub fn build_tree_from_table<T: Scalar>(
    embeddings: &EmbeddingMatrix<T>,
    table: &RawFeatureTable,
    bin_count: usize,
    criteria: StoppingCriteria,
    options: &BuildOptions,
) -> Result<EmbeddingTree<T>> {
    if table.ids != embeddings.ids() {
        return Err(Error::InvalidParameter("feature table is not aligned with the embeddings".into()));
    }
    let (features, binning) = binarize(table, bin_count)?;
    let mut tree = build_tree(embeddings, &features, criteria, options)?;
    tree.params.binning = binning;
    tree.params.schema = table.schema();
    tree.fingerprint = dataset::fingerprint(embeddings, table);
    Ok(tree)
}
