//! Decision trees that organize embeddings by the features of the entities
//! they represent.
//!
//! Given an `N x p` embedding matrix and a table of entity features, the
//! tree is grown top-down: each node projects its members' embeddings onto
//! their leading principal direction and splits on the binary feature whose
//! two groups are best described by two Gaussians. The result orders
//! features by how strongly they shape the embedding space. Built trees can
//! then flag leaves that still contain several clusters, and place unseen
//! entities by routing their features to a leaf and taking its mean
//! embedding.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! command line tool and server use.
//!
//! ```
//! use embtree_core::{synthetic, tree::{build_tree_from_table, BuildOptions, StoppingCriteria}};
//!
//! let data = synthetic::four_blobs::<f64>(7, 20, 3);
//! let tree = build_tree_from_table(
//!     &data.embeddings,
//!     &data.features,
//!     3,
//!     StoppingCriteria::default(),
//!     &BuildOptions::default(),
//! )
//! .unwrap();
//! assert_eq!(tree.leaf_count(), 4);
//! ```

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod projection;
pub mod scalar;
pub mod split;
pub mod synthetic;
pub mod tree;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EmbeddingMatrix64 = dataset::EmbeddingMatrix<f64>;
pub type EmbeddingMatrix32 = dataset::EmbeddingMatrix<f32>;
pub type EmbeddingTree64 = tree::EmbeddingTree<f64>;
pub type EmbeddingTree32 = tree::EmbeddingTree<f32>;
pub type TreeNode64 = tree::TreeNode<f64>;
pub type SplitEvaluation64 = split::SplitEvaluation<f64>;
pub type PrincipalProjection64 = projection::PrincipalProjection<f64>;
pub type ConsistencyReport64 = analysis::ConsistencyReport<f64>;
pub type ColdStartResult64 = analysis::ColdStartResult<f64>;
