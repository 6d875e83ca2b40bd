//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numeric code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use embtree_core::dataset::{BinaryFeatureMatrix, EmbeddingMatrix};
use embtree_core::tree::{EmbeddingTree, NodeKind, TreeNode};

/// Variance floor: `1e-12 * range²`, never below `1e-300`.
pub fn floor_for(scores: &[f64]) -> f64 {
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (1e-12 * (hi - lo) * (hi - lo)).max(1e-300)
}

/// Hard two-Gaussian log-likelihood written term by term; `None` when a
/// side is empty.
pub fn direct_two_gaussian(scores: &[f64], bits: &[bool], floor: f64) -> Option<f64> {
    let n = scores.len() as f64;
    let mut total = 0.0;
    for side in [false, true] {
        let group: Vec<f64> = scores.iter().zip(bits).filter(|(_, &b)| b == side).map(|(&x, _)| x).collect();
        if group.is_empty() {
            return None;
        }
        let k = group.len() as f64;
        let mean = group.iter().sum::<f64>() / k;
        let var = group.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
        let var = if var < floor { floor } else { var };
        total += -(k / 2.0) * (2.0 * std::f64::consts::PI * var).ln() + k * (k / n).ln();
    }
    Some(total)
}

/// Population covariance of the given rows, row-major `p x p`.
pub fn covariance(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mut mean = vec![0.0; p];
    for r in rows {
        for j in 0..p {
            mean[j] += r[j] / n;
        }
    }
    let mut cov = vec![0.0; p * p];
    for r in rows {
        for a in 0..p {
            for b in 0..p {
                cov[a * p + b] += (r[a] - mean[a]) * (r[b] - mean[b]) / n;
            }
        }
    }
    (mean, cov)
}

/// Leading eigenpairs of a symmetric matrix via nalgebra, descending.
pub fn reference_eigen(cov: &[f64], p: usize) -> Vec<(f64, Vec<f64>)> {
    let m = nalgebra::DMatrix::from_row_slice(p, p, cov);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..p)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().cloned().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pairs
}

/// First principal scores of a set of rows using the nalgebra oracle.
pub fn reference_scores(rows: &[&[f64]]) -> Vec<f64> {
    let p = rows[0].len();
    let (mean, cov) = covariance(rows);
    let (_, v) = reference_eigen(&cov, p).swap_remove(0);
    rows.iter().map(|r| r.iter().zip(&mean).zip(&v).map(|((x, m), c)| (x - m) * c).sum()).collect()
}

/// Arithmetic mean of the selected rows.
pub fn mean_of(embeddings: &EmbeddingMatrix<f64>, members: &[usize]) -> Vec<f64> {
    let mut sum = vec![0.0; embeddings.dim()];
    for &i in members {
        for (s, x) in sum.iter_mut().zip(embeddings.row(i)) {
            *s += x;
        }
    }
    sum.into_iter().map(|s| s / members.len() as f64).collect()
}

/// Exhaustive structural audit. Returns a description of the first
/// violation found.
pub fn audit_partition(tree: &EmbeddingTree<f64>, bits: &BinaryFeatureMatrix, n: usize) -> Result<(), String> {
    fn walk(
        node: &TreeNode<f64>,
        members: &BTreeSet<usize>,
        bits: &BinaryFeatureMatrix,
        ids: &mut BTreeSet<usize>,
    ) -> Result<usize, String> {
        if !ids.insert(node.id) {
            return Err(format!("node id {} repeated", node.id));
        }
        if node.count != members.len() {
            return Err(format!("node {} count {} but {} members", node.id, node.count, members.len()));
        }
        match &node.kind {
            NodeKind::Leaf { entities } => {
                let set: BTreeSet<usize> = entities.iter().copied().collect();
                if set.len() != entities.len() || &set != members {
                    return Err(format!("leaf {} entities differ from its partition", node.id));
                }
                Ok(entities.len())
            }
            NodeKind::Internal { split, left, right } => {
                let f = split.feature_index;
                let zero: BTreeSet<usize> = members.iter().copied().filter(|&i| !bits.bit(i, f)).collect();
                let one: BTreeSet<usize> = members.iter().copied().filter(|&i| bits.bit(i, f)).collect();
                if left.members().into_iter().collect::<BTreeSet<_>>() != zero {
                    return Err(format!("left child of {} is not the bit-0 set", node.id));
                }
                if right.members().into_iter().collect::<BTreeSet<_>>() != one {
                    return Err(format!("right child of {} is not the bit-1 set", node.id));
                }
                if left.depth != node.depth + 1 || right.depth != node.depth + 1 {
                    return Err(format!("children of {} have wrong depth", node.id));
                }
                Ok(walk(left, &zero, bits, ids)? + walk(right, &one, bits, ids)?)
            }
        }
    }
    let all: BTreeSet<usize> = (0..n).collect();
    let mut ids = BTreeSet::new();
    let total = walk(&tree.root, &all, bits, &mut ids)?;
    if total != n {
        return Err(format!("leaf counts sum to {total}, expected {n}"));
    }
    let mut seen = vec![0usize; n];
    for leaf in tree.leaves() {
        for &e in leaf.entities().unwrap() {
            seen[e] += 1;
        }
    }
    if let Some(e) = seen.iter().position(|&c| c != 1) {
        return Err(format!("entity {e} appears in {} leaves", seen[e]));
    }
    let bfs: Vec<usize> = tree.nodes().iter().map(|n| n.id).collect();
    if bfs != (0..bfs.len()).collect::<Vec<_>>() {
        return Err("node ids are not breadth-first".into());
    }
    Ok(())
}
