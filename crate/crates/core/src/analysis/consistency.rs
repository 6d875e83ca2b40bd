use serde::Serialize;

use crate::dataset::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::projection::project;
use crate::split::{two_gaussian_log_likelihood, variance_floor};
use crate::tree::EmbeddingTree;
use crate::Scalar;

/// Parameters added by the second Gaussian: a mean, a variance and a weight.
const EXTRA_PARAMETERS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosisConfig {
    /// Smallest group either side of a threshold cut. Singletons have zero
    /// variance and would win on the variance floor alone.
    pub min_cluster_size: usize,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        Self { min_cluster_size: 2 }
    }
}

/// Best cut of sorted 1D scores into a low and a high group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSplit<T> {
    /// Midpoint between the two scores on either side of the cut.
    pub threshold: T,
    /// Entities strictly below the threshold.
    pub below: usize,
    pub log_likelihood: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence<T> {
    pub single_log_likelihood: T,
    pub split: Option<ThresholdSplit<T>>,
    /// BIC penalty `(3/2) ln n`.
    pub penalty: T,
    /// Two-group minus one-group log-likelihood minus the penalty.
    pub penalized_delta: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport<T> {
    pub leaf_id: usize,
    pub count: usize,
    pub verdict: Verdict,
    pub cluster_count_estimate: u8,
    pub evidence: Evidence<T>,
}

/// Scans every cut between distinct consecutive sorted scores that leaves at
/// least `min_size` entities on each side and returns the one with the
/// highest two-Gaussian log-likelihood (lowest cut on ties).
pub fn best_threshold_split<T: Scalar>(scores: &[T], floor: T, min_size: usize) -> Option<ThresholdSplit<T>> {
    let n = scores.len();
    let min_size = min_size.max(1);
    if n < 2 * min_size {
        return None;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));

    // Welford running moments from the left and from the right.
    let prefix = running_moments(sorted.iter().copied());
    let suffix = {
        let mut s = running_moments(sorted.iter().rev().copied());
        s.reverse();
        s
    };

    let mut best: Option<ThresholdSplit<T>> = None;
    for cut in min_size..=n - min_size {
        if sorted[cut - 1] == sorted[cut] {
            continue;
        }
        let left_var = prefix[cut].1 / T::of_usize(cut);
        let right_var = suffix[cut].1 / T::of_usize(n - cut);
        let ll = two_gaussian_log_likelihood(cut, n - cut, left_var, right_var, floor);
        if best.is_none_or(|b| ll > b.log_likelihood) {
            let threshold = (sorted[cut - 1] + sorted[cut]) * T::of(0.5);
            best = Some(ThresholdSplit { threshold, below: cut, log_likelihood: ll });
        }
    }
    best
}

// Entry c holds (mean, sum of squared deviations) of the first c items.
fn running_moments<T: Scalar>(items: impl Iterator<Item = T>) -> Vec<(T, T)> {
    let mut out = vec![(T::zero(), T::zero())];
    let (mut mean, mut m2) = (T::zero(), T::zero());
    for (i, x) in items.enumerate() {
        let delta = x - mean;
        mean += delta / T::of_usize(i + 1);
        m2 += delta * (x - mean);
        out.push((mean, m2));
    }
    out
}

fn single_gaussian_log_likelihood<T: Scalar>(scores: &[T], floor: T) -> T {
    let n = T::of_usize(scores.len());
    let mean = scores.iter().copied().sum::<T>() / n;
    let var = scores.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    -T::of(0.5) * n * (T::two_pi() * var.max(floor)).ln()
}

/// Diagnoses a leaf with the default configuration.
pub fn diagnose_leaf<T: Scalar>(
    tree: &EmbeddingTree<T>,
    embeddings: &EmbeddingMatrix<T>,
    leaf_id: usize,
) -> Result<ConsistencyReport<T>> {
    diagnose_leaf_with(tree, embeddings, leaf_id, &DiagnosisConfig::default())
}

/// Projects a leaf's embeddings onto their leading principal direction and
/// compares one Gaussian against the best threshold split into two. The leaf
/// is inconsistent when the gain in log-likelihood exceeds `(3/2) ln n`.
pub fn diagnose_leaf_with<T: Scalar>(
    tree: &EmbeddingTree<T>,
    embeddings: &EmbeddingMatrix<T>,
    leaf_id: usize,
    config: &DiagnosisConfig,
) -> Result<ConsistencyReport<T>> {
    if embeddings.len() != tree.entity_count() {
        return Err(Error::InvalidParameter(format!(
            "tree covers {} entities but {} embeddings were given",
            tree.entity_count(),
            embeddings.len()
        )));
    }
    if embeddings.dim() != tree.root.mean.len() {
        return Err(Error::InvalidParameter("embedding dimension differs from the tree".into()));
    }
    let node = tree.node(leaf_id).ok_or(Error::UnknownNode(leaf_id))?;
    let entities = node.entities().ok_or(Error::NotALeaf(leaf_id))?;
    let required = 2 * tree.params.split.min_side.max(1);
    if entities.len() < required {
        return Err(Error::LeafTooSmall { leaf: leaf_id, count: entities.len(), required });
    }

    let rows: Vec<&[T]> = entities.iter().map(|&i| embeddings.row(i)).collect();
    let scores = project(&rows, 1)?.scores;
    let floor = variance_floor(&scores, tree.params.split.variance_floor_scale);
    let single = single_gaussian_log_likelihood(&scores, floor);
    let min_size = config.min_cluster_size.max(tree.params.split.min_side);
    let split = best_threshold_split(&scores, floor, min_size);
    let penalty = T::of(EXTRA_PARAMETERS / 2.0) * T::of_usize(scores.len()).ln();
    let penalized_delta = split.map(|s| s.log_likelihood - single - penalty);
    let inconsistent = penalized_delta.is_some_and(|d| d > T::zero());

    Ok(ConsistencyReport {
        leaf_id,
        count: entities.len(),
        verdict: if inconsistent { Verdict::Inconsistent } else { Verdict::Consistent },
        cluster_count_estimate: if inconsistent { 2 } else { 1 },
        evidence: Evidence { single_log_likelihood: single, split, penalty, penalized_delta },
    })
}
