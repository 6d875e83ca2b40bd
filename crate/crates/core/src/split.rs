//! Split scoring with a hard-assignment two-Gaussian mixture.
//!
//! A binary feature partitions a node's projected scores into two groups.
//! Each group is fit by one Gaussian at its maximum-likelihood estimates and
//! the mixture weights are the group fractions, giving
//!
//! ```text
//! L = -(s/2) ln(2π σ1²) - ((N-s)/2) ln(2π σ2²) + s ln w1 + (N-s) ln w2
//! ```
//!
//! where `s` is the number of entities with bit 0. Membership comes straight
//! from the feature bit, so no latent assignment is ever estimated. Terms that
//! do not depend on the fitted parameters are dropped, and every candidate
//! split has the same parameter count, so the score ranks features the same
//! way a BIC would.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::BinaryFeatureMatrix;
use crate::Scalar;

pub const DEFAULT_VARIANCE_FLOOR_SCALE: f64 = 1e-12;
pub const DEFAULT_MIN_SIDE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Smallest admissible group size on either side.
    pub min_side: usize,
    /// Variance floor as a fraction of the squared score range.
    pub variance_floor_scale: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { min_side: DEFAULT_MIN_SIDE, variance_floor_scale: DEFAULT_VARIANCE_FLOOR_SCALE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEvaluation<T> {
    pub feature_index: usize,
    /// Entities with bit 0 (left group).
    pub s: usize,
    /// Entities with bit 1 (right group).
    pub n_minus_s: usize,
    pub mu1: T,
    pub mu2: T,
    /// Maximum-likelihood (population) variances before flooring.
    pub var1: T,
    pub var2: T,
    pub w1: T,
    pub w2: T,
    /// Negative infinity when the split is invalid.
    pub log_likelihood: T,
    pub valid: bool,
}

/// Variance floor for a set of scores: `scale * range²`, bounded below by
/// the scalar type's minimum.
pub fn variance_floor<T: Scalar>(scores: &[T], scale: f64) -> T {
    let (lo, hi) = scores
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = if scores.is_empty() { T::zero() } else { hi - lo };
    (T::of(scale) * range * range).max(T::variance_floor_min())
}

/// Scores one feature over the full score vector with default settings.
pub fn embedding_bic<T: Scalar>(scores: &[T], bits: &[bool]) -> SplitEvaluation<T> {
    assert_eq!(scores.len(), bits.len(), "one bit per score");
    let config = SplitConfig::default();
    let floor = variance_floor(scores, config.variance_floor_scale);
    evaluate_split(scores, |i| bits[i], 0, floor, config.min_side)
}

/// Scores the partition induced by `bit(i)` over `scores`.
pub fn evaluate_split<T: Scalar>(
    scores: &[T],
    bit: impl Fn(usize) -> bool,
    feature_index: usize,
    floor: T,
    min_side: usize,
) -> SplitEvaluation<T> {
    let n = scores.len();
    let (mut sum0, mut sum1) = (T::zero(), T::zero());
    let mut s = 0usize;
    for (i, &x) in scores.iter().enumerate() {
        if bit(i) {
            sum1 += x;
        } else {
            sum0 += x;
            s += 1;
        }
    }
    let n1 = n - s;
    let mut eval = SplitEvaluation {
        feature_index,
        s,
        n_minus_s: n1,
        mu1: T::zero(),
        mu2: T::zero(),
        var1: T::zero(),
        var2: T::zero(),
        w1: T::zero(),
        w2: T::zero(),
        log_likelihood: T::neg_infinity(),
        valid: false,
    };
    if n > 0 {
        eval.w1 = T::of_usize(s) / T::of_usize(n);
        eval.w2 = T::of_usize(n1) / T::of_usize(n);
    }
    if s == 0 || n1 == 0 {
        if s > 0 {
            eval.mu1 = sum0 / T::of_usize(s);
        }
        if n1 > 0 {
            eval.mu2 = sum1 / T::of_usize(n1);
        }
        return eval;
    }

    let (fs, fn1) = (T::of_usize(s), T::of_usize(n1));
    eval.mu1 = sum0 / fs;
    eval.mu2 = sum1 / fn1;
    let (mut ss0, mut ss1) = (T::zero(), T::zero());
    for (i, &x) in scores.iter().enumerate() {
        if bit(i) {
            ss1 += (x - eval.mu2) * (x - eval.mu2);
        } else {
            ss0 += (x - eval.mu1) * (x - eval.mu1);
        }
    }
    eval.var1 = ss0 / fs;
    eval.var2 = ss1 / fn1;
    if s < min_side || n1 < min_side {
        return eval;
    }
    eval.log_likelihood = two_gaussian_log_likelihood(s, n1, eval.var1, eval.var2, floor);
    eval.valid = true;
    eval
}

/// Closed-form maximized log-likelihood of a hard two-group Gaussian fit.
pub fn two_gaussian_log_likelihood<T: Scalar>(n0: usize, n1: usize, var0: T, var1: T, floor: T) -> T {
    let half = T::of(0.5);
    let two_pi = T::two_pi();
    let (f0, f1) = (T::of_usize(n0), T::of_usize(n1));
    let total = f0 + f1;
    -half * f0 * (two_pi * var0.max(floor)).ln() - half * f1 * (two_pi * var1.max(floor)).ln()
        + f0 * (f0 / total).ln()
        + f1 * (f1 / total).ln()
}

/// Bit access for candidate features.
pub trait FeatureBits: Sync {
    fn bit(&self, row: usize, feature: usize) -> bool;
}

impl FeatureBits for BinaryFeatureMatrix {
    fn bit(&self, row: usize, feature: usize) -> bool {
        BinaryFeatureMatrix::bit(self, row, feature)
    }
}

/// A subset of rows of a [`BinaryFeatureMatrix`]; row `i` of the view is
/// row `rows[i]` of the matrix.
#[derive(Debug, Clone, Copy)]
pub struct SubsetBits<'a> {
    pub matrix: &'a BinaryFeatureMatrix,
    pub rows: &'a [usize],
}

impl FeatureBits for SubsetBits<'_> {
    fn bit(&self, row: usize, feature: usize) -> bool {
        self.matrix.bit(self.rows[row], feature)
    }
}

/// Evaluates every active feature and returns the valid evaluation with the
/// largest log-likelihood; ties go to the lowest feature index. The parallel
/// path produces the same result as the sequential one.
pub fn best_split<T: Scalar, B: FeatureBits>(
    scores: &[T],
    bits: &B,
    active_features: &[usize],
    config: &SplitConfig,
    parallel: bool,
) -> Option<SplitEvaluation<T>> {
    let floor = variance_floor(scores, config.variance_floor_scale);
    let eval = |&k: &usize| evaluate_split(scores, |i| bits.bit(i, k), k, floor, config.min_side);
    let evaluations: Vec<SplitEvaluation<T>> = if parallel {
        active_features.par_iter().map(eval).collect()
    } else {
        active_features.iter().map(eval).collect()
    };
    evaluations.into_iter().filter(|e| e.valid).fold(None, |best, e| match best {
        Some(b) if !better(&e, &b) => Some(b),
        _ => Some(e),
    })
}

fn better<T: Scalar>(candidate: &SplitEvaluation<T>, incumbent: &SplitEvaluation<T>) -> bool {
    candidate.log_likelihood > incumbent.log_likelihood
        || (candidate.log_likelihood == incumbent.log_likelihood && candidate.feature_index < incumbent.feature_index)
}
