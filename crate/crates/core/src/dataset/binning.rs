use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BIN_COUNT: usize = 3;

/// Percentile binning of numeric features: the bucket count and, per
/// feature, the `bin_count - 1` cut points computed at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub bin_count: usize,
    #[serde(default)]
    pub boundaries: BTreeMap<String, Vec<f64>>,
}

impl Default for BinningSpec {
    fn default() -> Self {
        Self::new(DEFAULT_BIN_COUNT)
    }
}

impl BinningSpec {
    pub fn new(bin_count: usize) -> Self {
        Self { bin_count, boundaries: BTreeMap::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_count < 2 {
            return Err(Error::InvalidParameter(format!("bin count must be at least 2, got {}", self.bin_count)));
        }
        for (name, cuts) in &self.boundaries {
            if cuts.len() != self.bin_count - 1 {
                return Err(Error::InvalidParameter(format!(
                    "feature {name} has {} boundaries, expected {}",
                    cuts.len(),
                    self.bin_count - 1
                )));
            }
            if cuts.windows(2).any(|w| w[0] > w[1]) || cuts.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter(format!("feature {name} has unsorted boundaries")));
            }
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of already sorted data (Hyndman-Fan type 7).
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bin index for `value` given non-decreasing cut points.
///
/// Bins are half-open `[low, high)` with an unbounded first and last bin. A
/// value sitting on a boundary that repeats (a zero-width bin) falls into the
/// lowest bin whose upper edge is that value, so constant columns land in the
/// first bin.
pub fn assign_bin(value: f64, boundaries: &[f64]) -> usize {
    let k = boundaries.partition_point(|b| *b <= value);
    if k >= 2 && boundaries[k - 1] == value && boundaries[k - 2] == value {
        return boundaries.partition_point(|b| *b < value);
    }
    k
}

/// Splits a numeric column into `bin_count` percentile buckets. Returns the
/// bucket of every value and the cut points.
pub fn bin_numeric(values: &[f64], bin_count: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if bin_count < 2 {
        return Err(Error::InvalidParameter(format!("bin count must be at least 2, got {bin_count}")));
    }
    if values.len() < bin_count {
        return Err(Error::TooFewValues { bins: bin_count, values: values.len() });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let boundaries: Vec<f64> =
        (1..bin_count).map(|k| quantile(&sorted, k as f64 / bin_count as f64)).collect();
    let bins = values.iter().map(|&v| assign_bin(v, &boundaries)).collect();
    Ok((bins, boundaries))
}
