use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::binning::{bin_numeric, BinningSpec};
use super::{FeatureKind, RawColumn, RawFeatureTable};

/// How a binary column was derived from its source feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivedKind {
    /// `source == value` for a categorical label.
    CategoricalEquals { value: String },
    /// Numeric value falls in percentile bucket `bin`, spanning `[low, high)`.
    NumericBin { bin: usize, low: Option<f64>, high: Option<f64> },
    /// Source feature already takes only the values 0 and 1; the column is the value itself.
    Indicator,
}

/// Provenance of one derived binary column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    /// Raw feature the column was derived from.
    #[serde(rename = "name")]
    pub source: String,
    pub predicate: String,
    #[serde(flatten)]
    pub kind: DerivedKind,
}

/// Column-major N x q bit matrix with one descriptor per column.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFeatureMatrix {
    rows: usize,
    columns: Vec<Vec<bool>>,
    descriptors: Vec<FeatureDescriptor>,
}

impl BinaryFeatureMatrix {
    /// Builds a matrix from raw columns; each column must have `rows` entries.
    pub fn from_columns(rows: usize, columns: Vec<Vec<bool>>, descriptors: Vec<FeatureDescriptor>) -> Self {
        assert_eq!(columns.len(), descriptors.len(), "one descriptor per column");
        assert!(columns.iter().all(|c| c.len() == rows), "column length must equal row count");
        Self { rows, columns, descriptors }
    }

    /// Plain indicator columns named `f0, f1, ...`; handy for synthetic data.
    pub fn from_indicator_columns(rows: usize, columns: Vec<Vec<bool>>) -> Self {
        let descriptors = (0..columns.len())
            .map(|k| FeatureDescriptor {
                source: format!("f{k}"),
                predicate: format!("f{k}==1"),
                kind: DerivedKind::Indicator,
            })
            .collect();
        Self::from_columns(rows, columns, descriptors)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn bit(&self, row: usize, feature: usize) -> bool {
        self.columns[feature][row]
    }

    pub fn column(&self, feature: usize) -> &[bool] {
        &self.columns[feature]
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }
}

fn is_binary_source(column: &RawColumn) -> bool {
    match column.kind {
        FeatureKind::Numeric => column.numbers.iter().all(|&v| v == 0.0 || v == 1.0),
        FeatureKind::Categorical => column.cells.iter().all(|c| c == "0" || c == "1"),
    }
}

fn value_is_one(column: &RawColumn, row: usize) -> bool {
    match column.kind {
        FeatureKind::Numeric => column.numbers[row] == 1.0,
        FeatureKind::Categorical => column.cells[row] == "1",
    }
}

/// Expands every raw feature into binary indicator columns.
///
/// Categorical features yield one column per distinct label in lexicographic
/// order. Numeric features are split into `bin_count` percentile buckets
/// first, one column per bucket. Features whose values are all 0 or 1 pass
/// through as a single column. Returns the matrix and the cut points used,
/// which later route unseen entities the same way.
pub fn binarize(table: &RawFeatureTable, bin_count: usize) -> Result<(BinaryFeatureMatrix, BinningSpec)> {
    let n = table.len();
    let mut spec = BinningSpec::new(bin_count);
    spec.validate()?;
    let mut columns = Vec::new();
    let mut descriptors = Vec::new();

    for column in &table.columns {
        let name = &column.name;
        if is_binary_source(column) {
            columns.push((0..n).map(|r| value_is_one(column, r)).collect());
            descriptors.push(FeatureDescriptor {
                source: name.clone(),
                predicate: format!("{name}==1"),
                kind: DerivedKind::Indicator,
            });
            continue;
        }
        match column.kind {
            FeatureKind::Categorical => {
                let labels: BTreeSet<&str> = column.cells.iter().map(String::as_str).collect();
                for label in labels {
                    columns.push(column.cells.iter().map(|c| c == label).collect());
                    descriptors.push(FeatureDescriptor {
                        source: name.clone(),
                        predicate: format!("{name}=={label}"),
                        kind: DerivedKind::CategoricalEquals { value: label.to_string() },
                    });
                }
            }
            FeatureKind::Numeric => {
                let (bins, cuts) = bin_numeric(&column.numbers, bin_count)?;
                for b in 0..bin_count {
                    columns.push(bins.iter().map(|&x| x == b).collect());
                    descriptors.push(FeatureDescriptor {
                        source: name.clone(),
                        predicate: format!("{name}∈bin{b}"),
                        kind: DerivedKind::NumericBin {
                            bin: b,
                            low: b.checked_sub(1).map(|i| cuts[i]),
                            high: cuts.get(b).copied(),
                        },
                    });
                }
                spec.boundaries.insert(name.clone(), cuts);
            }
        }
    }

    Ok((BinaryFeatureMatrix::from_columns(n, columns, descriptors), spec))
}
