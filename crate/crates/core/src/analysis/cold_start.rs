use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{assign_bin, render_number, BinningSpec, DerivedKind, FeatureDescriptor, FeatureKind, RawFeatureTable};
use crate::error::{Error, Result};
use crate::tree::{EmbeddingTree, NodeKind};
use crate::Scalar;

/// A raw feature value supplied for an unseen entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

/// Raw feature name to value.
pub type FeatureAssignment = BTreeMap<String, FeatureValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStep {
    pub node_id: usize,
    pub feature: usize,
    pub name: String,
    pub predicate: String,
    pub bit: bool,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColdStartResult<T> {
    pub leaf_id: usize,
    /// Mean embedding of the reached leaf.
    pub embedding: Vec<T>,
    pub path: Vec<PathStep>,
}

/// Raw features of a training row, in the form [`cold_start_embed`] takes.
pub fn assignment_for_row(table: &RawFeatureTable, row: usize) -> FeatureAssignment {
    table
        .columns
        .iter()
        .map(|c| {
            let value = match c.kind {
                FeatureKind::Numeric => FeatureValue::Number(c.numbers[row]),
                FeatureKind::Categorical => FeatureValue::Text(c.cells[row].clone()),
            };
            (c.name.clone(), value)
        })
        .collect()
}

fn as_number(name: &str, value: &FeatureValue) -> Result<f64> {
    let invalid = |message: String| Error::InvalidFeatureValue { feature: name.to_string(), message };
    match value {
        FeatureValue::Number(x) if x.is_finite() => Ok(*x),
        FeatureValue::Text(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| invalid(format!("'{s}' is not a finite number"))),
        other => Err(invalid(format!("expected a number, got {other:?}"))),
    }
}

fn as_label(value: &FeatureValue) -> String {
    match value {
        FeatureValue::Bool(b) => b.to_string(),
        FeatureValue::Number(x) => render_number(*x),
        FeatureValue::Text(s) => s.trim().to_string(),
    }
}

/// Evaluates one derived binary feature for a raw value. Numeric bins reuse
/// the cut points stored at training time.
pub fn descriptor_bit(descriptor: &FeatureDescriptor, value: &FeatureValue, binning: &BinningSpec) -> Result<bool> {
    let name = &descriptor.source;
    match &descriptor.kind {
        DerivedKind::CategoricalEquals { value: label } => Ok(as_label(value) == *label),
        DerivedKind::NumericBin { bin, .. } => {
            let cuts = binning.boundaries.get(name).ok_or_else(|| Error::InvalidFeatureValue {
                feature: name.clone(),
                message: "tree carries no bin boundaries for this feature".into(),
            })?;
            Ok(assign_bin(as_number(name, value)?, cuts) == *bin)
        }
        DerivedKind::Indicator => match value {
            FeatureValue::Bool(b) => Ok(*b),
            other => {
                let x = as_number(name, other)?;
                if x == 1.0 || x == 0.0 {
                    Ok(x == 1.0)
                } else {
                    Err(Error::InvalidFeatureValue { feature: name.clone(), message: format!("expected 0 or 1, got {x}") })
                }
            }
        },
    }
}

/// Routes an entity down the tree by its raw features and returns the mean
/// embedding of the leaf it reaches, with the path taken.
pub fn cold_start_embed<T: Scalar>(tree: &EmbeddingTree<T>, features: &FeatureAssignment) -> Result<ColdStartResult<T>> {
    let mut node = &tree.root;
    let mut path = Vec::new();
    while let NodeKind::Internal { split, left, right } = &node.kind {
        let k = split.feature_index;
        let descriptor = tree
            .features
            .get(k)
            .ok_or_else(|| Error::MalformedTree(format!("node {} splits on unknown feature {k}", node.id)))?;
        let value = features.get(&descriptor.source).ok_or_else(|| Error::MissingFeature(descriptor.source.clone()))?;
        let bit = descriptor_bit(descriptor, value, &tree.params.binning)?;
        path.push(PathStep {
            node_id: node.id,
            feature: k,
            name: descriptor.source.clone(),
            predicate: descriptor.predicate.clone(),
            bit,
            branch: if bit { Branch::Right } else { Branch::Left },
        });
        node = if bit { right } else { left };
    }
    Ok(ColdStartResult { leaf_id: node.id, embedding: node.mean.clone(), path })
}
