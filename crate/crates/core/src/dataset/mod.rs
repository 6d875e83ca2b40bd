//! Loading and preprocessing of embeddings and entity features.
//!
//! Embeddings arrive as a CSV with an id column followed by `p` coordinate
//! columns; features arrive as a second CSV keyed by the same ids. Features
//! are typed numeric or categorical (from a schema, or inferred) and then
//! expanded into binary indicator columns by [`binarize`].

mod binary;
mod binning;
mod load;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::Scalar;

pub use binary::{binarize, BinaryFeatureMatrix, DerivedKind, FeatureDescriptor};
pub use binning::{assign_bin, bin_numeric, quantile, BinningSpec, DEFAULT_BIN_COUNT};
pub use load::{load_dataset, load_dataset_files, read_schema, write_embeddings_csv, write_features_csv};

/// Embedding rows aligned with entity ids, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    ids: Vec<String>,
    values: Vec<T>,
    dim: usize,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(ids: Vec<String>, values: Vec<T>, dim: usize) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be at least 1".into()));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for {} rows of dimension {}, got {}",
                ids.len() * dim,
                ids.len(),
                dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim, dim: pos % dim });
        }
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { ids, values, dim })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(ids: Vec<String>, rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter("ragged embedding rows".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(ids, values, dim)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, index: usize) -> &[T] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    /// Arithmetic mean of the selected rows.
    pub fn mean_of(&self, indices: &[usize]) -> Vec<T> {
        let mut mean = vec![T::zero(); self.dim];
        for &i in indices {
            for (m, &v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        if !indices.is_empty() {
            let n = T::of_usize(indices.len());
            mean.iter_mut().for_each(|m| *m /= n);
        }
        mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// Feature name to kind, as stored in the sidecar schema JSON.
pub type Schema = BTreeMap<String, FeatureKind>;

/// One raw entity feature. `cells` keeps the original text; `numbers` holds
/// the parsed values for numeric columns and is empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub kind: FeatureKind,
    pub cells: Vec<String>,
    pub numbers: Vec<f64>,
}

impl RawColumn {
    pub fn categorical(name: impl Into<String>, cells: Vec<String>) -> Self {
        Self { name: name.into(), kind: FeatureKind::Categorical, cells, numbers: Vec::new() }
    }

    pub fn numeric(name: impl Into<String>, numbers: Vec<f64>) -> Self {
        let cells = numbers.iter().map(|v| render_number(*v)).collect();
        Self { name: name.into(), kind: FeatureKind::Numeric, cells, numbers }
    }
}

/// Raw feature table aligned row-for-row with an [`EmbeddingMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatureTable {
    pub ids: Vec<String>,
    pub columns: Vec<RawColumn>,
}

impl RawFeatureTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&RawColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn schema(&self) -> Schema {
        self.columns.iter().map(|c| (c.name.clone(), c.kind)).collect()
    }
}

/// Renders a number the way it is matched against categorical labels.
pub fn render_number(value: f64) -> String {
    format!("{value}")
}

/// SHA-256 over ids, embedding values and raw feature text, hex encoded.
///
/// Feature kinds are not hashed, so the fingerprint does not depend on
/// whether the types came from a schema or from inference.
pub fn fingerprint<T: Scalar>(embeddings: &EmbeddingMatrix<T>, features: &RawFeatureTable) -> String {
    let mut hasher = Sha256::new();
    let put_str = |h: &mut Sha256, s: &str| {
        h.update((s.len() as u64).to_le_bytes());
        h.update(s.as_bytes());
    };
    hasher.update((embeddings.len() as u64).to_le_bytes());
    hasher.update((embeddings.dim() as u64).to_le_bytes());
    for (id, row) in embeddings.ids().iter().zip(embeddings.rows()) {
        put_str(&mut hasher, id);
        for v in row {
            hasher.update(v.to_f64_lossy().to_bits().to_le_bytes());
        }
    }
    hasher.update((features.columns.len() as u64).to_le_bytes());
    for column in &features.columns {
        put_str(&mut hasher, &column.name);
        for cell in &column.cells {
            put_str(&mut hasher, cell);
        }
    }
    format!("{:x}", hasher.finalize())
}
