use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::Scalar;

use super::{EmbeddingMatrix, FeatureKind, RawColumn, RawFeatureTable, Schema};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Open { path: path.to_path_buf(), source })
}

fn csv_error(what: &str, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{what}: {other:?}")),
    }
}

/// Reads a schema sidecar: a JSON object mapping feature names to
/// `"numeric"` or `"categorical"`.
pub fn read_schema(path: &Path) -> Result<Schema> {
    let file = open(path)?;
    serde_json::from_reader(file).map_err(|e| Error::Parse(format!("schema {}: {e}", path.display())))
}

/// Opens and parses the embedding and feature CSV files.
pub fn load_dataset_files<T: Scalar>(
    embeddings: &Path,
    features: &Path,
    schema: Option<&Schema>,
) -> Result<(EmbeddingMatrix<T>, RawFeatureTable)> {
    let e = open(embeddings)?;
    let f = open(features)?;
    load_dataset(e, f, schema)
}

/// Parses both CSV sources and joins the feature rows onto the embedding
/// row order by id. Every id must appear in both sources exactly once.
pub fn load_dataset<T: Scalar, E: Read, F: Read>(
    embeddings: E,
    features: F,
    schema: Option<&Schema>,
) -> Result<(EmbeddingMatrix<T>, RawFeatureTable)> {
    let matrix = read_embeddings::<T, _>(embeddings)?;
    let (header, rows) = read_feature_rows(features)?;

    let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(rows.len());
    for (i, (id, _)) in rows.iter().enumerate() {
        if by_id.insert(id.as_str(), i).is_some() {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    let mut order = Vec::with_capacity(matrix.len());
    for id in matrix.ids() {
        match by_id.get(id.as_str()) {
            Some(&i) => order.push(i),
            None => return Err(Error::UnmatchedEntity(id.clone())),
        }
    }
    if rows.len() != matrix.len() {
        let known: std::collections::HashSet<&str> = matrix.ids().iter().map(String::as_str).collect();
        let extra = rows.iter().find(|(id, _)| !known.contains(id.as_str())).expect("row count mismatch implies an extra id");
        return Err(Error::UnmatchedEntity(extra.0.clone()));
    }

    if let Some(schema) = schema {
        if let Some(name) = schema.keys().find(|k| !header.contains(k)) {
            return Err(Error::InvalidParameter(format!("schema names unknown feature {name}")));
        }
    }

    let mut columns = Vec::with_capacity(header.len());
    for (c, name) in header.iter().enumerate() {
        let cells: Vec<String> = order.iter().map(|&r| rows[r].1[c].clone()).collect();
        if let Some(row) = cells.iter().position(|s| s.is_empty()) {
            return Err(Error::MissingCell { feature: name.clone(), row });
        }
        let kind = match schema.and_then(|s| s.get(name)) {
            Some(kind) => *kind,
            None if cells.iter().all(|s| parse_finite(s).is_some()) => FeatureKind::Numeric,
            None => FeatureKind::Categorical,
        };
        let numbers = match kind {
            FeatureKind::Categorical => Vec::new(),
            FeatureKind::Numeric => cells
                .iter()
                .enumerate()
                .map(|(row, s)| {
                    parse_finite(s).ok_or_else(|| Error::InvalidFeatureValue {
                        feature: name.clone(),
                        message: format!("row {row}: '{s}' is not a finite number"),
                    })
                })
                .collect::<Result<_>>()?,
        };
        columns.push(RawColumn { name: name.clone(), kind, cells, numbers });
    }

    let table = RawFeatureTable { ids: matrix.ids().to_vec(), columns };
    Ok((matrix, table))
}

/// Writes embeddings in the `id,d0,...` CSV layout.
pub fn write_embeddings_csv<T: Scalar, W: Write>(embeddings: &EmbeddingMatrix<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend((0..embeddings.dim()).map(|d| format!("d{d}")));
    w.write_record(&header).map_err(|e| csv_error("embeddings", e))?;
    for (id, row) in embeddings.ids().iter().zip(embeddings.rows()) {
        let mut record = vec![id.clone()];
        record.extend(row.iter().map(|v| format!("{}", v.to_f64_lossy())));
        w.write_record(&record).map_err(|e| csv_error("embeddings", e))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes raw features in the `id,<names...>` CSV layout.
pub fn write_features_csv<W: Write>(table: &RawFeatureTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(table.columns.iter().map(|c| c.name.clone()));
    w.write_record(&header).map_err(|e| csv_error("features", e))?;
    for (r, id) in table.ids.iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend(table.columns.iter().map(|c| c.cells[r].clone()));
        w.write_record(&record).map_err(|e| csv_error("features", e))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source)
}

fn read_embeddings<T: Scalar, R: Read>(source: R) -> Result<EmbeddingMatrix<T>> {
    let mut rdr = reader(source);
    let header = rdr.headers().map_err(|e| csv_error("embeddings header", e))?.clone();
    if header.len() < 2 {
        return Err(Error::Parse("embeddings header needs an id column and at least one dimension".into()));
    }
    let dim = header.len() - 1;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error("embeddings", e))?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!(
                "embeddings row {row}: expected {} fields, got {}",
                header.len(),
                record.len()
            )));
        }
        ids.push(record[0].to_string());
        for (d, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("embeddings row {row}, dim {d}: cannot parse '{cell}'")))?;
            let v = T::from_f64(v).filter(|x| x.is_finite()).ok_or(Error::NonFinite { row, dim: d })?;
            values.push(v);
        }
    }
    EmbeddingMatrix::new(ids, values, dim)
}

type FeatureRows = (Vec<String>, Vec<(String, Vec<String>)>);

fn read_feature_rows<R: Read>(source: R) -> Result<FeatureRows> {
    let mut rdr = reader(source);
    let header = rdr.headers().map_err(|e| csv_error("features header", e))?.clone();
    if header.is_empty() {
        return Err(Error::Parse("features header is empty".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(Error::Parse(format!("duplicate feature column {name}")));
        }
    }
    let mut rows = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error("features", e))?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!(
                "features row {row}: expected {} fields, got {}",
                header.len(),
                record.len()
            )));
        }
        let cells = record.iter().skip(1).map(str::to_string).collect();
        rows.push((record[0].to_string(), cells));
    }
    Ok((names, rows))
}
