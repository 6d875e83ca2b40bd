//! Seeded synthetic datasets with known feature hierarchies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{EmbeddingMatrix, RawColumn, RawFeatureTable};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct SyntheticDataset<T> {
    pub embeddings: EmbeddingMatrix<T>,
    pub features: RawFeatureTable,
}

fn entity_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len();
    (0..n).map(|i| format!("e{i:0width$}")).collect()
}

fn assemble<T: Scalar>(rows: Vec<Vec<f64>>, columns: Vec<RawColumn>) -> SyntheticDataset<T> {
    let ids = entity_ids(rows.len());
    let rows: Vec<Vec<T>> = rows.into_iter().map(|r| r.into_iter().map(T::of).collect()).collect();
    SyntheticDataset {
        embeddings: EmbeddingMatrix::from_rows(ids.clone(), &rows).expect("generated rows are valid"),
        features: RawFeatureTable { ids, columns },
    }
}

/// Independent fair binary features, feature `k` shifting its entities by
/// `separations[k]` along coordinate axis `k`, plus isotropic Gaussian noise
/// of standard deviation `sigma`. Features are numeric 0/1 columns named
/// `A`, `B`, `C`, ...
pub fn axis_hierarchy<T: Scalar>(seed: u64, n: usize, dim: usize, separations: &[f64], sigma: f64) -> SyntheticDataset<T> {
    assert!(separations.len() <= dim && separations.len() <= 26);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma is positive");
    let mut bits = vec![Vec::with_capacity(n); separations.len()];
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
        for (k, &sep) in separations.iter().enumerate() {
            let b = rng.gen_bool(0.5);
            if b {
                row[k] += sep;
            }
            bits[k].push(if b { 1.0 } else { 0.0 });
        }
        rows.push(row);
    }
    let columns = bits
        .into_iter()
        .enumerate()
        .map(|(k, b)| RawColumn::numeric(((b'A' + k as u8) as char).to_string(), b))
        .collect();
    assemble(rows, columns)
}

/// Four blobs of `per_blob` entities: feature `A` moves a blob 20 units
/// along the first axis, feature `B` moves it 2 units along the second.
/// Noise is Gaussian with standard deviation 0.25 in `dim >= 2` dimensions.
pub fn four_blobs<T: Scalar>(seed: u64, per_blob: usize, dim: usize) -> SyntheticDataset<T> {
    assert!(dim >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.25).unwrap();
    let (mut rows, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for blob in 0..4 {
        let (fa, fb) = (blob / 2, blob % 2);
        for _ in 0..per_blob {
            let mut row: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            row[0] += 20.0 * fa as f64;
            row[1] += 2.0 * fb as f64;
            rows.push(row);
            a.push(fa as f64);
            b.push(fb as f64);
        }
    }
    assemble(rows, vec![RawColumn::numeric("A", a), RawColumn::numeric("B", b)])
}

/// Large dataset for timing: `q` fair binary features, feature `k` shifting
/// entities along its own random unit direction by `8 / (k + 1)`, plus unit
/// Gaussian noise.
pub fn random_directions<T: Scalar>(seed: u64, n: usize, dim: usize, q: usize) -> SyntheticDataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let directions: Vec<Vec<f64>> = (0..q)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let mut bits = vec![Vec::with_capacity(n); q];
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        for (k, dir) in directions.iter().enumerate() {
            let b = rng.gen_bool(0.5);
            if b {
                let shift = 8.0 / (k + 1) as f64;
                row.iter_mut().zip(dir).for_each(|(x, d)| *x += shift * d);
            }
            bits[k].push(if b { 1.0 } else { 0.0 });
        }
        rows.push(row);
    }
    let columns = bits.into_iter().enumerate().map(|(k, b)| RawColumn::numeric(format!("f{k}"), b)).collect();
    assemble(rows, columns)
}
