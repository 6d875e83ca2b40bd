//! Principal-component projection of a subset of embeddings.
//!
//! Every tree node projects its members onto their own leading principal
//! direction before scoring splits; the exploration view uses the top two.

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, symmetric_eigen};
use crate::Scalar;

/// Largest dimension for which the full covariance eigendecomposition is used.
pub const DENSE_EIGEN_MAX_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    /// Dense decomposition up to [`DENSE_EIGEN_MAX_DIM`], power iteration beyond.
    #[default]
    Auto,
    Dense,
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalProjection<T> {
    pub mean: Vec<T>,
    /// `k` orthonormal directions, largest variance first.
    pub components: Vec<Vec<T>>,
    /// Row-major `n x k` coordinates.
    pub scores: Vec<T>,
    pub explained_variance: Vec<T>,
}

impl<T: Scalar> PrincipalProjection<T> {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn len(&self) -> usize {
        self.scores.len() / self.k().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score(&self, row: usize, component: usize) -> T {
        self.scores[row * self.k() + component]
    }

    /// Coordinates along one component.
    pub fn scores_along(&self, component: usize) -> Vec<T> {
        let k = self.k();
        self.scores.iter().skip(component).step_by(k).copied().collect()
    }
}

/// Projects `rows` onto their top-`k` principal directions.
pub fn project<T: Scalar, R: AsRef<[T]>>(rows: &[R], k: usize) -> Result<PrincipalProjection<T>> {
    project_with(rows, k, EigenSolver::Auto)
}

pub fn project_with<T: Scalar, R: AsRef<[T]>>(
    rows: &[R],
    k: usize,
    solver: EigenSolver,
) -> Result<PrincipalProjection<T>> {
    let first = rows.first().ok_or(Error::EmptyDataset)?;
    let p = first.as_ref().len();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!("cannot take {k} components of {p}-dimensional data")));
    }
    if rows.iter().any(|r| r.as_ref().len() != p) {
        return Err(Error::InvalidParameter("rows differ in dimension".into()));
    }

    let mean = column_mean(rows, p);
    let cov = covariance(rows, &mean, p);
    let trace = (0..p).fold(T::zero(), |acc, i| acc + cov[i * p + i]);

    let (components, explained_variance) = if trace == T::zero() {
        (standard_basis(p, k), vec![T::zero(); k])
    } else {
        let use_dense = match solver {
            EigenSolver::Auto => p <= DENSE_EIGEN_MAX_DIM,
            EigenSolver::Dense => true,
            EigenSolver::PowerIteration => false,
        };
        let eig = if use_dense { symmetric_eigen(&cov, p) } else { power_iteration(&cov, p, k) };
        let mut components: Vec<Vec<T>> = eig.vectors.into_iter().take(k).collect();
        components.iter_mut().for_each(|c| fix_sign(c));
        let variance = eig.values.into_iter().take(k).map(|v| v.max(T::zero())).collect();
        (components, variance)
    };

    let mut scores = Vec::with_capacity(rows.len() * k);
    for row in rows {
        for c in &components {
            let s = row
                .as_ref()
                .iter()
                .zip(&mean)
                .zip(c)
                .fold(T::zero(), |acc, ((&x, &m), &w)| acc + (x - m) * w);
            scores.push(s);
        }
    }
    Ok(PrincipalProjection { mean, components, scores, explained_variance })
}

fn column_mean<T: Scalar, R: AsRef<[T]>>(rows: &[R], p: usize) -> Vec<T> {
    let mut mean = vec![T::zero(); p];
    for row in rows {
        mean.iter_mut().zip(row.as_ref()).for_each(|(m, &x)| *m += x);
    }
    let n = T::of_usize(rows.len());
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Population covariance (divided by n), row-major `p x p`.
fn covariance<T: Scalar, R: AsRef<[T]>>(rows: &[R], mean: &[T], p: usize) -> Vec<T> {
    let mut cov = vec![T::zero(); p * p];
    let mut centered = vec![T::zero(); p];
    for row in rows {
        centered.iter_mut().zip(row.as_ref()).zip(mean).for_each(|((c, &x), &m)| *c = x - m);
        for a in 0..p {
            let ca = centered[a];
            if ca == T::zero() {
                continue;
            }
            let out = &mut cov[a * p + a..(a + 1) * p];
            out.iter_mut().zip(&centered[a..]).for_each(|(o, &cb)| *o += ca * cb);
        }
    }
    let n = T::of_usize(rows.len());
    for a in 0..p {
        for b in a..p {
            let v = cov[a * p + b] / n;
            cov[a * p + b] = v;
            cov[b * p + a] = v;
        }
    }
    cov
}

fn standard_basis<T: Scalar>(p: usize, k: usize) -> Vec<Vec<T>> {
    (0..k).map(|i| (0..p).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect()
}

// Largest-magnitude entry (first on ties) made non-negative.
fn fix_sign<T: Scalar>(v: &mut [T]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
