//! Small dense symmetric eigensolvers.
//!
//! The dense path follows the classic Householder tridiagonalization and
//! implicit QL iteration, which is written in terms of row and column
//! indices throughout.

#![allow(clippy::needless_range_loop)]

use crate::Scalar;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
/// `vectors[i]` is the unit eigenvector for `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

/// Full eigendecomposition of the row-major symmetric `n x n` matrix `a` by
/// Householder tridiagonalization followed by implicit QL iterations.
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> SymmetricEigen<T> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return SymmetricEigen { values: Vec::new(), vectors: Vec::new() };
    }
    let mut v = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e, n);
    ql_implicit(&mut v, &mut d, &mut e, n);

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps index order for equal eigenvalues
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order.iter().map(|&c| (0..n).map(|r| v[r * n + c]).collect()).collect();
    SymmetricEigen { values, vectors }
}

fn tridiagonalize<T: Scalar>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    let at = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
                v[at(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let idx = at(k, j);
                    v[idx] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    let idx = at(k, j);
                    v[idx] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = T::zero();
    }
    v[at(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

const MAX_QL_SWEEPS: usize = 200;

fn ql_implicit<T: Scalar>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    let at = |r: usize, c: usize| r * n + c;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let two = T::of(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = v[at(k, i + 1)];
                        v[at(k, i + 1)] = s * v[at(k, i)] + c * hk;
                        v[at(k, i)] = c * v[at(k, i)] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || sweeps >= MAX_QL_SWEEPS {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
}

pub const POWER_TOLERANCE: f64 = 1e-9;
pub const POWER_MAX_ITERATIONS: usize = 1000;

/// Top-`k` eigenpairs of a symmetric positive semi-definite matrix by power
/// iteration with deflation. Iteration stops when successive unit directions
/// differ by at most [`POWER_TOLERANCE`] in norm (up to sign), or after
/// [`POWER_MAX_ITERATIONS`].
pub fn power_iteration<T: Scalar>(a: &[T], n: usize, k: usize) -> SymmetricEigen<T> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<T>> = Vec::with_capacity(k);
    let tol = T::of(POWER_TOLERANCE);

    for _ in 0..k.min(n) {
        let mut v = start_vector(&m, n, &vectors);
        let mut next = vec![T::zero(); n];
        for _ in 0..POWER_MAX_ITERATIONS {
            mat_vec(&m, n, &v, &mut next);
            let norm = dot(&next, &next).sqrt();
            if norm == T::zero() {
                break;
            }
            next.iter_mut().for_each(|x| *x /= norm);
            let sign = if dot(&v, &next) < T::zero() { -T::one() } else { T::one() };
            let change = v.iter().zip(&next).fold(T::zero(), |acc, (&a, &b)| acc + (b - sign * a).powi(2)).sqrt();
            std::mem::swap(&mut v, &mut next);
            if change <= tol {
                break;
            }
        }
        mat_vec(&m, n, &v, &mut next);
        let lambda = dot(&v, &next).max(T::zero());
        for r in 0..n {
            for c in 0..n {
                m[r * n + c] -= lambda * v[r] * v[c];
            }
        }
        values.push(lambda);
        vectors.push(v);
    }
    SymmetricEigen { values, vectors }
}

fn mat_vec<T: Scalar>(m: &[T], n: usize, v: &[T], out: &mut [T]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&m[r * n..(r + 1) * n], v);
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

// Column with the largest diagonal entry, orthogonalized against the
// vectors already found; falls back to the first standard basis vector
// that survives orthogonalization.
fn start_vector<T: Scalar>(m: &[T], n: usize, found: &[Vec<T>]) -> Vec<T> {
    let pivot = (0..n).fold(0, |best, i| if m[i * n + i] > m[best * n + best] { i } else { best });
    let candidates = std::iter::once((0..n).map(|r| m[r * n + pivot]).collect::<Vec<T>>())
        .chain((0..n).map(|i| (0..n).map(|r| if r == i { T::one() } else { T::zero() }).collect()));
    for mut v in candidates {
        for u in found {
            let proj = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, &y)| *x -= proj * y);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > T::of(1e-6) {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
    unreachable!("some standard basis vector is independent of fewer than n vectors")
}
