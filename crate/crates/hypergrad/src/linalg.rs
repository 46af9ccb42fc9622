//! Dense vector/matrix helpers.
//!
//! Vectors are plain `Vec<f64>`; the free functions here keep call sites
//! short and allocation-free where it matters. `DenseMatrix` is a row-major
//! square matrix used for quadratic objectives and full-matrix
//! preconditioners — problem sizes stay small enough that anything beyond a
//! straightforward O(n^2) kernel would be wasted machinery.

use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm2(a: &[f64]) -> f64 {
    norm2_sq(a).sqrt()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += alpha * x`, in place.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Fails with [`Error::NonFinite`] if any entry of `a` is NaN or infinite.
pub fn ensure_finite(a: &[f64], context: &str) -> Result<()> {
    if all_finite(a) {
        Ok(())
    } else {
        Err(Error::non_finite(context))
    }
}

pub fn ensure_finite_scalar(x: f64, context: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::non_finite(context))
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, alpha: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = alpha;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = *v;
        }
        m
    }

    /// Builds from a row-major slice of length `n*n`.
    pub fn from_rows(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n, "row data must have n*n entries");
        DenseMatrix {
            n,
            data: rows.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            out[i] = dot(&self.data[i * self.n..(i + 1) * self.n], x);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `self += alpha * u v^T`, in place.
    pub fn add_scaled_outer(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.n);
        debug_assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            let au = alpha * u[i];
            for (rj, vj) in row.iter_mut().zip(v) {
                *rj += au * vj;
            }
        }
    }

    /// `self + alpha * other`, elementwise.
    pub fn add_scaled(&self, alpha: f64, other: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        DenseMatrix { n: self.n, data }
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            n: self.n,
            data: scaled(alpha, &self.data),
        }
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// `Q^T diag(d) Q` for a square `q` holding rows of Q.
    pub fn conjugate_diagonal(q: &DenseMatrix, d: &[f64]) -> DenseMatrix {
        let n = q.n;
        debug_assert_eq!(d.len(), n);
        let mut out = Self::zeros(n);
        // out = sum_k d[k] * q_k q_k^T where q_k is the k-th row of Q
        for k in 0..n {
            let row = &q.data[k * n..(k + 1) * n];
            out.add_scaled_outer(d[k], row, row);
        }
        out
    }

    /// Cholesky factorization `A = L L^T` for symmetric positive definite
    /// input; returns the lower factor. Fails if a pivot is not positive.
    pub fn cholesky(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut l = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::non_finite("cholesky pivot (matrix not SPD)"));
                    }
                    l.set(i, j, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(l)
    }

    /// Solves `A x = b` via Cholesky for symmetric positive definite `A`.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>> {
        let l = self.cholesky()?;
        let n = self.n;
        // forward: L y = b
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        // backward: L^T x = y
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l.get(k, i) * x[k];
            }
            x[i] = s / l.get(i, i);
        }
        Ok(x)
    }

    /// Inverse of a symmetric positive definite matrix, column by column.
    pub fn inverse_spd(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve_spd(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        Ok(inv)
    }
}

/// Standard normal vector drawn from the given generator.
pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Box-Muller on uniform draws keeps the output stable across `rand`
    // distribution implementations.
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(r * theta.cos());
        if out.len() < n {
            out.push(r * theta.sin());
        }
    }
    out
}

/// Random orthogonal matrix: modified Gram-Schmidt applied to a Gaussian
/// matrix. Rows form an orthonormal basis.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let mut q = DenseMatrix::zeros(n);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v = gaussian_vector(rng, n);
        for prev in &rows {
            let proj = dot(&v, prev);
            axpy(-proj, prev, &mut v);
        }
        // Re-orthogonalize once; plain MGS loses orthogonality as n grows.
        for prev in &rows {
            let proj = dot(&v, prev);
            axpy(-proj, prev, &mut v);
        }
        let nrm = norm2(&v);
        if nrm < 1e-12 {
            continue;
        }
        rows.push(scaled(1.0 / nrm, &v));
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            q.set(i, j, *v);
        }
    }
    q
}

/// `count` points spaced logarithmically from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0, "logspace endpoints must be positive");
    if count == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
