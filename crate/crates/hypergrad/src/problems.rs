//! Smooth convex test problems behind a counting oracle.
//!
//! Three objective families are supported:
//!
//! - quadratic: `f(x) = 1/2 x^T A x - b^T x` with `A` symmetric PSD,
//! - logistic regression: `f(w) = (1/m) sum_i ln(1 + exp(-y_i <a_i, w>))
//!   + (lambda/2) ||w||^2`,
//! - smoothed (squared-hinge) SVM: `f(w) = (1/m) sum_i max(0, 1 - y_i
//!   <a_i, w>)^2 + (lambda/2) ||w||^2`.
//!
//! Every oracle carries a smoothness bound `L` and a strong-convexity
//! estimate `mu`, computed at construction: exact eigenvalue bounds for
//! quadratics (power iteration), and the standard data-dependent bounds
//! `sigma_max(X)^2/(4m) + lambda` (logistic) and `2 sigma_max(X)^2/m +
//! lambda` (squared hinge) otherwise. Gradient and function-value calls are
//! counted atomically so one oracle can be shared across concurrent runs.

use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Sparse design matrix in CSR layout plus `{-1,+1}` labels.
#[derive(Debug, Clone)]
pub struct SparseDataset {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    labels: Vec<f64>,
    n_features: usize,
}

impl SparseDataset {
    /// Builds a dataset from one `(index, value)` list per sample. Indices
    /// are 0-based here and must be strictly increasing within a row.
    pub fn from_rows(rows: &[Vec<(usize, f64)>], labels: &[f64]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::dim("dataset labels", rows.len(), labels.len()));
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut n_features = 0usize;
        indptr.push(0);
        for row in rows {
            let mut last: Option<usize> = None;
            for &(j, v) in row {
                if let Some(prev) = last {
                    if j <= prev {
                        return Err(Error::config(
                            "sparse row indices must be strictly increasing",
                        ));
                    }
                }
                if !v.is_finite() {
                    return Err(Error::non_finite("sparse row value"));
                }
                last = Some(j);
                n_features = n_features.max(j + 1);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        for &y in labels {
            if y != 1.0 && y != -1.0 {
                return Err(Error::config("labels must be -1 or +1"));
            }
        }
        Ok(SparseDataset {
            indptr,
            indices,
            values,
            labels: labels.to_vec(),
            n_features,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `(indices, values)` of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    /// `<a_i, x>` for row `i`.
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
    }

    /// `out += coef * a_i`.
    fn row_axpy(&self, i: usize, coef: f64, out: &mut [f64]) {
        let (idx, val) = self.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            out[j] += coef * v;
        }
    }

    /// `X^T (X v)`, the Gram operator used by the power iteration.
    fn gram_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for i in 0..self.n_samples() {
            let s = self.row_dot(i, v);
            self.row_axpy(i, s, &mut out);
        }
        out
    }
}

/// Detects the two-byte gzip magic prefix `0x1f 0x8b`.
fn is_gzip(prefix: &[u8]) -> bool {
    prefix.len() >= 2 && prefix[0] == 0x1f && prefix[1] == 0x8b
}

/// Loads a dataset in LIBSVM text format (`label idx:val idx:val ...` per
/// line, 1-based strictly increasing indices). Lines starting with `#` and
/// blank lines are skipped. Labels may be `-1/+1` or `0/1`; `0` is mapped to
/// `-1`. Gzip-compressed files are detected by their magic bytes and
/// decompressed transparently.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<SparseDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::DatasetIo {
        path: path.to_path_buf(),
        source,
    })?;
    let reader: Box<dyn Read> = if is_gzip(&bytes) {
        Box::new(flate2::read::GzDecoder::new(std::io::Cursor::new(bytes)))
    } else {
        Box::new(std::io::Cursor::new(bytes))
    };
    parse_libsvm(BufReader::new(reader), path)
}

fn parse_libsvm(reader: impl BufRead, path: &Path) -> Result<SparseDataset> {
    let perr = |line: usize, message: String| Error::DatasetParse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|source| Error::DatasetIo {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a first token");
        let raw: f64 = label_tok
            .parse()
            .map_err(|_| perr(lineno, format!("label is not numeric: {label_tok:?}")))?;
        let label = if raw == 0.0 {
            -1.0
        } else if raw == 1.0 || raw == -1.0 {
            raw
        } else {
            return Err(perr(
                lineno,
                format!("label must be -1, 0, or +1, got {raw}"),
            ));
        };
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut last_index = 0usize;
        for tok in tokens {
            let (idx_str, val_str) = tok
                .split_once(':')
                .ok_or_else(|| perr(lineno, format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx_str
                .parse()
                .map_err(|_| perr(lineno, format!("feature index is not numeric: {idx_str:?}")))?;
            if idx < 1 {
                return Err(perr(lineno, "feature indices are 1-based".into()));
            }
            if idx <= last_index {
                return Err(perr(
                    lineno,
                    format!(
                        "feature indices must be strictly increasing, got {idx} after {last_index}"
                    ),
                ));
            }
            let val: f64 = val_str
                .parse()
                .map_err(|_| perr(lineno, format!("feature value is not numeric: {val_str:?}")))?;
            if !val.is_finite() {
                return Err(perr(lineno, format!("feature value is not finite: {val}")));
            }
            last_index = idx;
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(perr(0, "file contains no samples".into()));
    }
    SparseDataset::from_rows(&rows, &labels)
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration with a
/// fixed deterministic start vector. Stops when the Rayleigh quotient is
/// stable to `rel_tol`; errors if the cap is hit first.
pub fn power_iteration<F>(apply: F, n: usize, rel_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = linalg::gaussian_vector(&mut rng, n);
    let nrm = linalg::norm2(&v);
    for vi in v.iter_mut() {
        *vi /= nrm;
    }
    let mut lambda = 0.0f64;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let av = apply(&v);
        linalg::ensure_finite(&av, "power iteration operator output")?;
        let new_lambda = linalg::dot(&v, &av);
        let av_norm = linalg::norm2(&av);
        if av_norm <= 1e-300 {
            // Operator annihilates the start vector: eigenvalue 0 within
            // numerical resolution (e.g. a shifted matrix with equal spectrum).
            return Ok(0.0);
        }
        residual = (new_lambda - lambda).abs();
        lambda = new_lambda;
        if residual <= rel_tol * lambda.abs().max(1e-300) {
            return Ok(lambda);
        }
        v = av.iter().map(|x| x / av_norm).collect();
    }
    Err(Error::NoConvergence {
        what: "power iteration".into(),
        iters: max_iter,
        residual,
    })
}

const POWER_ITER_TOL: f64 = 1e-12;
const POWER_ITER_CAP: usize = 200_000;

#[derive(Debug, Clone)]
enum ProblemKind {
    Quadratic { a: DenseMatrix, b: Vec<f64> },
    Logistic { data: SparseDataset, lambda: f64 },
    SmoothSvm { data: SparseDataset, lambda: f64 },
}

/// A smooth convex objective with counted gradient/value access.
#[derive(Debug)]
pub struct ProblemOracle {
    kind: ProblemKind,
    dim: usize,
    l_smooth: f64,
    mu_est: f64,
    known_optimum: Option<f64>,
    grad_calls: AtomicU64,
    fval_calls: AtomicU64,
}

/// Default ridge penalty for dataset-backed problems.
pub const DEFAULT_LAMBDA: f64 = 1e-4;

impl ProblemOracle {
    /// Quadratic `f(x) = 1/2 x^T A x - b^T x`. `A` must be symmetric PSD;
    /// the eigenvalue bounds are estimated by (shifted) power iteration and
    /// the optimal value `-1/2 b^T A^{-1} b` is precomputed when `A` is
    /// invertible.
    pub fn quadratic(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        let n = a.dim();
        if b.len() != n {
            return Err(Error::dim("quadratic linear term", n, b.len()));
        }
        linalg::ensure_finite(&b, "quadratic linear term")?;
        if !a.is_finite() {
            return Err(Error::non_finite("quadratic matrix"));
        }
        let scale = a.frobenius_norm().max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (a.get(i, j) - a.get(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::config("quadratic matrix must be symmetric"));
                }
            }
        }
        let l = power_iteration(|v| a.matvec(v), n, POWER_ITER_TOL, POWER_ITER_CAP)?;
        if l <= 0.0 {
            return Err(Error::config("quadratic matrix must be nonzero PSD"));
        }
        // lambda_min(A) = L - lambda_max(L I - A); the shifted matrix is PSD.
        let shifted_max = power_iteration(
            |v| {
                let av = a.matvec(v);
                v.iter().zip(&av).map(|(vi, avi)| l * vi - avi).collect()
            },
            n,
            POWER_ITER_TOL,
            POWER_ITER_CAP,
        )?;
        let mu = (l - shifted_max).max(0.0);
        Self::quadratic_with_bounds(a, b, l, mu)
    }

    /// Quadratic with caller-supplied eigenvalue bounds, for instances built
    /// from a known spectrum where the exact values are available.
    pub fn quadratic_with_bounds(a: DenseMatrix, b: Vec<f64>, l: f64, mu: f64) -> Result<Self> {
        let n = a.dim();
        if b.len() != n {
            return Err(Error::dim("quadratic linear term", n, b.len()));
        }
        if !(l > 0.0) || mu < 0.0 || mu > l {
            return Err(Error::config("need 0 <= mu <= L and L > 0"));
        }
        let known_optimum = if mu > 0.0 {
            let xstar = a.solve_spd(&b)?;
            Some(-0.5 * linalg::dot(&b, &xstar))
        } else if b.iter().all(|&bi| bi == 0.0) {
            Some(0.0)
        } else {
            None
        };
        Ok(ProblemOracle {
            kind: ProblemKind::Quadratic { a, b },
            dim: n,
            l_smooth: l,
            mu_est: mu,
            known_optimum,
            grad_calls: AtomicU64::new(0),
            fval_calls: AtomicU64::new(0),
        })
    }

    /// Regularized logistic regression over a sparse dataset.
    pub fn logistic(data: SparseDataset, lambda: f64) -> Result<Self> {
        Self::dataset_problem(data, lambda, false)
    }

    /// Regularized squared-hinge SVM over a sparse dataset.
    pub fn smooth_svm(data: SparseDataset, lambda: f64) -> Result<Self> {
        Self::dataset_problem(data, lambda, true)
    }

    fn dataset_problem(data: SparseDataset, lambda: f64, svm: bool) -> Result<Self> {
        if data.n_samples() == 0 {
            return Err(Error::config("dataset has no samples"));
        }
        if data.n_features() == 0 {
            return Err(Error::config("dataset has no features"));
        }
        if !(lambda >= 0.0) {
            return Err(Error::config("regularization must be nonnegative"));
        }
        let m = data.n_samples() as f64;
        let sigma_sq = power_iteration(
            |v| data.gram_apply(v),
            data.n_features(),
            POWER_ITER_TOL,
            POWER_ITER_CAP,
        )?;
        let l = if svm {
            2.0 * sigma_sq / m + lambda
        } else {
            sigma_sq / (4.0 * m) + lambda
        };
        let dim = data.n_features();
        let kind = if svm {
            ProblemKind::SmoothSvm { data, lambda }
        } else {
            ProblemKind::Logistic { data, lambda }
        };
        Ok(ProblemOracle {
            kind,
            dim,
            l_smooth: l,
            mu_est: lambda,
            known_optimum: None,
            grad_calls: AtomicU64::new(0),
            fval_calls: AtomicU64::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on the gradient Lipschitz constant.
    pub fn smoothness_bound(&self) -> f64 {
        self.l_smooth
    }

    /// Strong-convexity estimate: `lambda_min(A)` for quadratics, the ridge
    /// penalty for dataset problems.
    pub fn strong_convexity_estimate(&self) -> f64 {
        self.mu_est
    }

    /// Optimal objective value, when available in closed form.
    pub fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    /// The quadratic's matrix, when this oracle is a quadratic.
    pub fn quadratic_matrix(&self) -> Option<&DenseMatrix> {
        match &self.kind {
            ProblemKind::Quadratic { a, .. } => Some(a),
            _ => None,
        }
    }

    pub fn grad_calls(&self) -> u64 {
        self.grad_calls.load(Ordering::Relaxed)
    }

    pub fn fval_calls(&self) -> u64 {
        self.fval_calls.load(Ordering::Relaxed)
    }

    fn check_point(&self, x: &[f64], context: &str) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::dim(context, self.dim, x.len()));
        }
        linalg::ensure_finite(x, context)
    }

    /// Objective value at `x`. Counts one function-value call.
    pub fn eval_f(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x, "eval_f input")?;
        self.fval_calls.fetch_add(1, Ordering::Relaxed);
        let value = match &self.kind {
            ProblemKind::Quadratic { a, b } => {
                let ax = a.matvec(x);
                0.5 * linalg::dot(x, &ax) - linalg::dot(b, x)
            }
            ProblemKind::Logistic { data, lambda } => {
                let m = data.n_samples() as f64;
                let mut s = 0.0;
                for i in 0..data.n_samples() {
                    let margin = data.labels()[i] * data.row_dot(i, x);
                    s += softplus(-margin);
                }
                s / m + 0.5 * lambda * linalg::norm2_sq(x)
            }
            ProblemKind::SmoothSvm { data, lambda } => {
                let m = data.n_samples() as f64;
                let mut s = 0.0;
                for i in 0..data.n_samples() {
                    let margin = data.labels()[i] * data.row_dot(i, x);
                    let t = (1.0 - margin).max(0.0);
                    s += t * t;
                }
                s / m + 0.5 * lambda * linalg::norm2_sq(x)
            }
        };
        linalg::ensure_finite_scalar(value, "objective value")
    }

    /// Gradient at `x`. Counts one gradient call.
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, "eval_grad input")?;
        self.grad_calls.fetch_add(1, Ordering::Relaxed);
        let g = match &self.kind {
            ProblemKind::Quadratic { a, b } => {
                let mut g = a.matvec(x);
                linalg::axpy(-1.0, b, &mut g);
                g
            }
            ProblemKind::Logistic { data, lambda } => {
                let m = data.n_samples() as f64;
                let mut g = linalg::scaled(*lambda, x);
                for i in 0..data.n_samples() {
                    let y = data.labels()[i];
                    let margin = y * data.row_dot(i, x);
                    let coef = -y * sigmoid(-margin) / m;
                    data.row_axpy(i, coef, &mut g);
                }
                g
            }
            ProblemKind::SmoothSvm { data, lambda } => {
                let m = data.n_samples() as f64;
                let mut g = linalg::scaled(*lambda, x);
                for i in 0..data.n_samples() {
                    let y = data.labels()[i];
                    let margin = y * data.row_dot(i, x);
                    let t = (1.0 - margin).max(0.0);
                    if t > 0.0 {
                        data.row_axpy(i, -2.0 * t * y / m, &mut g);
                    }
                }
                g
            }
        };
        linalg::ensure_finite(&g, "gradient")?;
        Ok(g)
    }
}

/// Anything that can serve gradient and function values. Implemented by
/// [`ProblemOracle`] and by counting wrappers that charge calls to a
/// specific run.
pub trait Oracle {
    fn dim(&self) -> usize;
    fn eval_f(&self, x: &[f64]) -> Result<f64>;
    fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// The concrete problem behind this oracle, when there is one, so run
    /// drivers can reach problem metadata (known optimum, constants) through
    /// counting wrappers.
    fn as_problem(&self) -> Option<&ProblemOracle> {
        None
    }
}

impl Oracle for ProblemOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_f(&self, x: &[f64]) -> Result<f64> {
        ProblemOracle::eval_f(self, x)
    }

    fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        ProblemOracle::eval_grad(self, x)
    }

    fn as_problem(&self) -> Option<&ProblemOracle> {
        Some(self)
    }
}

/// `ln(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-z))` without overflow.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::io::Write;

    fn central_difference_gradient(oracle: &ProblemOracle, x: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = oracle.eval_f(&xp).unwrap();
            xp[i] = x[i] - h;
            let fm = oracle.eval_f(&xp).unwrap();
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }

    fn assert_gradient_matches_fd(oracle: &ProblemOracle, x: &[f64]) {
        let h = 1e-6 * (1.0 + linalg::inf_norm(x));
        let fd = central_difference_gradient(oracle, x, h);
        let g = oracle.eval_grad(x).unwrap();
        let denom = linalg::norm2(&g).max(1e-8);
        let err = linalg::norm2(&linalg::sub(&g, &fd)) / denom;
        assert!(err <= 1e-6, "finite-difference mismatch: rel err {err:.3e}");
    }

    fn small_dataset() -> SparseDataset {
        SparseDataset::from_rows(
            &[
                vec![(0, 1.0), (2, -2.0)],
                vec![(1, 0.5)],
                vec![(0, -1.5), (1, 2.0), (2, 0.25)],
                vec![(2, 3.0)],
            ],
            &[1.0, -1.0, 1.0, -1.0],
        )
        .unwrap()
    }

    fn random_dataset(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SparseDataset {
        let mut rows = Vec::with_capacity(m);
        let mut labels = Vec::with_capacity(m);
        for _ in 0..m {
            let mut row = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.6) {
                    row.push((j, rng.gen_range(-2.0..2.0)));
                }
            }
            rows.push(row);
            labels.push(if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
        }
        // Guarantee every feature appears so n_features == n.
        rows[0] = (0..n).map(|j| (j, 0.1)).collect();
        SparseDataset::from_rows(&rows, &labels).unwrap()
    }

    #[test]
    fn quadratic_value_on_identity() {
        let oracle = ProblemOracle::quadratic(DenseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
        let f = oracle.eval_f(&[3.0, 4.0]).unwrap();
        assert_eq!(f, 12.5, "f(x) = ||x||^2 / 2 at (3,4)");
    }

    #[test]
    fn quadratic_gradient_is_ax_minus_b() {
        let oracle =
            ProblemOracle::quadratic(DenseMatrix::from_diagonal(&[1.0, 2.0]), vec![0.0, 0.0])
                .unwrap();
        let g = oracle.eval_grad(&[1.0, 1.0]).unwrap();
        assert_eq!(g, vec![1.0, 2.0]);
        let oracle2 = ProblemOracle::quadratic(DenseMatrix::identity(2), vec![0.5, -1.0]).unwrap();
        let g2 = oracle2.eval_grad(&[0.0, 0.0]).unwrap();
        assert_eq!(g2, vec![-0.5, 1.0], "gradient must subtract b");
    }

    #[test]
    fn quadratic_optimum_value() {
        let a = DenseMatrix::from_diagonal(&[2.0, 4.0]);
        let b = vec![2.0, 4.0];
        let oracle = ProblemOracle::quadratic(a, b).unwrap();
        // x* = (1, 1), f* = 1/2(2 + 4) - (2 + 4) = -3.
        assert!((oracle.known_optimum().unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_value_at_zero_is_ln2() {
        let oracle = ProblemOracle::logistic(small_dataset(), 123.0).unwrap();
        let f = oracle.eval_f(&[0.0, 0.0, 0.0]).unwrap();
        assert!(
            (f - std::f64::consts::LN_2).abs() < 1e-15,
            "every sample contributes ln 2 at w = 0"
        );
    }

    #[test]
    fn logistic_gradient_at_zero_is_mean_label_row() {
        let data = small_dataset();
        let m = data.n_samples() as f64;
        let mut expected = vec![0.0; data.n_features()];
        for i in 0..data.n_samples() {
            let y = data.labels()[i];
            data.row_axpy(i, -y / (2.0 * m), &mut expected);
        }
        let oracle = ProblemOracle::logistic(data, 0.0).unwrap();
        let g = oracle.eval_grad(&[0.0, 0.0, 0.0]).unwrap();
        for (gi, ei) in g.iter().zip(&expected) {
            assert!((gi - ei).abs() < 1e-15);
        }
    }

    #[test]
    fn svm_value_matches_per_sample_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let data = random_dataset(&mut rng, 30, 6);
        let lambda = 0.01;
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Independent dense recomputation, sample by sample.
        let mut dense = vec![vec![0.0; 6]; 30];
        for i in 0..30 {
            let (idx, val) = data.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                dense[i][j] = v;
            }
        }
        let mut expected = 0.0;
        for i in 0..30 {
            let margin = data.labels()[i] * linalg::dot(&dense[i], &x);
            expected += (1.0f64 - margin).max(0.0).powi(2);
        }
        expected = expected / 30.0 + 0.5 * lambda * linalg::norm2_sq(&x);
        let oracle = ProblemOracle::smooth_svm(data, lambda).unwrap();
        let f = oracle.eval_f(&x).unwrap();
        assert!((f - expected).abs() < 1e-12, "{f} vs {expected}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = linalg::random_orthogonal(&mut rng, 5);
        let a = DenseMatrix::conjugate_diagonal(&q, &[0.5, 1.0, 2.0, 5.0, 10.0]);
        let quad = ProblemOracle::quadratic(a, vec![0.1, -0.2, 0.3, 0.0, 1.0]).unwrap();
        let data = random_dataset(&mut rng, 25, 5);
        let logi = ProblemOracle::logistic(data.clone(), 0.05).unwrap();
        let svm = ProblemOracle::smooth_svm(data, 0.05).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert_gradient_matches_fd(&quad, &x);
            assert_gradient_matches_fd(&logi, &x);
            assert_gradient_matches_fd(&svm, &x);
        }
    }

    #[test]
    fn smoothness_bounds_for_named_instances() {
        let quad = ProblemOracle::quadratic(DenseMatrix::from_diagonal(&[1.0, 10.0]), vec![0.0; 2])
            .unwrap();
        assert!((quad.smoothness_bound() - 10.0).abs() < 1e-8);
        assert!((quad.strong_convexity_estimate() - 1.0).abs() < 1e-8);

        let single = SparseDataset::from_rows(&[vec![(0, 1.0), (1, 0.0)]], &[1.0]).unwrap();
        let logi = ProblemOracle::logistic(single, 0.0).unwrap();
        assert!(
            (logi.smoothness_bound() - 0.25).abs() < 1e-10,
            "single unit-norm sample gives L = 1/4"
        );
    }

    #[test]
    fn smoothness_matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let q = linalg::random_orthogonal(&mut rng, 10);
        let eigs: Vec<f64> = (0..10).map(|_| rng.gen_range(0.1..50.0)).collect();
        let a = DenseMatrix::conjugate_diagonal(&q, &eigs);
        let oracle = ProblemOracle::quadratic(a.clone(), vec![0.0; 10]).unwrap();

        let mut na = nalgebra::DMatrix::zeros(10, 10);
        for i in 0..10 {
            for j in 0..10 {
                na[(i, j)] = a.get(i, j);
            }
        }
        let eig = nalgebra::SymmetricEigen::new(na);
        let lmax = eig.eigenvalues.iter().fold(f64::MIN, |m, &v| m.max(v));
        let lmin = eig.eigenvalues.iter().fold(f64::MAX, |m, &v| m.min(v));
        assert!(
            (oracle.smoothness_bound() - lmax).abs() <= 1e-6 * lmax,
            "power iteration {} vs eigensolver {}",
            oracle.smoothness_bound(),
            lmax
        );
        assert!(
            (oracle.strong_convexity_estimate() - lmin).abs() <= 1e-6 * lmax,
            "shifted power iteration {} vs eigensolver {}",
            oracle.strong_convexity_estimate(),
            lmin
        );
    }

    #[test]
    fn descent_lemma_holds_for_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let q = linalg::random_orthogonal(&mut rng, 6);
        let a = DenseMatrix::conjugate_diagonal(&q, &[0.5, 1.0, 1.5, 3.0, 7.0, 9.0]);
        let data = random_dataset(&mut rng, 40, 6);
        let oracles = vec![
            ProblemOracle::quadratic(a, vec![0.0; 6]).unwrap(),
            ProblemOracle::logistic(data.clone(), 1e-3).unwrap(),
            ProblemOracle::smooth_svm(data, 1e-3).unwrap(),
        ];
        for oracle in &oracles {
            let l = oracle.smoothness_bound();
            for _ in 0..20 {
                let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let g = oracle.eval_grad(&x).unwrap();
                let gnorm_sq = linalg::norm2_sq(&g);
                if gnorm_sq == 0.0 {
                    continue;
                }
                let mut xp = x.clone();
                linalg::axpy(-1.0 / l, &g, &mut xp);
                let drop = oracle.eval_f(&xp).unwrap() - oracle.eval_f(&x).unwrap();
                assert!(
                    drop <= -gnorm_sq / (2.0 * l) + 1e-10,
                    "descent lemma violated: drop {drop}, bound {}",
                    -gnorm_sq / (2.0 * l)
                );
            }
        }
    }

    #[test]
    fn equal_spectrum_quadratic_has_mu_equal_l() {
        let oracle =
            ProblemOracle::quadratic(DenseMatrix::scaled_identity(4, 2.5), vec![0.0; 4]).unwrap();
        assert!((oracle.smoothness_bound() - 2.5).abs() < 1e-10);
        assert!((oracle.strong_convexity_estimate() - 2.5).abs() < 1e-10);
    }

    #[test]
    fn oracle_counters_track_shared_concurrent_use() {
        let oracle = std::sync::Arc::new(
            ProblemOracle::quadratic(DenseMatrix::identity(3), vec![0.0; 3]).unwrap(),
        );
        let mut handles = Vec::new();
        for t in 0..4 {
            let oracle = oracle.clone();
            handles.push(std::thread::spawn(move || {
                let x = vec![t as f64, 1.0, -1.0];
                for _ in 0..100 {
                    oracle.eval_grad(&x).unwrap();
                    oracle.eval_f(&x).unwrap();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(oracle.grad_calls(), 400);
        assert_eq!(oracle.fval_calls(), 400);
    }

    #[test]
    fn eval_rejects_bad_inputs() {
        let oracle = ProblemOracle::quadratic(DenseMatrix::identity(2), vec![0.0; 2]).unwrap();
        assert!(matches!(
            oracle.eval_f(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            oracle.eval_grad(&[f64::NAN, 0.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn quadratic_construction_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(ProblemOracle::quadratic(a, vec![0.0; 2]).is_err());
    }

    fn write_temp(content: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn libsvm_parses_labels_comments_and_blanks() {
        let f =
            write_temp(b"# comment header\n1 1:0.5 3:-2\n\n0 2:1.5\n-1 1:1 2:2 3:3\n+1 2:0.25\n");
        let data = load_libsvm(f.path()).unwrap();
        assert_eq!(data.n_samples(), 4);
        assert_eq!(data.n_features(), 3);
        assert_eq!(data.labels(), &[1.0, -1.0, -1.0, 1.0], "0 maps to -1");
        let (idx, val) = data.row(0);
        assert_eq!(idx, &[0, 2]);
        assert_eq!(val, &[0.5, -2.0]);
    }

    #[test]
    fn libsvm_rejects_malformed_rows() {
        let cases: &[(&[u8], &str)] = &[
            (b"1 3:1 2:1\n", "strictly increasing"),
            (b"1 0:1\n", "1-based"),
            (b"1 2:abc\n", "not numeric"),
            (b"abc 1:1\n", "not numeric"),
            (b"2 1:1\n", "label must be"),
            (b"1 11\n", "expected index:value"),
            (b"", "no samples"),
        ];
        for (content, needle) in cases {
            let f = write_temp(content);
            let err = load_libsvm(f.path()).unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains(needle), "expected {needle:?} in error {msg:?}");
            if !content.is_empty() {
                assert!(msg.contains(":1:"), "error should carry line 1: {msg:?}");
            }
        }
    }

    #[test]
    fn libsvm_reads_gzip_by_magic_bytes() {
        let plain = b"1 1:2.0 2:-1.0\n0 1:0.5\n";
        let mut encoder = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        encoder.write_all(plain).unwrap();
        let gz = encoder.finish().unwrap();
        let f = write_temp(&gz);
        let data = load_libsvm(f.path()).unwrap();
        assert_eq!(data.n_samples(), 2);
        assert_eq!(data.labels(), &[1.0, -1.0]);
        let (_, val) = data.row(0);
        assert_eq!(val, &[2.0, -1.0]);
    }

    #[test]
    fn libsvm_missing_file_is_io_error() {
        let err = load_libsvm("/nonexistent/definitely-not-here.libsvm").unwrap_err();
        assert!(matches!(err, Error::DatasetIo { .. }));
    }
}
