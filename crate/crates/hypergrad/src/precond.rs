//! Preconditioner shapes, momentum parameters, and feasible sets.
//!
//! A preconditioner is a scalar stepsize `alpha I`, a diagonal scaling
//! `diag(d)`, or a full matrix; all three act on gradients by [`
//! Preconditioner::apply`]. Feasible sets constrain the online learner and
//! come with Euclidean projections and a Frobenius-metric diameter, where
//! scalars are measured through their `alpha I` embedding (so an interval of
//! width `w` in ambient dimension `n` has diameter `w sqrt(n)`).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, DenseMatrix};
use crate::{Error, Result};

/// Scalar, diagonal, or full-matrix preconditioner.
#[derive(Debug, Clone, PartialEq)]
pub enum Preconditioner {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(DenseMatrix),
}

/// Shape tag for [`Preconditioner`]; used to request gradient restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecondShape {
    Scalar,
    Diagonal,
    Full,
}

impl Preconditioner {
    pub fn shape(&self) -> PrecondShape {
        match self {
            Preconditioner::Scalar(_) => PrecondShape::Scalar,
            Preconditioner::Diagonal(_) => PrecondShape::Diagonal,
            Preconditioner::Full(_) => PrecondShape::Full,
        }
    }

    /// `P v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        linalg::ensure_finite(v, "preconditioner operand")?;
        match self {
            Preconditioner::Scalar(alpha) => {
                linalg::ensure_finite_scalar(*alpha, "scalar preconditioner")?;
                Ok(linalg::scaled(*alpha, v))
            }
            Preconditioner::Diagonal(d) => {
                if d.len() != v.len() {
                    return Err(Error::dim("diagonal preconditioner", d.len(), v.len()));
                }
                linalg::ensure_finite(d, "diagonal preconditioner")?;
                Ok(d.iter().zip(v).map(|(di, vi)| di * vi).collect())
            }
            Preconditioner::Full(m) => {
                if m.dim() != v.len() {
                    return Err(Error::dim("full preconditioner", m.dim(), v.len()));
                }
                if !m.is_finite() {
                    return Err(Error::non_finite("full preconditioner"));
                }
                Ok(m.matvec(v))
            }
        }
    }

    /// Dense embedding, for cross-shape comparisons in tests and checks.
    pub fn to_full(&self, dim: usize) -> Result<DenseMatrix> {
        match self {
            Preconditioner::Scalar(alpha) => Ok(DenseMatrix::scaled_identity(dim, *alpha)),
            Preconditioner::Diagonal(d) => {
                if d.len() != dim {
                    return Err(Error::dim("diagonal embedding", dim, d.len()));
                }
                Ok(DenseMatrix::from_diagonal(d))
            }
            Preconditioner::Full(m) => {
                if m.dim() != dim {
                    return Err(Error::dim("full embedding", dim, m.dim()));
                }
                Ok(m.clone())
            }
        }
    }

    /// Frobenius distance between two same-shape preconditioners in the
    /// `alpha I` embedding of dimension `dim`.
    pub fn embedded_distance(&self, other: &Preconditioner, dim: usize) -> Result<f64> {
        match (self, other) {
            (Preconditioner::Scalar(a), Preconditioner::Scalar(b)) => {
                Ok((a - b).abs() * (dim as f64).sqrt())
            }
            (Preconditioner::Diagonal(a), Preconditioner::Diagonal(b)) => {
                if a.len() != b.len() {
                    return Err(Error::dim("diagonal distance", a.len(), b.len()));
                }
                Ok(linalg::norm2(&linalg::sub(a, b)))
            }
            (Preconditioner::Full(a), Preconditioner::Full(b)) => {
                if a.dim() != b.dim() {
                    return Err(Error::dim("full distance", a.dim(), b.dim()));
                }
                Ok(a.add_scaled(-1.0, b).frobenius_norm())
            }
            _ => Err(Error::config("preconditioner shapes do not match")),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Preconditioner::Scalar(alpha) => alpha.is_finite(),
            Preconditioner::Diagonal(d) => linalg::all_finite(d),
            Preconditioner::Full(m) => m.is_finite(),
        }
    }
}

/// Momentum parameter: a scalar `beta` or a full matrix acting on the
/// iterate difference.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentumParam {
    ScalarBeta(f64),
    FullB(DenseMatrix),
}

impl MomentumParam {
    /// `B (x - x_prev)`.
    pub fn apply(&self, dx: &[f64]) -> Result<Vec<f64>> {
        self.as_precond().apply(dx)
    }

    /// View through the shared shape machinery (scalar beta behaves exactly
    /// like a scalar preconditioner acting on the iterate difference).
    pub fn as_precond(&self) -> Preconditioner {
        match self {
            MomentumParam::ScalarBeta(b) => Preconditioner::Scalar(*b),
            MomentumParam::FullB(m) => Preconditioner::Full(m.clone()),
        }
    }

    pub fn from_precond(p: Preconditioner) -> Result<MomentumParam> {
        match p {
            Preconditioner::Scalar(b) => Ok(MomentumParam::ScalarBeta(b)),
            Preconditioner::Full(m) => Ok(MomentumParam::FullB(m)),
            Preconditioner::Diagonal(_) => {
                Err(Error::config("momentum parameter must be scalar or full"))
            }
        }
    }
}

/// Closed convex constraint set for the learner, with Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{alpha I : lo <= alpha <= hi}` in ambient dimension `dim`.
    ScalarInterval { lo: f64, hi: f64, dim: usize },
    /// `{diag(d) : lo <= d <= hi}` entrywise.
    DiagonalBox { lo: Vec<f64>, hi: Vec<f64> },
    /// `{diag(d) : 0 <= d <= hi}` with a uniform cap.
    DiagonalNonneg { hi: f64, dim: usize },
    /// `{M : ||M - center||_F <= radius}`.
    FullFrobeniusBall { center: DenseMatrix, radius: f64 },
}

impl FeasibleSet {
    pub fn scalar_interval(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi || dim == 0 {
            return Err(Error::config("scalar interval needs lo <= hi and dim >= 1"));
        }
        Ok(FeasibleSet::ScalarInterval { lo, hi, dim })
    }

    pub fn diagonal_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::dim("diagonal box bounds", lo.len(), hi.len()));
        }
        linalg::ensure_finite(&lo, "diagonal box lower bound")?;
        linalg::ensure_finite(&hi, "diagonal box upper bound")?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::config("diagonal box needs lo <= hi entrywise"));
        }
        Ok(FeasibleSet::DiagonalBox { lo, hi })
    }

    pub fn diagonal_box_uniform(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::diagonal_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn diagonal_nonneg(hi: f64, dim: usize) -> Result<Self> {
        if !(hi.is_finite() && hi >= 0.0) || dim == 0 {
            return Err(Error::config("nonnegative cap must be finite and >= 0"));
        }
        Ok(FeasibleSet::DiagonalNonneg { hi, dim })
    }

    pub fn frobenius_ball(center: DenseMatrix, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || !center.is_finite() {
            return Err(Error::config("ball needs finite center and radius > 0"));
        }
        Ok(FeasibleSet::FullFrobeniusBall { center, radius })
    }

    /// Ambient dimension of the iterate space this set lives over.
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::ScalarInterval { dim, .. } => *dim,
            FeasibleSet::DiagonalBox { lo, .. } => lo.len(),
            FeasibleSet::DiagonalNonneg { dim, .. } => *dim,
            FeasibleSet::FullFrobeniusBall { center, .. } => center.dim(),
        }
    }

    /// Frobenius-metric diameter of the set (scalar intervals through their
    /// `alpha I` embedding).
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::ScalarInterval { lo, hi, dim } => (hi - lo) * (*dim as f64).sqrt(),
            FeasibleSet::DiagonalBox { lo, hi } => linalg::norm2(&linalg::sub(hi, lo)),
            FeasibleSet::DiagonalNonneg { hi, dim } => hi * (*dim as f64).sqrt(),
            FeasibleSet::FullFrobeniusBall { radius, .. } => 2.0 * radius,
        }
    }

    /// Euclidean projection of `p` onto the set. The preconditioner shape
    /// must match the set family.
    pub fn project(&self, p: &Preconditioner) -> Result<Preconditioner> {
        if !p.is_finite() {
            return Err(Error::non_finite("projection input"));
        }
        match (self, p) {
            (FeasibleSet::ScalarInterval { lo, hi, .. }, Preconditioner::Scalar(a)) => {
                Ok(Preconditioner::Scalar(a.clamp(*lo, *hi)))
            }
            (FeasibleSet::DiagonalBox { lo, hi }, Preconditioner::Diagonal(d)) => {
                if d.len() != lo.len() {
                    return Err(Error::dim("diagonal projection", lo.len(), d.len()));
                }
                Ok(Preconditioner::Diagonal(
                    d.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(di, (l, h))| di.clamp(*l, *h))
                        .collect(),
                ))
            }
            (FeasibleSet::DiagonalNonneg { hi, dim }, Preconditioner::Diagonal(d)) => {
                if d.len() != *dim {
                    return Err(Error::dim("diagonal projection", *dim, d.len()));
                }
                Ok(Preconditioner::Diagonal(
                    d.iter().map(|di| di.clamp(0.0, *hi)).collect(),
                ))
            }
            (FeasibleSet::FullFrobeniusBall { center, radius }, Preconditioner::Full(m)) => {
                if m.dim() != center.dim() {
                    return Err(Error::dim("ball projection", center.dim(), m.dim()));
                }
                let diff = m.add_scaled(-1.0, center);
                let dist = diff.frobenius_norm();
                if dist <= *radius {
                    Ok(Preconditioner::Full(m.clone()))
                } else {
                    Ok(Preconditioner::Full(
                        center.add_scaled(radius / dist, &diff),
                    ))
                }
            }
            _ => Err(Error::config(
                "preconditioner shape does not match the feasible set",
            )),
        }
    }

    /// True when `p` lies in the set up to `tol` in the Frobenius metric.
    pub fn contains(&self, p: &Preconditioner, tol: f64) -> bool {
        match self.project(p) {
            Ok(proj) => p
                .embedded_distance(&proj, self.dim())
                .map(|d| d <= tol)
                .unwrap_or(false),
            Err(_) => false,
        }
    }

    /// A deterministic pseudo-random feasible point: a Gaussian draw pushed
    /// through the projection.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Preconditioner {
        let raw = match self {
            FeasibleSet::ScalarInterval { lo, hi, .. } => {
                let w = (hi - lo).max(1.0);
                Preconditioner::Scalar(rng.gen_range(lo - 0.5 * w..hi + 0.5 * w))
            }
            FeasibleSet::DiagonalBox { lo, hi } => Preconditioner::Diagonal(
                lo.iter()
                    .zip(hi)
                    .map(|(l, h)| {
                        let w = (h - l).max(1.0);
                        rng.gen_range(l - 0.5 * w..h + 0.5 * w)
                    })
                    .collect(),
            ),
            FeasibleSet::DiagonalNonneg { hi, dim } => {
                let w = hi.max(1.0);
                Preconditioner::Diagonal(
                    (0..*dim)
                        .map(|_| rng.gen_range(-0.5 * w..hi + 0.5 * w))
                        .collect(),
                )
            }
            FeasibleSet::FullFrobeniusBall { center, radius } => {
                let n = center.dim();
                let g = linalg::gaussian_vector(rng, n * n);
                let scale = radius / linalg::norm2(&g).max(1e-300) * rng.gen_range(0.0..1.5);
                Preconditioner::Full(center.add_scaled(scale, &DenseMatrix::from_rows(n, &g)))
            }
        };
        self.project(&raw).expect("projection of matching shape")
    }

    /// The zero element of the matching shape, a convenient learner start.
    pub fn zero_point(&self) -> Preconditioner {
        match self {
            FeasibleSet::ScalarInterval { .. } => Preconditioner::Scalar(0.0),
            FeasibleSet::DiagonalBox { lo, .. } => Preconditioner::Diagonal(vec![0.0; lo.len()]),
            FeasibleSet::DiagonalNonneg { dim, .. } => Preconditioner::Diagonal(vec![0.0; *dim]),
            FeasibleSet::FullFrobeniusBall { center, .. } => {
                Preconditioner::Full(DenseMatrix::zeros(center.dim()))
            }
        }
    }
}
