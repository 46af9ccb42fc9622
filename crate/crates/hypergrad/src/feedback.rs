//! One-step lookahead feedback and its gradients.
//!
//! For a smooth `f`, a point `x` with gradient `g = grad f(x) != 0`, and a
//! preconditioner `P`, the feedback value is
//!
//! ```text
//! h_x(P) = ( f(x - P g) - f(x) ) / ||g||^2,
//! ```
//!
//! the normalized one-step progress of the preconditioned gradient step. It
//! is convex in `P`, and its gradient `-grad f(x+) g^T / ||g||^2` only needs
//! one extra gradient evaluation at the candidate point `x+ = x - P g`.
//!
//! The momentum variant scores a pair `(P, B)` through the update
//! `x+ = x - P g + B (x - x_prev)` and the potential
//! `psi(x, x_prev) = f(x) + (omega/2) ||x - x_prev||^2`:
//!
//! ```text
//! h_{x,x_prev}(P, B) = ( psi(x+, x) - psi(x, x_prev) )
//!                      / ( ||g||^2 + (tau/2) ||x - x_prev||^2 ).
//! ```
//!
//! Both feedbacks are evaluated once per iteration and their gradients are
//! handed to an online learner; the candidate gradient is returned so the
//! caller can reuse it when the candidate is accepted.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, DenseMatrix};
use crate::precond::{MomentumParam, PrecondShape, Preconditioner};
use crate::problems::Oracle;
use crate::{Error, Result};

/// Gradient of a feedback function restricted to a preconditioner shape.
///
/// `Scalar` holds the derivative with respect to `alpha` in `alpha I`
/// (the trace of the full gradient), `Diagonal` the entrywise diagonal
/// restriction, and `Full` the complete matrix gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackGradient {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(DenseMatrix),
}

impl FeedbackGradient {
    pub fn shape(&self) -> PrecondShape {
        match self {
            FeedbackGradient::Scalar(_) => PrecondShape::Scalar,
            FeedbackGradient::Diagonal(_) => PrecondShape::Diagonal,
            FeedbackGradient::Full(_) => PrecondShape::Full,
        }
    }

    /// Entrywise square, the AdaGrad accumulator increment.
    pub fn elementwise_sq(&self) -> FeedbackGradient {
        match self {
            FeedbackGradient::Scalar(s) => FeedbackGradient::Scalar(s * s),
            FeedbackGradient::Diagonal(d) => {
                FeedbackGradient::Diagonal(d.iter().map(|x| x * x).collect())
            }
            FeedbackGradient::Full(m) => {
                let sq: Vec<f64> = m.data().iter().map(|x| x * x).collect();
                FeedbackGradient::Full(DenseMatrix::from_rows(m.dim(), &sq))
            }
        }
    }

    /// `self += other`, shapes must match.
    pub fn add_assign(&mut self, other: &FeedbackGradient) -> Result<()> {
        match (self, other) {
            (FeedbackGradient::Scalar(a), FeedbackGradient::Scalar(b)) => {
                *a += b;
                Ok(())
            }
            (FeedbackGradient::Diagonal(a), FeedbackGradient::Diagonal(b)) => {
                if a.len() != b.len() {
                    return Err(Error::dim("gradient accumulate", a.len(), b.len()));
                }
                linalg::axpy(1.0, b, a);
                Ok(())
            }
            (FeedbackGradient::Full(a), FeedbackGradient::Full(b)) => {
                if a.dim() != b.dim() {
                    return Err(Error::dim("gradient accumulate", a.dim(), b.dim()));
                }
                *a = a.add_scaled(1.0, b);
                Ok(())
            }
            _ => Err(Error::config("feedback gradient shapes do not match")),
        }
    }

    pub fn scaled(&self, alpha: f64) -> FeedbackGradient {
        match self {
            FeedbackGradient::Scalar(s) => FeedbackGradient::Scalar(alpha * s),
            FeedbackGradient::Diagonal(d) => FeedbackGradient::Diagonal(linalg::scaled(alpha, d)),
            FeedbackGradient::Full(m) => FeedbackGradient::Full(m.scale(alpha)),
        }
    }

    /// Frobenius norm of the matrix embedding (`Diagonal` and `Full` embed
    /// isometrically; `Scalar` holds a trace, not a matrix, so it reports
    /// the plain absolute value).
    pub fn norm(&self) -> f64 {
        match self {
            FeedbackGradient::Scalar(s) => s.abs(),
            FeedbackGradient::Diagonal(d) => linalg::norm2(d),
            FeedbackGradient::Full(m) => m.frobenius_norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FeedbackGradient::Scalar(s) => s.is_finite(),
            FeedbackGradient::Diagonal(d) => linalg::all_finite(d),
            FeedbackGradient::Full(m) => m.is_finite(),
        }
    }
}

/// Penalty weights for the momentum feedback. `omega` scales the potential
/// term `||x - x_prev||^2 / 2`, `tau` the matching denominator term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HBConstants {
    pub omega: f64,
    pub tau: f64,
}

impl HBConstants {
    /// The theory-backed default for an `L`-smooth objective:
    /// `omega = 3 L`, `tau = 16 L^2`.
    pub fn from_smoothness(l: f64) -> Self {
        HBConstants {
            omega: 3.0 * l,
            tau: 16.0 * l * l,
        }
    }

    pub fn new(omega: f64, tau: f64) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite() && tau >= 0.0 && tau.is_finite()) {
            return Err(Error::config("momentum constants must be finite and >= 0"));
        }
        Ok(HBConstants { omega, tau })
    }
}

/// Everything produced by one feedback evaluation. The candidate point, its
/// objective value, and its gradient are kept so the caller can accept the
/// candidate without re-querying the oracle.
#[derive(Debug, Clone)]
pub struct FeedbackSample {
    /// Query point.
    pub x: Vec<f64>,
    /// Gradient at the query point.
    pub gx: Vec<f64>,
    /// Objective value at the query point.
    pub fx: f64,
    /// Previous iterate, for the momentum variant.
    pub x_prev: Option<Vec<f64>>,
    /// Candidate point `x+`.
    pub candidate: Vec<f64>,
    /// `f(x+)`.
    pub f_candidate: f64,
    /// `grad f(x+)`.
    pub g_candidate: Vec<f64>,
    /// Feedback value.
    pub h_value: f64,
    /// Normalizing denominator (`||gx||^2`, plus the `tau` term for the
    /// momentum variant).
    pub denom: f64,
    /// `omega` used in the potential (0 for the plain feedback).
    pub omega: f64,
}

impl FeedbackSample {
    /// `x+ - x`, the move the candidate would take.
    fn step_vector(&self) -> Vec<f64> {
        linalg::sub(&self.candidate, &self.x)
    }

    /// `x - x_prev`, zero when there is no previous iterate.
    fn dx(&self) -> Vec<f64> {
        match &self.x_prev {
            Some(prev) => linalg::sub(&self.x, prev),
            None => vec![0.0; self.x.len()],
        }
    }
}

/// Evaluates the plain feedback `h_x(P)` at a non-stationary point.
///
/// `gx` and `fx` are the already-known gradient and value at `x`; the call
/// spends exactly one gradient and one function value, both at the
/// candidate.
pub fn hyper_feedback(
    oracle: &dyn Oracle,
    x: &[f64],
    gx: &[f64],
    fx: f64,
    p: &Preconditioner,
) -> Result<FeedbackSample> {
    linalg::ensure_finite(x, "feedback point")?;
    linalg::ensure_finite(gx, "feedback gradient input")?;
    linalg::ensure_finite_scalar(fx, "feedback value input")?;
    let grad_norm_sq = linalg::norm2_sq(gx);
    if grad_norm_sq == 0.0 {
        return Err(Error::Stationary);
    }
    let step = p.apply(gx)?;
    let candidate = linalg::sub(x, &step);
    let f_candidate = oracle.eval_f(&candidate)?;
    let g_candidate = oracle.eval_grad(&candidate)?;
    let h_value =
        linalg::ensure_finite_scalar((f_candidate - fx) / grad_norm_sq, "feedback value")?;
    Ok(FeedbackSample {
        x: x.to_vec(),
        gx: gx.to_vec(),
        fx,
        x_prev: None,
        candidate,
        f_candidate,
        g_candidate,
        h_value,
        denom: grad_norm_sq,
        omega: 0.0,
    })
}

/// Gradient of the plain feedback restricted to `shape`:
/// `-grad f(x+) gx^T / ||gx||^2`, its diagonal, or its trace.
pub fn hyper_feedback_grad(sample: &FeedbackSample, shape: PrecondShape) -> FeedbackGradient {
    restricted_outer(&sample.g_candidate, &sample.gx, -1.0 / sample.denom, shape)
}

/// Evaluates the momentum feedback `h_{x,x_prev}(P, B)`.
///
/// Errors with [`Error::Stationary`] when both `gx = 0` and `x = x_prev`,
/// where the denominator vanishes.
#[allow(clippy::too_many_arguments)]
pub fn hb_feedback(
    oracle: &dyn Oracle,
    x: &[f64],
    gx: &[f64],
    fx: f64,
    x_prev: &[f64],
    p: &Preconditioner,
    b: &MomentumParam,
    constants: HBConstants,
) -> Result<FeedbackSample> {
    linalg::ensure_finite(x, "feedback point")?;
    linalg::ensure_finite(gx, "feedback gradient input")?;
    linalg::ensure_finite(x_prev, "feedback previous point")?;
    linalg::ensure_finite_scalar(fx, "feedback value input")?;
    if x.len() != x_prev.len() {
        return Err(Error::dim(
            "momentum feedback points",
            x.len(),
            x_prev.len(),
        ));
    }
    let dx = linalg::sub(x, x_prev);
    let grad_norm_sq = linalg::norm2_sq(gx);
    let dx_norm_sq = linalg::norm2_sq(&dx);
    let denom = grad_norm_sq + 0.5 * constants.tau * dx_norm_sq;
    if denom == 0.0 {
        return Err(Error::Stationary);
    }
    let step = p.apply(gx)?;
    let momentum = b.apply(&dx)?;
    let mut candidate = linalg::sub(x, &step);
    linalg::axpy(1.0, &momentum, &mut candidate);
    let f_candidate = oracle.eval_f(&candidate)?;
    let g_candidate = oracle.eval_grad(&candidate)?;
    let v = linalg::sub(&candidate, x);
    let psi_candidate = f_candidate + 0.5 * constants.omega * linalg::norm2_sq(&v);
    let psi_current = fx + 0.5 * constants.omega * dx_norm_sq;
    let h_value =
        linalg::ensure_finite_scalar((psi_candidate - psi_current) / denom, "feedback value")?;
    Ok(FeedbackSample {
        x: x.to_vec(),
        gx: gx.to_vec(),
        fx,
        x_prev: Some(x_prev.to_vec()),
        candidate,
        f_candidate,
        g_candidate,
        h_value,
        denom,
        omega: constants.omega,
    })
}

/// Gradients of the momentum feedback with respect to `P` and `B`.
///
/// With `w = grad f(x+) + omega (x+ - x)` and `d = denom`:
/// `grad_P h = -w gx^T / d` and `grad_B h = w (x - x_prev)^T / d`, each
/// restricted to the requested shape. `drop_omega` replaces `w` by
/// `grad f(x+)` alone, the simplified gradient used by the practical
/// variant.
pub fn hb_feedback_grad(
    sample: &FeedbackSample,
    p_shape: PrecondShape,
    b_shape: PrecondShape,
    drop_omega: bool,
) -> Result<(FeedbackGradient, FeedbackGradient)> {
    if sample.x_prev.is_none() {
        return Err(Error::config(
            "momentum feedback gradient needs a sample with a previous iterate",
        ));
    }
    let w = if drop_omega {
        sample.g_candidate.clone()
    } else {
        let mut w = sample.g_candidate.clone();
        linalg::axpy(sample.omega, &sample.step_vector(), &mut w);
        w
    };
    let dx = sample.dx();
    let grad_p = restricted_outer(&w, &sample.gx, -1.0 / sample.denom, p_shape);
    let grad_b = restricted_outer(&w, &dx, 1.0 / sample.denom, b_shape);
    Ok((grad_p, grad_b))
}

/// `scale * u v^T` restricted to a shape: the full outer product, its
/// diagonal `scale * (u .* v)`, or its trace `scale * <u, v>`.
fn restricted_outer(u: &[f64], v: &[f64], scale: f64, shape: PrecondShape) -> FeedbackGradient {
    match shape {
        PrecondShape::Scalar => FeedbackGradient::Scalar(scale * linalg::dot(u, v)),
        PrecondShape::Diagonal => {
            FeedbackGradient::Diagonal(u.iter().zip(v).map(|(ui, vi)| scale * ui * vi).collect())
        }
        PrecondShape::Full => {
            let mut m = DenseMatrix::zeros(u.len());
            m.add_scaled_outer(scale, u, v);
            FeedbackGradient::Full(m)
        }
    }
}
