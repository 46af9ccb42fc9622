//! Independent checkers for recorded trajectories.
//!
//! Everything here re-derives its reference quantities from scratch —
//! central finite differences for gradients, a projected-gradient hindsight
//! solve for regret baselines, closed-form reduction bounds — so the
//! optimizer code is never asked to certify itself. Checkers re-query the
//! objective oracle instead of trusting cached values where that matters.

use serde::{Deserialize, Serialize};

use crate::feedback::{
    self, hb_feedback, hyper_feedback, hyper_feedback_grad, FeedbackGradient, HBConstants,
};
use crate::linalg::{self, DenseMatrix};
use crate::online::{measured_regret, StepsizeSchedule};
use crate::optim::{QueryPoint, Trajectory};
use crate::precond::{FeasibleSet, MomentumParam, PrecondShape, Preconditioner};
use crate::problems::{Oracle, ProblemOracle};
use crate::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one inequality check: `passed` iff `lhs <= rhs + tol`, where
/// `tol` is the tolerance the check was run with. `margin = lhs - rhs - tol`
/// is the signed excess, negative when the check passes with room to spare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl CheckReport {
    /// Build a report for the inequality `lhs <= rhs + tol`.
    pub fn from_bound(name: &str, lhs: f64, rhs: f64, tol: f64) -> CheckReport {
        CheckReport {
            name: name.to_string(),
            passed: lhs <= rhs + tol,
            lhs,
            rhs,
            margin: lhs - rhs - tol,
        }
    }
}

/// Best fixed parameter in hindsight over a recorded trajectory.
#[derive(Debug, Clone)]
pub struct HindsightResult {
    pub best_param: Preconditioner,
    /// Present only for momentum-feedback searches; `None` here.
    pub best_momentum: Option<MomentumParam>,
    /// Minimum of the cumulative feedback over the feasible set.
    pub best_value: f64,
    /// `-best_value / K`: the best achievable average progress rate.
    pub gamma_star: f64,
    /// False when the inner solve hit its iteration cap before reaching the
    /// step tolerance; `best_value` is then the best found, not a certified
    /// minimum.
    pub converged: bool,
}

/// Which feedback gradient a finite-difference check targets.
#[derive(Debug, Clone)]
pub enum FeedbackOp {
    /// Plain feedback `h_x(P)` with the gradient restricted to `shape`.
    Plain(PrecondShape),
    /// Momentum feedback `h_{x,x-}(P, B)`; both parameter gradients are
    /// checked. `drop_omega` selects the simplified gradient, which equals
    /// the exact one only when `constants.omega == 0`.
    HeavyBall {
        p_shape: PrecondShape,
        b_shape: PrecondShape,
        constants: HBConstants,
        drop_omega: bool,
    },
}

/// Central-difference step. Feedback values on quadratics are quadratic in
/// the parameter, so central differences are exact up to roundoff and the
/// step only has to beat cancellation error.
const FD_STEP: f64 = 1e-5;
/// Inner iteration cap for the hindsight solve.
const HINDSIGHT_MAX_ITERS: usize = 10_000;
/// Step-norm tolerance declaring the hindsight solve converged.
const HINDSIGHT_STEP_TOL: f64 = 1e-10;

/// Compares the analytic feedback gradients against central finite
/// differences of the feedback value on random quadratics.
///
/// Each sample draws a fresh point, parameter, and (periodically) problem;
/// the error is the worst per-coordinate deviation relative to
/// `max(|reference|, 1)`, so near-zero coordinates are compared absolutely.
pub fn fd_gradient_check(
    op: &FeedbackOp,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckReport> {
    fd_gradient_check_perturbed(op, samples, tol, seed, 0.0)
}

/// [`fd_gradient_check`] with `bias` added to every analytic gradient
/// coordinate — a negative control: a nonzero bias must make the check fail
/// with a margin of roughly that size.
pub fn fd_gradient_check_perturbed(
    op: &FeedbackOp,
    samples: usize,
    tol: f64,
    seed: u64,
    bias: f64,
) -> Result<CheckReport> {
    if samples == 0 {
        return Err(Error::config("gradient check needs at least one sample"));
    }
    if let FeedbackOp::HeavyBall { b_shape, .. } = op {
        if *b_shape == PrecondShape::Diagonal {
            return Err(Error::config("momentum parameters are scalar or full"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 6;
    let mut oracle = random_check_problem(&mut rng, dim)?;
    let mut worst = 0.0f64;
    for sample_idx in 0..samples {
        // Rotate the curvature every few samples so one benign spectrum
        // cannot mask a formula error.
        if sample_idx > 0 && sample_idx % 10 == 0 {
            oracle = random_check_problem(&mut rng, dim)?;
        }
        let x = linalg::gaussian_vector(&mut rng, dim);
        let gx = oracle.eval_grad(&x)?;
        let fx = oracle.eval_f(&x)?;
        let err = match op {
            FeedbackOp::Plain(shape) => {
                let p = random_param(&mut rng, *shape, dim, 0.5);
                let sample = hyper_feedback(&oracle, &x, &gx, fx, &p)?;
                let analytic = hyper_feedback_grad(&sample, *shape);
                let fd = fd_plain_grad(&oracle, &x, &gx, fx, &p)?;
                grad_deviation(&analytic, &fd, bias)?
            }
            FeedbackOp::HeavyBall {
                p_shape,
                b_shape,
                constants,
                drop_omega,
            } => {
                let p = random_param(&mut rng, *p_shape, dim, 0.5);
                let b = MomentumParam::from_precond(random_param(&mut rng, *b_shape, dim, 0.8))?;
                let mut x_prev = x.clone();
                linalg::axpy(0.3, &linalg::gaussian_vector(&mut rng, dim), &mut x_prev);
                let sample = hb_feedback(&oracle, &x, &gx, fx, &x_prev, &p, &b, *constants)?;
                let (analytic_p, analytic_b) =
                    feedback::hb_feedback_grad(&sample, *p_shape, *b_shape, *drop_omega)?;
                let (fd_p, fd_b) = fd_hb_grads(&oracle, &x, &gx, fx, &x_prev, &p, &b, *constants)?;
                grad_deviation(&analytic_p, &fd_p, bias)?.max(grad_deviation(
                    &analytic_b,
                    &fd_b,
                    bias,
                )?)
            }
        };
        worst = worst.max(err);
    }
    Ok(CheckReport::from_bound(
        &format!("fd-gradient/{}", op_label(op)),
        worst,
        tol,
        0.0,
    ))
}

/// Minimizes the cumulative feedback `G(P) = sum_k h_{x^k}(P)` over the
/// feasible set by projected gradient descent with backtracking, re-querying
/// the oracle at every candidate update.
///
/// Supports scalar intervals and diagonal boxes, where the search runs in
/// the natural parameter coordinates; full-matrix sets are rejected.
pub fn hindsight_best(
    points: &[QueryPoint],
    oracle: &dyn Oracle,
    set: &FeasibleSet,
) -> Result<HindsightResult> {
    if points.is_empty() {
        return Err(Error::config("hindsight search needs stored query points"));
    }
    let shape = match set {
        FeasibleSet::ScalarInterval { .. } => PrecondShape::Scalar,
        FeasibleSet::DiagonalBox { .. } | FeasibleSet::DiagonalNonneg { .. } => {
            PrecondShape::Diagonal
        }
        FeasibleSet::FullFrobeniusBall { .. } => {
            return Err(Error::config(
                "hindsight search supports scalar intervals and diagonal boxes",
            ));
        }
    };
    let mut p = set.project(&set.zero_point())?;
    let (mut value, mut grad) = cumulative_feedback(points, oracle, &p, shape)?;
    let mut stepsize = 1.0f64;
    let mut converged = false;
    for _ in 0..HINDSIGHT_MAX_ITERS {
        stepsize = (stepsize * 2.0).min(1e12);
        let mut accepted = None;
        for _ in 0..200 {
            let trial = set.project(&param_step(&p, &grad, stepsize)?)?;
            let step_sq = param_distance_sq(&trial, &p)?;
            if step_sq == 0.0 {
                // The projection pinned every coordinate: the projected
                // gradient vanishes and the current point is optimal.
                return Ok(finish_hindsight(p, value, points.len(), true));
            }
            let trial_value = cumulative_feedback_value(points, oracle, &trial)?;
            let model = value + param_dot(&grad, &trial, &p)? + step_sq / (2.0 * stepsize);
            if trial_value <= model {
                accepted = Some((trial, trial_value, step_sq.sqrt()));
                break;
            }
            stepsize *= 0.5;
        }
        let Some((next, next_value, step_norm)) = accepted else {
            break;
        };
        p = next;
        value = next_value;
        if step_norm <= HINDSIGHT_STEP_TOL {
            converged = true;
            break;
        }
        (value, grad) = cumulative_feedback(points, oracle, &p, shape)?;
    }
    Ok(finish_hindsight(p, value, points.len(), converged))
}

/// Checks the sublinear regret guarantee of the horizon-tuned constant
/// stepsize: cumulative feedback minus the hindsight optimum must stay
/// below `D (L D + 1) sqrt(K)`.
pub fn regret_bound_check(
    trajectory: &Trajectory,
    schedule: &StepsizeSchedule,
    hindsight: &HindsightResult,
) -> Result<CheckReport> {
    let StepsizeSchedule::HorizonConstant {
        diameter,
        smoothness,
        horizon,
    } = schedule
    else {
        return Err(Error::config(
            "regret bound applies to the horizon-constant schedule",
        ));
    };
    let h = trajectory.h_values();
    if h.is_empty() {
        return Err(Error::config("trajectory has no feedback values"));
    }
    if h.len() != *horizon {
        return Err(Error::config(
            "schedule horizon does not match the trajectory length",
        ));
    }
    let k = h.len() as f64;
    let lhs = measured_regret(&h, hindsight.best_value);
    let rhs = diameter * (smoothness * diameter + 1.0) * k.sqrt();
    Ok(CheckReport::from_bound("regret-sublinear", lhs, rhs, 1e-8))
}

/// Checks the logarithmic regret guarantee of the decaying stepsize
/// `eta_k = 1/(k mu)` on scalar sets: regret must stay below
/// `((L D + 1)^2 / (2 mu)) (ln K + 1)`.
pub fn log_regret_bound_check(
    trajectory: &Trajectory,
    schedule: &StepsizeSchedule,
    hindsight: &HindsightResult,
    diameter: f64,
    smoothness: f64,
) -> Result<CheckReport> {
    let StepsizeSchedule::Decaying { mu } = schedule else {
        return Err(Error::config("log regret applies to the decaying schedule"));
    };
    let h = trajectory.h_values();
    if h.is_empty() {
        return Err(Error::config("trajectory has no feedback values"));
    }
    let k = h.len() as f64;
    let lhs = measured_regret(&h, hindsight.best_value);
    let lipschitz = smoothness * diameter + 1.0;
    let rhs = lipschitz * lipschitz / (2.0 * mu) * (k.ln() + 1.0);
    Ok(CheckReport::from_bound(
        "regret-logarithmic",
        lhs,
        rhs,
        1e-8,
    ))
}

/// Verifies the online-to-offline reduction on a quadratic: at every prefix
/// `K`, the incumbent gap must obey both the sublinear bound
/// `min{Delta^2 / (K max{avg(-h), 0}), gap_1}` and the strongly convex bound
/// `gap_1 (1 - 2 mu max{avg(-h), 0})^K`, with `Delta^2 = 2 gap_1 / mu`.
pub fn reduction_check(trajectory: &Trajectory, oracle: &ProblemOracle) -> Result<CheckReport> {
    if oracle.quadratic_matrix().is_none() {
        return Err(Error::config(
            "reduction check supports quadratic objectives",
        ));
    }
    let Some(f_star) = oracle.known_optimum() else {
        return Err(Error::config("reduction check needs a known optimal value"));
    };
    let mu = oracle.strong_convexity_estimate();
    if mu <= 0.0 {
        return Err(Error::config("reduction check needs strong convexity"));
    }
    if trajectory.records.len() < 2 {
        return Err(Error::config("trajectory has no completed iterations"));
    }
    let gap_1 = trajectory.records[0].f - f_star;
    let delta_sq = 2.0 * gap_1 / mu;
    let tol = 1e-8 * gap_1.max(1e-12);
    let mut neg_sum = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for (k, record) in trajectory.records.iter().enumerate().skip(1) {
        let Some(h) = record.h_value else {
            return Err(Error::config(
                "reduction check needs a feedback value per iteration",
            ));
        };
        neg_sum -= h;
        let avg = (neg_sum / k as f64).max(0.0);
        let gap = record.f - f_star;
        let sublinear = if avg > 0.0 {
            (delta_sq / (k as f64 * avg)).min(gap_1)
        } else {
            gap_1
        };
        let linear = gap_1 * (1.0 - 2.0 * mu * avg).max(0.0).powi(k as i32);
        worst = worst.max(gap - sublinear).max(gap - linear);
    }
    Ok(CheckReport::from_bound("reduction-bounds", worst, 0.0, tol))
}

/// Contraction ratios of the optimality gap along a trajectory, plus their
/// geometric means over sliding windows.
#[derive(Debug, Clone)]
pub struct SuperlinearMetrics {
    /// `r_k = gap_{k+1} / gap_k`. A first non-positive gap records a final
    /// zero ratio and truncates the sequence there.
    pub ratios: Vec<f64>,
    pub window: usize,
    /// Geometric mean of each length-`window` slice of `ratios`.
    pub windowed: Vec<f64>,
}

/// Computes gap contraction ratios from the recorded incumbent values.
pub fn superlinear_metrics(
    trajectory: &Trajectory,
    f_star: f64,
    window: usize,
) -> SuperlinearMetrics {
    let gaps: Vec<f64> = trajectory.records.iter().map(|r| r.f - f_star).collect();
    let mut ratios = Vec::new();
    for pair in gaps.windows(2) {
        if pair[0] <= 0.0 {
            break;
        }
        let next = pair[1].max(0.0);
        ratios.push(next / pair[0]);
        if next == 0.0 {
            break;
        }
    }
    let window = window.max(1);
    let windowed = if ratios.len() >= window {
        ratios.windows(window).map(geometric_mean).collect()
    } else {
        Vec::new()
    };
    SuperlinearMetrics {
        ratios,
        window,
        windowed,
    }
}

/// Geometric means of the first, middle, and last thirds of a ratio
/// sequence; `None` when there are fewer than three ratios.
pub fn thirds_geometric_means(ratios: &[f64]) -> Option<[f64; 3]> {
    if ratios.len() < 3 {
        return None;
    }
    let third = ratios.len() / 3;
    Some([
        geometric_mean(&ratios[..third]),
        geometric_mean(&ratios[third..2 * third]),
        geometric_mean(&ratios[2 * third..]),
    ])
}

/// Frobenius distance from each snapshotted preconditioner to a reference
/// inverse Hessian.
pub fn precond_distance_trace(trajectory: &Trajectory, a_inv: &DenseMatrix) -> Result<Vec<f64>> {
    if trajectory.snapshots.is_empty() {
        return Err(Error::config(
            "trajectory has no preconditioner snapshots; enable a snapshot cadence",
        ));
    }
    trajectory
        .snapshots
        .iter()
        .map(|(_, p)| {
            Ok(p.to_full(a_inv.dim())?
                .add_scaled(-1.0, a_inv)
                .frobenius_norm())
        })
        .collect()
}

/// Evaluates the cumulative momentum feedback at the fixed pair
/// `(1/(4L) I, 1/2 I)` over the trajectory's stored query points and checks
/// that its average stays below `-1/(8L)`.
///
/// The floor is a property of the constants `omega = 3L`, `tau = 16 L^2`;
/// any other constants are a configuration error.
pub fn hb_hindsight_floor_check(
    trajectory: &Trajectory,
    oracle: &dyn Oracle,
    constants: HBConstants,
    smoothness: f64,
) -> Result<CheckReport> {
    if !(smoothness > 0.0 && smoothness.is_finite()) {
        return Err(Error::config(
            "floor check needs a positive smoothness constant",
        ));
    }
    let omega_ok = (constants.omega - 3.0 * smoothness).abs() <= 1e-9 * smoothness;
    let tau_ok =
        (constants.tau - 16.0 * smoothness * smoothness).abs() <= 1e-9 * smoothness * smoothness;
    if !omega_ok || !tau_ok {
        return Err(Error::config(
            "floor check needs omega = 3 L and tau = 16 L^2",
        ));
    }
    if trajectory.query_points.is_empty() {
        return Err(Error::config(
            "floor check needs stored query points; enable query recording",
        ));
    }
    let p_hat = Preconditioner::Scalar(1.0 / (4.0 * smoothness));
    let b_hat = MomentumParam::ScalarBeta(0.5);
    let mut sum = 0.0;
    for q in &trajectory.query_points {
        let Some(x_prev) = &q.x_prev else {
            return Err(Error::config(
                "floor check needs momentum trajectories with previous iterates",
            ));
        };
        let sample = hb_feedback(oracle, &q.x, &q.gx, q.fx, x_prev, &p_hat, &b_hat, constants)?;
        sum += sample.h_value;
    }
    let avg = sum / trajectory.query_points.len() as f64;
    let rhs = -1.0 / (8.0 * smoothness);
    Ok(CheckReport::from_bound(
        "hb-hindsight-floor",
        avg,
        rhs,
        1e-10,
    ))
}

/// Reporting-only estimate of the dynamic-competitor rate: the negated
/// average feedback of a user-supplied competitor sequence minus its
/// path-length penalty `((L D + 1) / (2 sqrt(K))) sum_k ||P_{k+1} - P_k||_F`.
///
/// Not an assertion — there is no canonical competitor sequence to check
/// against, so callers interpret the value themselves.
pub fn dynamic_competitor_report(
    points: &[QueryPoint],
    oracle: &dyn Oracle,
    competitors: &[Preconditioner],
    diameter: f64,
    smoothness: f64,
) -> Result<f64> {
    if points.is_empty() || points.len() != competitors.len() {
        return Err(Error::dim(
            "dynamic competitor sequence",
            points.len(),
            competitors.len(),
        ));
    }
    let dim = points[0].x.len();
    let k = points.len() as f64;
    let mut sum = 0.0;
    for (q, p) in points.iter().zip(competitors) {
        sum += feedback_value(oracle, &q.x, &q.gx, q.fx, p)?;
    }
    let mut path = 0.0;
    for pair in competitors.windows(2) {
        path += pair[1].embedded_distance(&pair[0], dim)?;
    }
    let penalty = (smoothness * diameter + 1.0) / (2.0 * k.sqrt()) * path;
    Ok(-(sum / k + penalty))
}

/// Feedback value alone (one objective query, no gradient): the reference
/// both finite differencing and hindsight backtracking are built on.
fn feedback_value(
    oracle: &dyn Oracle,
    x: &[f64],
    gx: &[f64],
    fx: f64,
    p: &Preconditioner,
) -> Result<f64> {
    let grad_norm_sq = linalg::norm2_sq(gx);
    if grad_norm_sq == 0.0 {
        return Err(Error::Stationary);
    }
    let candidate = linalg::sub(x, &p.apply(gx)?);
    Ok((oracle.eval_f(&candidate)? - fx) / grad_norm_sq)
}

/// Momentum feedback value alone, mirroring [`hb_feedback`] without the
/// candidate gradient query.
#[allow(clippy::too_many_arguments)]
fn hb_feedback_value(
    oracle: &dyn Oracle,
    x: &[f64],
    gx: &[f64],
    fx: f64,
    x_prev: &[f64],
    p: &Preconditioner,
    b: &MomentumParam,
    constants: HBConstants,
) -> Result<f64> {
    let dx = linalg::sub(x, x_prev);
    let dx_norm_sq = linalg::norm2_sq(&dx);
    let denom = linalg::norm2_sq(gx) + 0.5 * constants.tau * dx_norm_sq;
    if denom == 0.0 {
        return Err(Error::Stationary);
    }
    let mut candidate = linalg::sub(x, &p.apply(gx)?);
    linalg::axpy(1.0, &b.apply(&dx)?, &mut candidate);
    let v = linalg::sub(&candidate, x);
    let psi_candidate = oracle.eval_f(&candidate)? + 0.5 * constants.omega * linalg::norm2_sq(&v);
    let psi_current = fx + 0.5 * constants.omega * dx_norm_sq;
    Ok((psi_candidate - psi_current) / denom)
}

fn op_label(op: &FeedbackOp) -> String {
    let shape_name = |s: PrecondShape| match s {
        PrecondShape::Scalar => "scalar",
        PrecondShape::Diagonal => "diagonal",
        PrecondShape::Full => "full",
    };
    match op {
        FeedbackOp::Plain(shape) => format!("plain-{}", shape_name(*shape)),
        FeedbackOp::HeavyBall {
            p_shape, b_shape, ..
        } => format!("hb-{}-{}", shape_name(*p_shape), shape_name(*b_shape)),
    }
}

/// Random positive definite quadratic used by the gradient checks.
fn random_check_problem(rng: &mut ChaCha8Rng, dim: usize) -> Result<ProblemOracle> {
    let q = linalg::random_orthogonal(rng, dim);
    let eigs = linalg::logspace(1.0, 30.0, dim);
    let a = DenseMatrix::conjugate_diagonal(&q, &eigs);
    let b = linalg::gaussian_vector(rng, dim);
    ProblemOracle::quadratic(a, b)
}

/// Random parameter of the requested shape with entries of size ~`scale`.
fn random_param(
    rng: &mut ChaCha8Rng,
    shape: PrecondShape,
    dim: usize,
    scale: f64,
) -> Preconditioner {
    match shape {
        PrecondShape::Scalar => Preconditioner::Scalar(scale * linalg::gaussian_vector(rng, 1)[0]),
        PrecondShape::Diagonal => {
            Preconditioner::Diagonal(linalg::scaled(scale, &linalg::gaussian_vector(rng, dim)))
        }
        PrecondShape::Full => {
            let entries = linalg::scaled(scale, &linalg::gaussian_vector(rng, dim * dim));
            Preconditioner::Full(DenseMatrix::from_rows(dim, &entries))
        }
    }
}

/// Central finite differences of the plain feedback in every parameter
/// coordinate.
fn fd_plain_grad(
    oracle: &dyn Oracle,
    x: &[f64],
    gx: &[f64],
    fx: f64,
    p: &Preconditioner,
) -> Result<FeedbackGradient> {
    fd_param_grad(p, |trial| feedback_value(oracle, x, gx, fx, trial))
}

/// Central finite differences of the momentum feedback in both parameters.
#[allow(clippy::too_many_arguments)]
fn fd_hb_grads(
    oracle: &dyn Oracle,
    x: &[f64],
    gx: &[f64],
    fx: f64,
    x_prev: &[f64],
    p: &Preconditioner,
    b: &MomentumParam,
    constants: HBConstants,
) -> Result<(FeedbackGradient, FeedbackGradient)> {
    let fd_p = fd_param_grad(p, |trial| {
        hb_feedback_value(oracle, x, gx, fx, x_prev, trial, b, constants)
    })?;
    let fd_b = fd_param_grad(&b.as_precond(), |trial| {
        let trial_b = MomentumParam::from_precond(trial.clone())?;
        hb_feedback_value(oracle, x, gx, fx, x_prev, p, &trial_b, constants)
    })?;
    Ok((fd_p, fd_b))
}

/// Central differences of `eval` in every coordinate of `p`, returned in
/// the shape-matching gradient layout.
fn fd_param_grad(
    p: &Preconditioner,
    mut eval: impl FnMut(&Preconditioner) -> Result<f64>,
) -> Result<FeedbackGradient> {
    let coords = param_coords(p);
    let mut out = Vec::with_capacity(coords);
    for idx in 0..coords {
        let plus = eval(&perturbed_param(p, idx, FD_STEP))?;
        let minus = eval(&perturbed_param(p, idx, -FD_STEP))?;
        out.push((plus - minus) / (2.0 * FD_STEP));
    }
    Ok(match p {
        Preconditioner::Scalar(_) => FeedbackGradient::Scalar(out[0]),
        Preconditioner::Diagonal(_) => FeedbackGradient::Diagonal(out),
        Preconditioner::Full(m) => FeedbackGradient::Full(DenseMatrix::from_rows(m.dim(), &out)),
    })
}

fn param_coords(p: &Preconditioner) -> usize {
    match p {
        Preconditioner::Scalar(_) => 1,
        Preconditioner::Diagonal(d) => d.len(),
        Preconditioner::Full(m) => m.dim() * m.dim(),
    }
}

fn perturbed_param(p: &Preconditioner, idx: usize, delta: f64) -> Preconditioner {
    match p {
        Preconditioner::Scalar(alpha) => Preconditioner::Scalar(alpha + delta),
        Preconditioner::Diagonal(d) => {
            let mut d = d.clone();
            d[idx] += delta;
            Preconditioner::Diagonal(d)
        }
        Preconditioner::Full(m) => {
            let mut data = m.data().to_vec();
            data[idx] += delta;
            Preconditioner::Full(DenseMatrix::from_rows(m.dim(), &data))
        }
    }
}

/// Worst per-coordinate deviation between an (optionally biased) analytic
/// gradient and its finite-difference reference, relative to
/// `max(|reference|, 1)`.
fn grad_deviation(analytic: &FeedbackGradient, fd: &FeedbackGradient, bias: f64) -> Result<f64> {
    let a = flatten_grad(analytic);
    let r = flatten_grad(fd);
    if a.len() != r.len() {
        return Err(Error::dim("gradient comparison", a.len(), r.len()));
    }
    Ok(a.iter()
        .zip(&r)
        .map(|(ai, ri)| (ai + bias - ri).abs() / ri.abs().max(1.0))
        .fold(0.0, f64::max))
}

fn flatten_grad(g: &FeedbackGradient) -> Vec<f64> {
    match g {
        FeedbackGradient::Scalar(s) => vec![*s],
        FeedbackGradient::Diagonal(d) => d.clone(),
        FeedbackGradient::Full(m) => m.data().to_vec(),
    }
}

fn finish_hindsight(
    p: Preconditioner,
    value: f64,
    rounds: usize,
    converged: bool,
) -> HindsightResult {
    HindsightResult {
        best_param: p,
        best_momentum: None,
        best_value: value,
        gamma_star: -value / rounds as f64,
        converged,
    }
}

/// Cumulative feedback and its gradient at `p` over the stored points.
fn cumulative_feedback(
    points: &[QueryPoint],
    oracle: &dyn Oracle,
    p: &Preconditioner,
    shape: PrecondShape,
) -> Result<(f64, FeedbackGradient)> {
    let mut value = 0.0;
    let mut grad: Option<FeedbackGradient> = None;
    for q in points {
        let sample = hyper_feedback(oracle, &q.x, &q.gx, q.fx, p)?;
        value += sample.h_value;
        let g = hyper_feedback_grad(&sample, shape);
        match &mut grad {
            Some(acc) => acc.add_assign(&g)?,
            None => grad = Some(g),
        }
    }
    Ok((value, grad.expect("points is non-empty")))
}

/// Cumulative feedback value at `p` (no gradients), for backtracking trials.
fn cumulative_feedback_value(
    points: &[QueryPoint],
    oracle: &dyn Oracle,
    p: &Preconditioner,
) -> Result<f64> {
    let mut value = 0.0;
    for q in points {
        value += feedback_value(oracle, &q.x, &q.gx, q.fx, p)?;
    }
    Ok(value)
}

/// `p - t g` in parameter coordinates.
fn param_step(p: &Preconditioner, grad: &FeedbackGradient, t: f64) -> Result<Preconditioner> {
    match (p, grad) {
        (Preconditioner::Scalar(alpha), FeedbackGradient::Scalar(g)) => {
            Ok(Preconditioner::Scalar(alpha - t * g))
        }
        (Preconditioner::Diagonal(d), FeedbackGradient::Diagonal(g)) => {
            if d.len() != g.len() {
                return Err(Error::dim("hindsight step", d.len(), g.len()));
            }
            Ok(Preconditioner::Diagonal(
                d.iter().zip(g).map(|(di, gi)| di - t * gi).collect(),
            ))
        }
        _ => Err(Error::config(
            "hindsight parameter and gradient shapes differ",
        )),
    }
}

/// Squared distance between two parameters in their natural coordinates.
fn param_distance_sq(a: &Preconditioner, b: &Preconditioner) -> Result<f64> {
    match (a, b) {
        (Preconditioner::Scalar(x), Preconditioner::Scalar(y)) => Ok((x - y) * (x - y)),
        (Preconditioner::Diagonal(x), Preconditioner::Diagonal(y)) => {
            if x.len() != y.len() {
                return Err(Error::dim("hindsight distance", x.len(), y.len()));
            }
            Ok(x.iter().zip(y).map(|(xi, yi)| (xi - yi) * (xi - yi)).sum())
        }
        _ => Err(Error::config("hindsight parameters changed shape")),
    }
}

/// `<g, a - b>` in parameter coordinates.
fn param_dot(grad: &FeedbackGradient, a: &Preconditioner, b: &Preconditioner) -> Result<f64> {
    match (grad, a, b) {
        (FeedbackGradient::Scalar(g), Preconditioner::Scalar(x), Preconditioner::Scalar(y)) => {
            Ok(g * (x - y))
        }
        (
            FeedbackGradient::Diagonal(g),
            Preconditioner::Diagonal(x),
            Preconditioner::Diagonal(y),
        ) => {
            if g.len() != x.len() || g.len() != y.len() {
                return Err(Error::dim("hindsight inner product", g.len(), x.len()));
            }
            Ok(g.iter()
                .zip(x.iter().zip(y))
                .map(|(gi, (xi, yi))| gi * (xi - yi))
                .sum())
        }
        _ => Err(Error::config("hindsight parameters changed shape")),
    }
}

fn geometric_mean(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().map(|v| v.ln()).sum();
    (sum / values.len() as f64).exp()
}
