//! Optimizer implementations and the shared run loop.
//!
//! Every method is a [`Optimizer`]: it owns its iterate, its stored gradient,
//! and whatever learner state it needs, and advances one iteration per
//! [`Optimizer::step`] call. The [`run`] driver wraps an oracle with a
//! per-run call counter, records one [`IterRecord`] per iteration, enforces
//! the gradient-oracle budget, and stops as soon as the infinity norm of an
//! evaluated gradient drops to the tolerance.

pub mod agd;
pub mod baselines;
pub mod hdm;
pub mod momentum;

use std::cell::Cell;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg;
use crate::precond::Preconditioner;
use crate::problems::Oracle;
use crate::Result;

pub use agd::{agd_sequence_next, agd_weight, AgdCvx, HdmAgd, HdmAgdConfig};
pub use baselines::{AdaGradBaseline, Adam, AgdScvx, Gd, GdHb};
pub use hdm::{Hdm, HdmConfig};
pub use momentum::{hdm_best, HdmHb, HdmHbConfig, NullStepMode, INITIAL_MOMENTUM, MOMENTUM_CAP};

/// Shared run parameters: gradient-oracle budget, stopping tolerance on the
/// gradient infinity norm, and recording options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Stop once this many gradient evaluations have been spent. A method
    /// whose iteration costs two gradients may overshoot by one.
    pub max_grad_oracles: u64,
    /// Stop as soon as an evaluated gradient has infinity norm at or below
    /// this value.
    pub tol_grad_inf: f64,
    /// Optional hard cap on iterations, independent of the oracle budget.
    pub max_iters: Option<usize>,
    /// Keep per-iteration query points (iterate, gradient, value) so the
    /// verification checkers can replay the trajectory. Off by default to
    /// bound memory.
    pub record_query_points: bool,
    /// Record a preconditioner snapshot every this many iterations. When
    /// unset, a cadence of `max(1, budget / 100)` is used.
    pub snapshot_every: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_grad_oracles: 1000,
            tol_grad_inf: 1e-4,
            max_iters: None,
            record_query_points: false,
            snapshot_every: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_grad_oracles == 0 {
            return Err(Error::config("gradient-oracle budget must be >= 1"));
        }
        if !(self.tol_grad_inf > 0.0) || !self.tol_grad_inf.is_finite() {
            return Err(Error::config("gradient tolerance must be finite and > 0"));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::config("snapshot cadence must be >= 1"));
        }
        Ok(())
    }

    fn snapshot_cadence(&self) -> usize {
        self.snapshot_every
            .unwrap_or_else(|| ((self.max_grad_oracles / 100) as usize).max(1))
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalStatus {
    /// An evaluated gradient met the tolerance.
    Solved,
    /// The gradient-oracle budget (or iteration cap) ran out first.
    BudgetExhausted,
    /// The method hit an exactly stationary point where its feedback is
    /// undefined; only reachable when the tolerance check cannot fire first.
    StationaryError,
    /// The objective or a gradient became non-finite mid-run.
    NumericalError,
}

/// One per-iteration row of a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Cumulative gradient evaluations after this iteration.
    pub grad_oracles: u64,
    /// Objective at the incumbent iterate.
    pub f: f64,
    /// `f - f*` when the oracle knows its optimal value.
    pub f_gap: Option<f64>,
    /// Smallest gradient infinity norm among the points whose gradient this
    /// iteration evaluated (including the incumbent's stored gradient).
    pub grad_inf_norm: f64,
    /// Feedback value of this iteration's learner update, when the method
    /// has one.
    pub h_value: Option<f64>,
    /// Whether the candidate was rejected and the iterate kept.
    pub null_step: bool,
}

/// The point a feedback evaluation was anchored at, kept only when
/// [`RunConfig::record_query_points`] is set.
#[derive(Debug, Clone)]
pub struct QueryPoint {
    pub x: Vec<f64>,
    /// Previous iterate for momentum methods.
    pub x_prev: Option<Vec<f64>>,
    pub gx: Vec<f64>,
    pub fx: f64,
}

/// Everything recorded about one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub algo: String,
    pub status: TerminalStatus,
    pub records: Vec<IterRecord>,
    /// `(iteration, preconditioner)` snapshots at the configured cadence.
    pub snapshots: Vec<(usize, Preconditioner)>,
    pub query_points: Vec<QueryPoint>,
    pub final_x: Vec<f64>,
    pub final_f: f64,
    pub final_grad_inf: f64,
    pub grad_oracles_used: u64,
    pub fval_oracles_used: u64,
}

impl Trajectory {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Feedback values in iteration order, skipping iterations without one.
    pub fn h_values(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.h_value).collect()
    }

    pub fn final_record(&self) -> Option<&IterRecord> {
        self.records.last()
    }
}

/// Wraps an oracle with per-run call counters. The underlying problem
/// oracle's own counters are shared across concurrent runs, so budget
/// accounting must be local to the run.
pub struct RunOracle<'a> {
    inner: &'a dyn Oracle,
    grads: Cell<u64>,
    fvals: Cell<u64>,
}

impl<'a> RunOracle<'a> {
    pub fn new(inner: &'a dyn Oracle) -> Self {
        RunOracle {
            inner,
            grads: Cell::new(0),
            fvals: Cell::new(0),
        }
    }

    pub fn grad_calls(&self) -> u64 {
        self.grads.get()
    }

    pub fn fval_calls(&self) -> u64 {
        self.fvals.get()
    }
}

impl Oracle for RunOracle<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_f(&self, x: &[f64]) -> Result<f64> {
        self.fvals.set(self.fvals.get() + 1);
        self.inner.eval_f(x)
    }

    fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.grads.set(self.grads.get() + 1);
        self.inner.eval_grad(x)
    }

    fn as_problem(&self) -> Option<&crate::problems::ProblemOracle> {
        self.inner.as_problem()
    }
}

/// Data reported by [`Optimizer::init`]: the objective and gradient norm at
/// the starting point.
#[derive(Debug, Clone)]
pub struct InitInfo {
    pub f: f64,
    pub grad_inf: f64,
}

/// Data reported by one [`Optimizer::step`].
#[derive(Debug, Clone)]
pub struct StepInfo {
    /// Objective at the incumbent after the step.
    pub f: f64,
    /// Smallest gradient infinity norm among points evaluated this
    /// iteration (incumbent included when its gradient is known).
    pub grad_inf: f64,
    pub h_value: Option<f64>,
    pub null_step: bool,
    /// Feedback anchor of this step, present only when requested.
    pub query: Option<QueryPoint>,
}

/// The point backing the most recently reported `grad_inf`, returned when a
/// run stops.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_inf: f64,
}

/// A first-order method driven by [`run`]. Implementations own their iterate
/// and any stored gradients; `step` must spend oracle calls only through the
/// oracle it is handed.
pub trait Optimizer {
    fn name(&self) -> &str;

    /// Evaluate the starting point (one function value and one gradient) and
    /// set up internal state.
    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo>;

    /// Advance one iteration. `want_query` asks for the feedback anchor in
    /// the returned [`StepInfo`].
    fn step(&mut self, oracle: &dyn Oracle, want_query: bool) -> Result<StepInfo>;

    /// The point backing the last reported gradient norm.
    fn solution(&self) -> Solution;

    /// Current learned preconditioner, for methods that have one.
    fn precond(&self) -> Option<Preconditioner> {
        None
    }
}

/// Seeded starting point: standard normal draw normalized to unit length.
pub fn init_point(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = linalg::gaussian_vector(&mut rng, dim);
    let norm = linalg::norm2(&x);
    if norm > 0.0 {
        for v in &mut x {
            *v /= norm;
        }
    }
    x
}

/// Drive `opt` on `oracle` from `x1` until the tolerance is met, the budget
/// runs out, or the method fails. Non-finite values and exact stationarity
/// end the run with the corresponding status; configuration and dimension
/// errors propagate.
pub fn run(
    opt: &mut dyn Optimizer,
    oracle: &dyn Oracle,
    config: &RunConfig,
    x1: Vec<f64>,
) -> Result<Trajectory> {
    config.validate()?;
    if x1.len() != oracle.dim() {
        return Err(Error::dim("starting point", oracle.dim(), x1.len()));
    }
    linalg::ensure_finite(&x1, "starting point")?;

    let counter = RunOracle::new(oracle);
    let cadence = config.snapshot_cadence();
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut query_points = Vec::new();
    let f_star = known_optimum(oracle);

    let status = match opt.init(&counter, x1.clone()) {
        Ok(info) => {
            records.push(IterRecord {
                iter: 0,
                grad_oracles: counter.grad_calls(),
                f: info.f,
                f_gap: f_star.map(|fs| info.f - fs),
                grad_inf_norm: info.grad_inf,
                h_value: None,
                null_step: false,
            });
            push_snapshot(&mut snapshots, 0, opt);
            if info.grad_inf <= config.tol_grad_inf {
                TerminalStatus::Solved
            } else {
                drive(
                    opt,
                    &counter,
                    config,
                    cadence,
                    f_star,
                    &mut records,
                    &mut snapshots,
                    &mut query_points,
                )?
            }
        }
        Err(Error::NonFinite { .. }) => TerminalStatus::NumericalError,
        Err(Error::Stationary) => TerminalStatus::StationaryError,
        Err(e) => return Err(e),
    };

    if let Some(iter) = last_snapshot_slot(&records, &snapshots) {
        push_snapshot(&mut snapshots, iter, opt);
    }

    let sol = if records.is_empty() {
        Solution {
            x: x1,
            f: f64::NAN,
            grad_inf: f64::INFINITY,
        }
    } else {
        opt.solution()
    };
    Ok(Trajectory {
        algo: opt.name().to_string(),
        status,
        records,
        snapshots,
        query_points,
        final_x: sol.x,
        final_f: sol.f,
        final_grad_inf: sol.grad_inf,
        grad_oracles_used: counter.grad_calls(),
        fval_oracles_used: counter.fval_calls(),
    })
}

#[allow(clippy::too_many_arguments)]
fn drive(
    opt: &mut dyn Optimizer,
    counter: &RunOracle<'_>,
    config: &RunConfig,
    cadence: usize,
    f_star: Option<f64>,
    records: &mut Vec<IterRecord>,
    snapshots: &mut Vec<(usize, Preconditioner)>,
    query_points: &mut Vec<QueryPoint>,
) -> Result<TerminalStatus> {
    let mut iter = 0usize;
    loop {
        if counter.grad_calls() >= config.max_grad_oracles {
            return Ok(TerminalStatus::BudgetExhausted);
        }
        if let Some(cap) = config.max_iters {
            if iter >= cap {
                return Ok(TerminalStatus::BudgetExhausted);
            }
        }
        iter += 1;
        let info = match opt.step(counter, config.record_query_points) {
            Ok(info) => info,
            Err(Error::NonFinite { .. }) => return Ok(TerminalStatus::NumericalError),
            Err(Error::Stationary) => return Ok(TerminalStatus::StationaryError),
            Err(e) => return Err(e),
        };
        records.push(IterRecord {
            iter,
            grad_oracles: counter.grad_calls(),
            f: info.f,
            f_gap: f_star.map(|fs| info.f - fs),
            grad_inf_norm: info.grad_inf,
            h_value: info.h_value,
            null_step: info.null_step,
        });
        if let Some(q) = info.query {
            query_points.push(q);
        }
        if iter.is_multiple_of(cadence) {
            push_snapshot(snapshots, iter, opt);
        }
        if info.grad_inf <= config.tol_grad_inf {
            return Ok(TerminalStatus::Solved);
        }
    }
}

fn push_snapshot(snapshots: &mut Vec<(usize, Preconditioner)>, iter: usize, opt: &dyn Optimizer) {
    if let Some(p) = opt.precond() {
        snapshots.push((iter, p));
    }
}

/// Snapshot slot for the final iteration, if it is not already covered.
fn last_snapshot_slot(
    records: &[IterRecord],
    snapshots: &[(usize, Preconditioner)],
) -> Option<usize> {
    let last_iter = records.last()?.iter;
    match snapshots.last() {
        Some((iter, _)) if *iter == last_iter => None,
        _ => Some(last_iter),
    }
}

fn known_optimum(oracle: &dyn Oracle) -> Option<f64> {
    oracle.as_problem().and_then(|p| p.known_optimum())
}
