//! Online-learned preconditioning for smooth convex optimization.
//!
//! The central object is a gradient method whose preconditioner (scalar
//! stepsize, diagonal scaling, or full matrix) is learned on the fly by an
//! online learner. Each iteration evaluates a one-step lookahead feedback
//! function and feeds its gradient to the learner; a null step keeps the
//! iterate monotone while the learner keeps adapting.
//!
//! Modules:
//! - [`problems`]: smooth convex objectives (quadratics, logistic regression,
//!   smoothed SVM) behind a counting gradient/value oracle.
//! - [`precond`]: preconditioner shapes, feasible sets, projections.
//! - [`feedback`]: one-step feedback functions and their gradients.
//! - [`online`]: online gradient descent and AdaGrad learners.
//! - [`optim`]: the adaptive methods and classical baselines, plus the run
//!   harness that enforces oracle budgets and records trajectories.
//! - [`verify`]: independent numerical checks (finite differences, hindsight
//!   baselines, regret/reduction bounds, contraction diagnostics).
//! - [`bench`]: dataset/benchmark configuration, deterministic output
//!   emission, and the command-line entry point.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod error;
pub mod feedback;
pub mod linalg;
pub mod online;
pub mod optim;
pub mod precond;
pub mod problems;
pub mod verify;

pub use error::Error;

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
