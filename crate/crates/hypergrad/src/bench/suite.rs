//! The `verify` subcommand's check battery: a fixed, seeded set of
//! trajectory and gradient checks that must all pass on a healthy build.
//!
//! Every check is deterministic given the seed. The battery covers the
//! feedback gradients (all parameter shapes, plain and momentum), the two
//! regret guarantees of the online learner, the online-to-offline reduction,
//! the heavy-ball hindsight floor, and the fixed point of the learned
//! preconditioner at the exact inverse Hessian.

use crate::feedback::HBConstants;
use crate::online::{OnlineLearner, StepsizeSchedule};
use crate::optim::{self, Hdm, HdmConfig, HdmHb, RunConfig, Trajectory};
use crate::precond::{FeasibleSet, PrecondShape, Preconditioner};
use crate::problems::ProblemOracle;
use crate::verify::{
    fd_gradient_check, hb_hindsight_floor_check, hindsight_best, log_regret_bound_check,
    precond_distance_trace, reduction_check, regret_bound_check, CheckReport, FeedbackOp,
};
use crate::Result;

use super::config::toy_quadratic;

/// Horizon of the regret-check trajectories.
const REGRET_HORIZON: usize = 200;
/// Iterations of the heavy-ball floor trajectory.
const FLOOR_ITERS: usize = 150;
/// Samples per finite-difference shape check.
const FD_SAMPLES: usize = 50;
const FD_TOL: f64 = 1e-6;

fn full_horizon_config(iters: usize) -> RunConfig {
    RunConfig {
        max_grad_oracles: 10 * iters as u64 + 10,
        // Effectively unreachable: these runs must complete their horizon so
        // the checks see every iteration.
        tol_grad_inf: 1e-300,
        max_iters: Some(iters),
        record_query_points: true,
        snapshot_every: None,
    }
}

/// Scalar-stepsize run of the null-step method on `oracle`, recording query
/// points for the hindsight solve.
fn scalar_run(
    oracle: &ProblemOracle,
    set: &FeasibleSet,
    schedule: StepsizeSchedule,
    iters: usize,
    seed: u64,
) -> Result<Trajectory> {
    let l = oracle.smoothness_bound();
    let learner = OnlineLearner::ogd(Preconditioner::Scalar(1.0 / l), set.clone(), schedule)?;
    let mut opt = Hdm::new(HdmConfig {
        learner,
        null_step: true,
    });
    optim::run(
        &mut opt,
        oracle,
        &full_horizon_config(iters),
        optim::init_point(oracle.dim(), seed),
    )
}

/// Run the whole battery with seeds derived from `seed`.
pub fn run_suite(seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();

    let plain_shapes = [
        PrecondShape::Scalar,
        PrecondShape::Diagonal,
        PrecondShape::Full,
    ];
    for (i, shape) in plain_shapes.into_iter().enumerate() {
        reports.push(fd_gradient_check(
            &FeedbackOp::Plain(shape),
            FD_SAMPLES,
            FD_TOL,
            seed.wrapping_add(i as u64),
        )?);
    }
    let hb_pairs = [
        (PrecondShape::Scalar, PrecondShape::Scalar),
        (PrecondShape::Diagonal, PrecondShape::Scalar),
        (PrecondShape::Full, PrecondShape::Full),
    ];
    for (i, (p_shape, b_shape)) in hb_pairs.into_iter().enumerate() {
        reports.push(fd_gradient_check(
            &FeedbackOp::HeavyBall {
                p_shape,
                b_shape,
                constants: HBConstants::from_smoothness(30.0),
                drop_omega: false,
            },
            FD_SAMPLES,
            FD_TOL,
            seed.wrapping_add(10 + i as u64),
        )?);
    }

    let oracle = toy_quadratic(20, 100.0, seed)?;
    let l = 100.0;
    let set = FeasibleSet::scalar_interval(0.0, 2.0 / l, 20)?;
    let diameter = set.diameter();

    let horizon_schedule = StepsizeSchedule::HorizonConstant {
        diameter,
        smoothness: l,
        horizon: REGRET_HORIZON,
    };
    let sublinear_run = scalar_run(
        &oracle,
        &set,
        horizon_schedule,
        REGRET_HORIZON,
        seed.wrapping_add(20),
    )?;
    let hindsight = hindsight_best(&sublinear_run.query_points, &oracle, &set)?;
    reports.push(regret_bound_check(
        &sublinear_run,
        &horizon_schedule,
        &hindsight,
    )?);
    reports.push(reduction_check(&sublinear_run, &oracle)?);

    let decaying = StepsizeSchedule::Decaying {
        mu: oracle.strong_convexity_estimate(),
    };
    let log_run = scalar_run(
        &oracle,
        &set,
        decaying,
        REGRET_HORIZON,
        seed.wrapping_add(21),
    )?;
    let log_hindsight = hindsight_best(&log_run.query_points, &oracle, &set)?;
    reports.push(log_regret_bound_check(
        &log_run,
        &decaying,
        &log_hindsight,
        diameter,
        l,
    )?);

    reports.push(heavy_ball_floor(&oracle, l, seed.wrapping_add(22))?);
    reports.push(inverse_hessian_fixed_point(seed.wrapping_add(23))?);
    Ok(reports)
}

fn heavy_ball_floor(oracle: &ProblemOracle, l: f64, seed: u64) -> Result<CheckReport> {
    use crate::online::ADAGRAD_EPSILON;
    let p_learner = OnlineLearner::adagrad(
        Preconditioner::Scalar(0.25 / l),
        FeasibleSet::scalar_interval(0.0, 2.0 / l, oracle.dim())?,
        1.0 / l,
        ADAGRAD_EPSILON,
    )?;
    let b_learner = OnlineLearner::adagrad(
        Preconditioner::Scalar(0.5),
        FeasibleSet::scalar_interval(0.0, optim::MOMENTUM_CAP, oracle.dim())?,
        1.0,
        ADAGRAD_EPSILON,
    )?;
    let mut opt = HdmHb::heavy_ball(p_learner, b_learner, l)?;
    let trajectory = optim::run(
        &mut opt,
        oracle,
        &full_horizon_config(FLOOR_ITERS),
        optim::init_point(oracle.dim(), seed),
    )?;
    hb_hindsight_floor_check(&trajectory, oracle, HBConstants::from_smoothness(l), l)
}

/// Start a full-matrix run exactly at `A^{-1}`: the first candidate is the
/// minimizer, the feedback gradient vanishes, and the learned matrix must
/// not move off the inverse.
fn inverse_hessian_fixed_point(seed: u64) -> Result<CheckReport> {
    let oracle = toy_quadratic(8, 50.0, seed)?;
    let a_inv = oracle.quadratic_matrix().unwrap().inverse_spd()?;
    let set = FeasibleSet::FullFrobeniusBall {
        center: a_inv.clone(),
        radius: 1.0,
    };
    let learner = OnlineLearner::ogd(
        Preconditioner::Full(a_inv.clone()),
        set,
        StepsizeSchedule::Constant { eta: 0.02 },
    )?;
    let mut opt = Hdm::new(HdmConfig {
        learner,
        null_step: true,
    });
    let config = RunConfig {
        max_grad_oracles: 50,
        tol_grad_inf: 1e-12,
        max_iters: Some(5),
        record_query_points: false,
        snapshot_every: Some(1),
    };
    let trajectory = optim::run(&mut opt, &oracle, &config, optim::init_point(8, seed))?;
    let distances = precond_distance_trace(&trajectory, &a_inv)?;
    let max_distance = distances.iter().cloned().fold(0.0, f64::max);
    Ok(CheckReport::from_bound(
        "precond-distance-fixed-point",
        max_distance,
        0.0,
        1e-10,
    ))
}
