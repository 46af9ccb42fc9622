//! Acceptance checks: each test exercises one guaranteed behavior end to
//! end and prints a single `PASS`/`FAIL` line naming it, so running this
//! target with `--nocapture` doubles as a checklist.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hypergrad::bench::{self, AlgorithmSpec, BenchConfig, ProblemSpec};
use hypergrad::feedback::HBConstants;
use hypergrad::linalg::{self, DenseMatrix};
use hypergrad::online::{OnlineLearner, StepsizeSchedule, ADAGRAD_EPSILON};
use hypergrad::optim::{
    self, hdm_best, AgdCvx, Gd, Hdm, HdmAgd, HdmAgdConfig, HdmConfig, HdmHb, RunConfig, Trajectory,
    MOMENTUM_CAP,
};
use hypergrad::precond::{FeasibleSet, PrecondShape, Preconditioner};
use hypergrad::problems::{ProblemOracle, DEFAULT_LAMBDA};
use hypergrad::verify::{
    fd_gradient_check, hb_hindsight_floor_check, hindsight_best, log_regret_bound_check,
    precond_distance_trace, reduction_check, regret_bound_check, superlinear_metrics,
    thirds_geometric_means, FeedbackOp,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Print the checklist line, then fail the test with the detail if needed.
fn report(name: &str, passed: bool, detail: String) {
    println!("{} {name}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{name}: {detail}");
}

/// Run configuration that stops on the iteration count alone.
fn exact_iters(iters: usize, record_query_points: bool) -> RunConfig {
    RunConfig {
        max_grad_oracles: 10 * iters as u64 + 10,
        tol_grad_inf: 1e-300,
        max_iters: Some(iters),
        record_query_points,
        snapshot_every: None,
    }
}

/// Scalar-stepsize adaptive run over `[0, 2/L]` with the given schedule.
fn scalar_hdm_run(
    oracle: &ProblemOracle,
    schedule: StepsizeSchedule,
    iters: usize,
    seed: u64,
) -> Trajectory {
    let l = oracle.smoothness_bound();
    let set = FeasibleSet::scalar_interval(0.0, 2.0 / l, oracle.dim()).unwrap();
    let learner = OnlineLearner::ogd(Preconditioner::Scalar(1.0 / l), set, schedule).unwrap();
    let mut opt = Hdm::new(HdmConfig {
        learner,
        null_step: true,
    });
    let x1 = optim::init_point(oracle.dim(), seed);
    optim::run(&mut opt, oracle, &exact_iters(iters, true), x1).unwrap()
}

/// The default learned heavy-ball configuration used across checks.
fn heavy_ball(l: f64, dim: usize) -> HdmHb {
    let p_learner = OnlineLearner::adagrad(
        Preconditioner::Scalar(0.25 / l),
        FeasibleSet::scalar_interval(0.0, 2.0 / l, dim).unwrap(),
        1.0 / l,
        ADAGRAD_EPSILON,
    )
    .unwrap();
    let b_learner = OnlineLearner::adagrad(
        Preconditioner::Scalar(0.5),
        FeasibleSet::scalar_interval(0.0, MOMENTUM_CAP, dim).unwrap(),
        1.0,
        ADAGRAD_EPSILON,
    )
    .unwrap();
    HdmHb::heavy_ball(p_learner, b_learner, l).unwrap()
}

/// Largest increase between consecutive recorded incumbent objectives.
fn max_f_increase(trajectory: &Trajectory) -> f64 {
    trajectory
        .records
        .windows(2)
        .map(|w| w[1].f - w[0].f)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest increase of `f(x) + (omega/2)||x - x_prev||^2` along the stored
/// query points of a momentum run.
fn max_potential_increase(trajectory: &Trajectory, omega: f64) -> f64 {
    let psi: Vec<f64> = trajectory
        .query_points
        .iter()
        .map(|q| {
            let dx_sq = q
                .x_prev
                .as_ref()
                .map_or(0.0, |p| linalg::norm2_sq(&linalg::sub(&q.x, p)));
            q.fx + 0.5 * omega * dx_sq
        })
        .collect();
    psi.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[test]
fn feedback_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let plain = [
        PrecondShape::Scalar,
        PrecondShape::Diagonal,
        PrecondShape::Full,
    ];
    for (i, shape) in plain.into_iter().enumerate() {
        let check = fd_gradient_check(&FeedbackOp::Plain(shape), 50, 1e-6, 40 + i as u64).unwrap();
        if !check.passed {
            failures.push(format!("{shape:?}: error {:.3e}", check.lhs));
        }
    }
    let pairs = [
        (PrecondShape::Scalar, PrecondShape::Scalar),
        (PrecondShape::Diagonal, PrecondShape::Scalar),
        (PrecondShape::Full, PrecondShape::Full),
    ];
    for (i, (p_shape, b_shape)) in pairs.into_iter().enumerate() {
        let op = FeedbackOp::HeavyBall {
            p_shape,
            b_shape,
            constants: HBConstants::from_smoothness(30.0),
            drop_omega: false,
        };
        let check = fd_gradient_check(&op, 50, 1e-6, 50 + i as u64).unwrap();
        if !check.passed {
            failures.push(format!("{p_shape:?}/{b_shape:?}: error {:.3e}", check.lhs));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        failures.push(format!("took {elapsed:.2?}, limit 5s"));
    }
    report(
        "feedback-gradients-fd",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn horizon_schedule_meets_the_sublinear_regret_bound() {
    let start = Instant::now();
    let horizon = 500;
    let mut failures = Vec::new();
    for i in 0..10u64 {
        let cond = 10.0 * (i + 1) as f64;
        let oracle = bench::toy_quadratic(20, cond, 100 + i).unwrap();
        let l = oracle.smoothness_bound();
        let set = FeasibleSet::scalar_interval(0.0, 2.0 / l, 20).unwrap();
        let schedule = StepsizeSchedule::HorizonConstant {
            diameter: set.diameter(),
            smoothness: l,
            horizon,
        };
        let trajectory = scalar_hdm_run(&oracle, schedule, horizon, 150 + i);
        let hindsight = hindsight_best(&trajectory.query_points, &oracle, &set).unwrap();
        let check = regret_bound_check(&trajectory, &schedule, &hindsight).unwrap();
        if !check.passed {
            failures.push(format!(
                "cond {cond}: regret {:.6e} > bound {:.6e}",
                check.lhs, check.rhs
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(30) {
        failures.push(format!("took {elapsed:.2?}, limit 30s"));
    }
    report("regret-sublinear", failures.is_empty(), failures.join("; "));
}

#[test]
fn decaying_schedule_meets_the_logarithmic_regret_bound() {
    let horizon = 500;
    let mut failures = Vec::new();
    for i in 0..10u64 {
        let cond = 10.0 * (i + 1) as f64;
        let oracle = bench::toy_quadratic(20, cond, 100 + i).unwrap();
        let l = oracle.smoothness_bound();
        let set = FeasibleSet::scalar_interval(0.0, 2.0 / l, 20).unwrap();
        let schedule = StepsizeSchedule::Decaying {
            mu: oracle.strong_convexity_estimate(),
        };
        let trajectory = scalar_hdm_run(&oracle, schedule, horizon, 150 + i);
        let hindsight = hindsight_best(&trajectory.query_points, &oracle, &set).unwrap();
        let check =
            log_regret_bound_check(&trajectory, &schedule, &hindsight, set.diameter(), l).unwrap();
        if !check.passed {
            failures.push(format!(
                "cond {cond}: regret {:.6e} > bound {:.6e}",
                check.lhs, check.rhs
            ));
        }
    }
    report(
        "regret-logarithmic",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn gaps_obey_the_online_to_offline_reduction() {
    let iters = 300;
    let mut failures = Vec::new();
    for i in 0..20u64 {
        let cond = 5.0 * (i + 1) as f64;
        let oracle = bench::toy_quadratic(20, cond, 200 + i).unwrap();
        let l = oracle.smoothness_bound();
        let set = FeasibleSet::scalar_interval(0.0, 2.0 / l, 20).unwrap();
        let schedule = StepsizeSchedule::HorizonConstant {
            diameter: set.diameter(),
            smoothness: l,
            horizon: iters,
        };
        let trajectory = scalar_hdm_run(&oracle, schedule, iters, 250 + i);
        let check = reduction_check(&trajectory, &oracle).unwrap();
        if !check.passed {
            failures.push(format!(
                "cond {cond}: gap {:.6e} > bound {:.6e}",
                check.lhs, check.rhs
            ));
        }
    }
    report("reduction-bounds", failures.is_empty(), failures.join("; "));
}

#[test]
fn adaptive_trajectories_keep_potentials_nonincreasing() {
    let mut failures = Vec::new();
    let mut total_records = 0usize;

    // Scalar and diagonal adaptive runs: the null step makes the recorded
    // incumbent objective nonincreasing by construction.
    for (label, shape_diag, cond, seed, iters) in [
        ("hdm-scalar", false, 1e3, 301u64, 300usize),
        ("hdm-diagonal", true, 1e3, 302, 300),
    ] {
        let oracle = bench::toy_quadratic(30, cond, seed).unwrap();
        let l = oracle.smoothness_bound();
        let set = if shape_diag {
            FeasibleSet::diagonal_nonneg(2.0 / l, 30).unwrap()
        } else {
            FeasibleSet::scalar_interval(0.0, 2.0 / l, 30).unwrap()
        };
        let param0 = if shape_diag {
            Preconditioner::Diagonal(vec![1.0 / l; 30])
        } else {
            Preconditioner::Scalar(1.0 / l)
        };
        let learner = OnlineLearner::adagrad(param0, set, 1.0 / l, ADAGRAD_EPSILON).unwrap();
        let mut opt = Hdm::new(HdmConfig {
            learner,
            null_step: true,
        });
        let x1 = optim::init_point(30, seed + 50);
        let trajectory = optim::run(&mut opt, &oracle, &exact_iters(iters, false), x1).unwrap();
        total_records += trajectory.records.len();
        let inc = max_f_increase(&trajectory);
        if inc > 0.0 {
            failures.push(format!("{label}: objective rose by {inc:.3e}"));
        }
    }

    // Practical diagonal+momentum variant: objective nonincreasing.
    {
        let oracle = bench::toy_quadratic(50, 1e4, 303).unwrap();
        let l = oracle.smoothness_bound();
        let mut opt = hdm_best(l, 50, 10.0 / l, 5.0, false).unwrap();
        let x1 = optim::init_point(50, 353);
        let trajectory = optim::run(&mut opt, &oracle, &exact_iters(200, false), x1).unwrap();
        total_records += trajectory.records.len();
        let inc = max_f_increase(&trajectory);
        if inc > 0.0 {
            failures.push(format!("hdm-best: objective rose by {inc:.3e}"));
        }
    }

    // Accelerated variant: the incumbent only moves on strict decrease.
    {
        let oracle = bench::toy_quadratic(50, 1e2, 304).unwrap();
        let l = oracle.smoothness_bound();
        let learner = OnlineLearner::adagrad(
            Preconditioner::Scalar(1.0 / l),
            FeasibleSet::scalar_interval(0.0, 2.0 / l, 50).unwrap(),
            1.0 / l,
            ADAGRAD_EPSILON,
        )
        .unwrap();
        let mut opt = HdmAgd::new(HdmAgdConfig {
            learner,
            theta: 0.5,
            smoothness: l,
            warm_start_iters: 0,
        })
        .unwrap();
        let x1 = optim::init_point(50, 354);
        let trajectory = optim::run(&mut opt, &oracle, &exact_iters(200, false), x1).unwrap();
        total_records += trajectory.records.len();
        let inc = max_f_increase(&trajectory);
        if inc > 0.0 {
            failures.push(format!("hdm-agd: objective rose by {inc:.3e}"));
        }
    }

    // Guarded heavy-ball variant: the potential f + (omega/2)||x - x_prev||^2
    // is what its null step keeps nonincreasing.
    {
        let oracle = bench::toy_quadratic(20, 1e2, 305).unwrap();
        let l = oracle.smoothness_bound();
        let mut opt = heavy_ball(l, 20);
        let x1 = optim::init_point(20, 355);
        let trajectory = optim::run(&mut opt, &oracle, &exact_iters(150, true), x1).unwrap();
        total_records += trajectory.records.len();
        let omega = HBConstants::from_smoothness(l).omega;
        let inc = max_potential_increase(&trajectory, omega);
        if inc > 0.0 {
            failures.push(format!("hdm-hb: potential rose by {inc:.3e}"));
        }
    }

    if total_records < 1000 {
        failures.push(format!(
            "only {total_records} recorded iterations, need 1000"
        ));
    }
    report(
        "potential-monotone",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn vanilla_spikes_and_recovers_while_null_step_stays_bounded() {
    let demo = bench::run_demo(1).unwrap();
    let mut failures = Vec::new();
    for name in [
        "demo-vanilla-spike",
        "demo-vanilla-final",
        "demo-null-step-max",
    ] {
        let check = demo
            .checks()
            .into_iter()
            .find(|c| c.name == name)
            .expect("demo check present");
        if !check.passed {
            failures.push(format!(
                "{name}: lhs {:.6e} rhs {:.6e}",
                check.lhs, check.rhs
            ));
        }
    }
    report(
        "two-phase-instability",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn full_matrix_learning_turns_contraction_superlinear() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let dim = 20;
    let cond = 100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let q = linalg::random_orthogonal(&mut rng, dim);
    let eigs = linalg::logspace(1.0, cond, dim);
    let a = DenseMatrix::conjugate_diagonal(&q, &eigs);
    let oracle = ProblemOracle::quadratic_with_bounds(a, vec![0.0; dim], cond, 1.0).unwrap();
    let l = oracle.smoothness_bound();
    let a_inv = oracle.quadratic_matrix().unwrap().inverse_spd().unwrap();
    let center = DenseMatrix::scaled_identity(dim, 1.0 / l);
    let radius = 1.2 * center.add_scaled(-1.0, &a_inv).frobenius_norm();
    let set = FeasibleSet::FullFrobeniusBall { center, radius };
    let learner = OnlineLearner::ogd(
        Preconditioner::Full(DenseMatrix::scaled_identity(dim, 1.0 / l)),
        set,
        StepsizeSchedule::Constant { eta: 1.0 / l },
    )
    .unwrap();
    let mut opt = Hdm::new(HdmConfig {
        learner,
        null_step: true,
    });
    // Start with every mode contributing the same share of the objective gap,
    // so the early contraction settles at the slow-mode rate instead of being
    // front-loaded by the stiff modes dying off.
    let x1: Vec<f64> = (0..dim)
        .map(|j| (0..dim).map(|i| q.get(i, j) / eigs[i].sqrt()).sum())
        .collect();
    let gap1 = oracle.eval_f(&x1).unwrap();
    // Stop once the gap is provably at most 1e-13 of the initial gap:
    // for this instance f - f* <= n * ||grad||_inf^2 / (2 mu).
    let tol = (2.0 * 1e-13 * gap1 / dim as f64).sqrt();
    let config = RunConfig {
        max_grad_oracles: 2000,
        tol_grad_inf: tol,
        max_iters: Some(1000),
        record_query_points: false,
        snapshot_every: None,
    };
    let trajectory = optim::run(&mut opt, &oracle, &config, x1.clone()).unwrap();
    let final_gap = trajectory.final_f;
    if final_gap > 1e-12 * gap1 {
        failures.push(format!(
            "final gap {final_gap:.3e} above 1e-12 of initial {gap1:.3e}"
        ));
    }
    if trajectory.iterations() > 1000 {
        failures.push(format!("took {} iterations", trajectory.iterations()));
    }
    let metrics = superlinear_metrics(&trajectory, 0.0, 10);
    match thirds_geometric_means(&metrics.ratios) {
        Some([t0, t1, t2]) => {
            if !(t0 > t1 && t1 > t2) {
                failures.push(format!("thirds not decreasing: {t0:.4} {t1:.4} {t2:.4}"));
            }
        }
        None => failures.push("too few contraction ratios".to_string()),
    }

    // Negative control: plain gradient descent contracts at a constant rate.
    let mut gd = Gd::new(1.0 / l).unwrap();
    let gd_trajectory = optim::run(&mut gd, &oracle, &exact_iters(1000, false), x1).unwrap();
    let gd_metrics = superlinear_metrics(&gd_trajectory, 0.0, 10);
    let ratios = &gd_metrics.ratios;
    match thirds_geometric_means(ratios) {
        Some([t0, t1, t2]) => {
            if t0 > t1 && t1 > t2 {
                failures.push(format!(
                    "gradient-descent thirds decreasing: {t0:.4} {t1:.4} {t2:.4}"
                ));
            }
        }
        None => failures.push("too few gradient-descent ratios".to_string()),
    }
    let tail = &ratios[ratios.len() - 100..];
    let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > 1e-4 {
        failures.push(format!("gradient-descent tail ratio spread {spread:.3e}"));
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        failures.push(format!("took {elapsed:.2?}, limit 10s"));
    }
    report(
        "superlinear-contraction",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn learned_preconditioner_approaches_the_inverse_hessian() {
    let dim = 8;
    let oracle = bench::toy_quadratic(dim, 10.0, 800).unwrap();
    let l = oracle.smoothness_bound();
    let a_inv = oracle.quadratic_matrix().unwrap().inverse_spd().unwrap();
    let p1 = DenseMatrix::scaled_identity(dim, 1.0 / l);
    let initial = p1.add_scaled(-1.0, &a_inv).frobenius_norm();
    let set = FeasibleSet::FullFrobeniusBall {
        center: p1.clone(),
        radius: 1.25 * initial,
    };
    let learner = OnlineLearner::ogd(
        Preconditioner::Full(p1),
        set,
        StepsizeSchedule::Constant { eta: 1.0 / l },
    )
    .unwrap();
    // No null step: the iterate keeps moving, so the gradient directions
    // keep rotating through the whole space.
    let mut opt = Hdm::new(HdmConfig {
        learner,
        null_step: false,
    });
    let x1 = optim::init_point(dim, 850);
    let config = RunConfig {
        max_grad_oracles: 5000,
        tol_grad_inf: 1e-300,
        max_iters: Some(400),
        record_query_points: false,
        snapshot_every: Some(1),
    };
    let trajectory = optim::run(&mut opt, &oracle, &config, x1).unwrap();
    let distances = precond_distance_trace(&trajectory, &a_inv).unwrap();
    let final_distance = *distances.last().unwrap();
    report(
        "precond-convergence",
        final_distance <= 0.5 * initial,
        format!("final {final_distance:.4e} vs initial {initial:.4e}"),
    );
}

#[test]
fn momentum_feedback_clears_the_hindsight_floor() {
    let mut failures = Vec::new();
    for i in 0..5u64 {
        let oracle = bench::toy_quadratic(20, 100.0, 900 + i).unwrap();
        let l = oracle.smoothness_bound();
        let mut opt = heavy_ball(l, 20);
        let x1 = optim::init_point(20, 950 + i);
        let trajectory = optim::run(&mut opt, &oracle, &exact_iters(150, true), x1).unwrap();
        let check =
            hb_hindsight_floor_check(&trajectory, &oracle, HBConstants::from_smoothness(l), l)
                .unwrap();
        if !check.passed {
            failures.push(format!(
                "seed {}: average {:.6e} above floor {:.6e}",
                900 + i,
                check.lhs,
                check.rhs
            ));
        }
    }
    report(
        "hb-hindsight-floor",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn pinned_agd_matches_baseline_and_theta_one_wins() {
    let mut failures = Vec::new();
    let oracle = bench::toy_quadratic(50, 1e4, 1000).unwrap();
    let l = oracle.smoothness_bound();
    let x1 = optim::init_point(50, 1001);
    let config = exact_iters(200, false);

    // Preconditioner pinned to exactly 1/L: the adaptive method must
    // reproduce the fixed-stepsize accelerated baseline.
    let pinned = OnlineLearner::ogd(
        Preconditioner::Scalar(1.0 / l),
        FeasibleSet::scalar_interval(1.0 / l, 1.0 / l, 50).unwrap(),
        StepsizeSchedule::Constant { eta: 1.0 },
    )
    .unwrap();
    let mut adaptive = HdmAgd::new(HdmAgdConfig {
        learner: pinned,
        theta: 0.5,
        smoothness: l,
        warm_start_iters: 0,
    })
    .unwrap();
    let adaptive_run = optim::run(&mut adaptive, &oracle, &config, x1.clone()).unwrap();
    let mut baseline = AgdCvx::new(l).unwrap();
    let baseline_run = optim::run(&mut baseline, &oracle, &config, x1.clone()).unwrap();
    if adaptive_run.records.len() != baseline_run.records.len() {
        failures.push(format!(
            "record counts differ: {} vs {}",
            adaptive_run.records.len(),
            baseline_run.records.len()
        ));
    }
    for (a, b) in adaptive_run.records.iter().zip(&baseline_run.records) {
        let rel = (a.f - b.f).abs() / b.f.abs().max(1.0);
        if rel > 1e-10 {
            failures.push(format!(
                "iteration {}: objectives {:.17e} vs {:.17e}",
                a.iter, a.f, b.f
            ));
            break;
        }
        if a.null_step != b.null_step {
            failures.push(format!("iteration {}: null-step pattern differs", a.iter));
            break;
        }
    }

    // With learning on, the theta = 1 weighting must do at least as well
    // as theta = 1/2 at the same iteration count.
    let mut gaps = [0.0f64; 2];
    for (slot, theta) in [(0usize, 1.0f64), (1, 0.5)] {
        let learner = OnlineLearner::adagrad(
            Preconditioner::Scalar(1.0 / l),
            FeasibleSet::scalar_interval(0.0, 2.0 / l, 50).unwrap(),
            1.0 / l,
            ADAGRAD_EPSILON,
        )
        .unwrap();
        let mut opt = HdmAgd::new(HdmAgdConfig {
            learner,
            theta,
            smoothness: l,
            warm_start_iters: 0,
        })
        .unwrap();
        let trajectory = optim::run(&mut opt, &oracle, &config, x1.clone()).unwrap();
        gaps[slot] = trajectory.final_f;
    }
    if gaps[0] > gaps[1] {
        failures.push(format!(
            "theta 1 gap {:.6e} above theta 1/2 gap {:.6e}",
            gaps[0], gaps[1]
        ));
    }
    report("agd-pinned-theta", failures.is_empty(), failures.join("; "));
}

#[test]
fn learned_variant_dominates_baselines_on_datasets() {
    let start = Instant::now();
    let data_root = data_dir();
    let mut problems = Vec::new();
    for stem in ["synth-dense", "synth-scale", "synth-sparse"] {
        let dataset = PathBuf::from(format!("{stem}.libsvm"));
        problems.push(ProblemSpec::Logistic {
            dataset: dataset.clone(),
            lambda: DEFAULT_LAMBDA,
        });
        problems.push(ProblemSpec::SmoothSvm {
            dataset,
            lambda: DEFAULT_LAMBDA,
        });
    }
    let baselines = ["gd", "gd-hb", "agd-cvx", "adam", "adagrad"];
    let mut algorithms: Vec<AlgorithmSpec> = baselines
        .iter()
        .map(|f| AlgorithmSpec::default_for(f).unwrap())
        .collect();
    algorithms.push(AlgorithmSpec::default_for("hdm-best").unwrap());
    let config = BenchConfig {
        problems,
        algorithms,
        budget: 1000,
        tolerance: 1e-4,
        seeds: vec![1],
        out: PathBuf::from("unused"),
    };
    let outcome = bench::execute(&config, Some(&data_root), 0).unwrap();
    let solved = |family: &str| outcome.table.totals.get(family).copied().unwrap_or(0);
    let learned = solved("hdm-best");
    let mut failures = Vec::new();
    for family in baselines {
        if learned < solved(family) {
            failures.push(format!(
                "hdm-best solved {learned}, {family} solved {}",
                solved(family)
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(600) {
        failures.push(format!("took {elapsed:.2?}, limit 600s"));
    }
    report(
        "benchmark-dominance",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn identical_seed_and_config_reproduce_outputs_exactly() {
    let config = BenchConfig {
        problems: vec![ProblemSpec::ToyQuadratic {
            n: 20,
            cond: 100.0,
            seed: 1,
        }],
        algorithms: vec![
            AlgorithmSpec::default_for("gd-hb").unwrap(),
            AlgorithmSpec::default_for("hdm-best").unwrap(),
        ],
        budget: 300,
        tolerance: 1e-4,
        seeds: vec![7],
        out: PathBuf::from("unused"),
    };
    let first = bench::execute(&config, None, 0).unwrap();
    let second = bench::execute(&config, None, 0).unwrap();
    let mut failures = Vec::new();
    if first.runs.len() != second.runs.len() {
        failures.push(format!(
            "run counts differ: {} vs {}",
            first.runs.len(),
            second.runs.len()
        ));
    }
    for (a, b) in first.runs.iter().zip(&second.runs) {
        if a.label != b.label || a.seed != b.seed {
            failures.push(format!("run order differs: {} vs {}", a.label, b.label));
            break;
        }
        if bench::trace_csv(&a.trajectory) != bench::trace_csv(&b.trajectory) {
            failures.push(format!("trace for {} differs between runs", a.label));
            break;
        }
    }
    let tables = (
        serde_json::to_string(&first.table).unwrap(),
        serde_json::to_string(&second.table).unwrap(),
    );
    if tables.0 != tables.1 {
        failures.push("solved tables differ".to_string());
    }
    report(
        "output-determinism",
        failures.is_empty(),
        failures.join("; "),
    );
}
