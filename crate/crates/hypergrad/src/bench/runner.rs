//! Grid expansion and parallel execution of benchmark runs.
//!
//! Each algorithm spec expands into concrete grid points once the problem's
//! smoothness constant is known. Every (problem, seed, grid point) triple
//! becomes one job; jobs run on a rayon pool and results come back in job
//! order, so output is deterministic regardless of scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::online::{OnlineLearner, ADAGRAD_EPSILON};
use crate::optim::{
    self, hdm_best, AdaGradBaseline, Adam, AgdCvx, AgdScvx, Gd, GdHb, Hdm, HdmAgd, HdmAgdConfig,
    HdmConfig, HdmHb, Optimizer, RunConfig, TerminalStatus, Trajectory,
};
use crate::precond::{FeasibleSet, Preconditioner};
use crate::problems::ProblemOracle;
use crate::Result;

use super::config::{AlgorithmSpec, BenchConfig, BetaRange, ShapeSpec};

/// One concrete algorithm configuration, with every problem-dependent
/// quantity already resolved to a number.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgoInstance {
    Gd {
        stepsize: f64,
    },
    GdHb {
        stepsize: f64,
        beta: f64,
    },
    AgdCvx {
        smoothness: f64,
    },
    AgdScvx {
        smoothness: f64,
        strong_convexity: f64,
    },
    Adam {
        stepsize: f64,
    },
    Adagrad {
        stepsize: f64,
    },
    Hdm {
        shape: ShapeSpec,
        eta_p: f64,
        cap: f64,
        p0: f64,
        null_step: bool,
    },
    HdmHb {
        smoothness: f64,
        eta_p: f64,
        eta_b: f64,
        cap: f64,
    },
    HdmAgd {
        smoothness: f64,
        theta: f64,
        eta_p: f64,
        cap: f64,
        warm_start_iters: usize,
    },
    HdmBest {
        smoothness: f64,
        eta_p: f64,
        eta_b: f64,
        symmetric_momentum: bool,
    },
}

impl AlgoInstance {
    /// Construct the optimizer for a problem of the given dimension.
    pub fn build(&self, dim: usize) -> Result<Box<dyn Optimizer>> {
        Ok(match *self {
            AlgoInstance::Gd { stepsize } => Box::new(Gd::new(stepsize)?),
            AlgoInstance::GdHb { stepsize, beta } => Box::new(GdHb::new(stepsize, beta)?),
            AlgoInstance::AgdCvx { smoothness } => Box::new(AgdCvx::new(smoothness)?),
            AlgoInstance::AgdScvx {
                smoothness,
                strong_convexity,
            } => Box::new(AgdScvx::new(smoothness, strong_convexity)?),
            AlgoInstance::Adam { stepsize } => Box::new(Adam::new(stepsize)?),
            AlgoInstance::Adagrad { stepsize } => Box::new(AdaGradBaseline::new(stepsize)?),
            AlgoInstance::Hdm {
                shape,
                eta_p,
                cap,
                p0,
                null_step,
            } => {
                let (param0, set) = match shape {
                    ShapeSpec::Scalar => (
                        Preconditioner::Scalar(p0),
                        FeasibleSet::scalar_interval(0.0, cap, dim)?,
                    ),
                    ShapeSpec::Diagonal => (
                        Preconditioner::Diagonal(vec![p0; dim]),
                        FeasibleSet::diagonal_nonneg(cap, dim)?,
                    ),
                };
                let learner = OnlineLearner::adagrad(param0, set, eta_p, ADAGRAD_EPSILON)?;
                Box::new(Hdm::new(HdmConfig { learner, null_step }))
            }
            AlgoInstance::HdmHb {
                smoothness,
                eta_p,
                eta_b,
                cap,
            } => {
                let p_learner = OnlineLearner::adagrad(
                    Preconditioner::Scalar(0.25 / smoothness),
                    FeasibleSet::scalar_interval(0.0, cap, dim)?,
                    eta_p,
                    ADAGRAD_EPSILON,
                )?;
                let b_learner = OnlineLearner::adagrad(
                    Preconditioner::Scalar(0.5),
                    FeasibleSet::scalar_interval(0.0, optim::MOMENTUM_CAP, dim)?,
                    eta_b,
                    ADAGRAD_EPSILON,
                )?;
                Box::new(HdmHb::heavy_ball(p_learner, b_learner, smoothness)?)
            }
            AlgoInstance::HdmAgd {
                smoothness,
                theta,
                eta_p,
                cap,
                warm_start_iters,
            } => {
                let learner = OnlineLearner::adagrad(
                    Preconditioner::Scalar(1.0 / smoothness),
                    FeasibleSet::scalar_interval(0.0, cap, dim)?,
                    eta_p,
                    ADAGRAD_EPSILON,
                )?;
                Box::new(HdmAgd::new(HdmAgdConfig {
                    learner,
                    theta,
                    smoothness,
                    warm_start_iters,
                })?)
            }
            AlgoInstance::HdmBest {
                smoothness,
                eta_p,
                eta_b,
                symmetric_momentum,
            } => Box::new(hdm_best(smoothness, dim, eta_p, eta_b, symmetric_momentum)?),
        })
    }
}

/// A labeled grid point within one algorithm family.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub family: &'static str,
    /// Filename-safe label identifying the configuration, e.g.
    /// `hdm-best-etap10-etab5`.
    pub label: String,
    pub instance: AlgoInstance,
}

/// Compact float formatting for labels: `0.1`, `10`, `0.0001`.
fn fmt_param(v: f64) -> String {
    format!("{v}")
}

/// Expand a spec into its grid for a problem with smoothness `l` and
/// strong-convexity estimate `mu`.
pub fn expand(spec: &AlgorithmSpec, l: f64, mu: f64) -> Vec<GridPoint> {
    let family = spec.family();
    let point = |label: String, instance: AlgoInstance| GridPoint {
        family,
        label,
        instance,
    };
    match spec {
        AlgorithmSpec::Gd => vec![point("gd".into(), AlgoInstance::Gd { stepsize: 1.0 / l })],
        AlgorithmSpec::GdHb { betas } => betas
            .iter()
            .map(|&beta| {
                point(
                    format!("gd-hb-beta{}", fmt_param(beta)),
                    AlgoInstance::GdHb {
                        stepsize: 1.0 / l,
                        beta,
                    },
                )
            })
            .collect(),
        AlgorithmSpec::AgdCvx => vec![point(
            "agd-cvx".into(),
            AlgoInstance::AgdCvx { smoothness: l },
        )],
        AlgorithmSpec::AgdScvx => vec![point(
            "agd-scvx".into(),
            AlgoInstance::AgdScvx {
                smoothness: l,
                strong_convexity: mu,
            },
        )],
        AlgorithmSpec::Adam { stepsizes } => stepsize_grid(stepsizes, l)
            .into_iter()
            .map(|eta| {
                point(
                    format!("adam-eta{}", fmt_param(eta)),
                    AlgoInstance::Adam { stepsize: eta },
                )
            })
            .collect(),
        AlgorithmSpec::Adagrad { stepsizes } => stepsize_grid(stepsizes, l)
            .into_iter()
            .map(|eta| {
                point(
                    format!("adagrad-eta{}", fmt_param(eta)),
                    AlgoInstance::Adagrad { stepsize: eta },
                )
            })
            .collect(),
        AlgorithmSpec::Hdm {
            shape,
            eta_p_over_l,
            cap_over_l,
            null_step,
        } => {
            let shape_name = match shape {
                ShapeSpec::Scalar => "scalar",
                ShapeSpec::Diagonal => "diagonal",
            };
            let suffix = if *null_step { "" } else { "-vanilla" };
            vec![point(
                format!("hdm-{shape_name}{suffix}"),
                AlgoInstance::Hdm {
                    shape: *shape,
                    eta_p: eta_p_over_l / l,
                    cap: cap_over_l / l,
                    p0: 1.0 / l,
                    null_step: *null_step,
                },
            )]
        }
        AlgorithmSpec::HdmHb {
            eta_p_over_l,
            eta_b,
        } => vec![point(
            "hdm-hb".into(),
            AlgoInstance::HdmHb {
                smoothness: l,
                eta_p: eta_p_over_l / l,
                eta_b: *eta_b,
                cap: 2.0 / l,
            },
        )],
        AlgorithmSpec::HdmAgd {
            thetas,
            eta_p_over_l,
            cap_over_l,
            warm_start_iters,
        } => thetas
            .iter()
            .map(|&theta| {
                let warm = if *warm_start_iters > 0 {
                    format!("-warm{warm_start_iters}")
                } else {
                    String::new()
                };
                point(
                    format!("hdm-agd-theta{}{warm}", fmt_param(theta)),
                    AlgoInstance::HdmAgd {
                        smoothness: l,
                        theta,
                        eta_p: eta_p_over_l / l,
                        cap: cap_over_l / l,
                        warm_start_iters: *warm_start_iters,
                    },
                )
            })
            .collect(),
        AlgorithmSpec::HdmBest {
            eta_p_over_l,
            eta_b,
            beta_range,
        } => {
            let etas_p = grid_or(eta_p_over_l, &[0.1, 1.0, 10.0, 100.0]);
            let etas_b = grid_or(eta_b, &[1.0, 3.0, 5.0, 10.0, 100.0]);
            let mut points = Vec::with_capacity(etas_p.len() * etas_b.len());
            for &ep in &etas_p {
                for &eb in &etas_b {
                    points.push(point(
                        format!("hdm-best-etap{}-etab{}", fmt_param(ep), fmt_param(eb)),
                        AlgoInstance::HdmBest {
                            smoothness: l,
                            eta_p: ep / l,
                            eta_b: eb,
                            symmetric_momentum: *beta_range == BetaRange::Sym,
                        },
                    ));
                }
            }
            points
        }
    }
}

/// Caller grid when nonempty, standard grid otherwise.
fn grid_or(user: &[f64], standard: &[f64]) -> Vec<f64> {
    if user.is_empty() {
        standard.to_vec()
    } else {
        user.to_vec()
    }
}

/// Stepsize grid for the fixed-stepsize adaptive baselines.
fn stepsize_grid(user: &[f64], l: f64) -> Vec<f64> {
    if user.is_empty() {
        vec![1.0 / l, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
    } else {
        user.to_vec()
    }
}

/// One finished run of one grid point.
#[derive(Debug)]
pub struct ExecutedRun {
    pub problem: String,
    pub family: &'static str,
    pub label: String,
    pub seed: u64,
    pub trajectory: Trajectory,
}

impl ExecutedRun {
    pub fn status(&self) -> TerminalStatus {
        self.trajectory.status
    }

    /// Strict "solves faster" ordering: Solved beats unsolved; among solved,
    /// fewer gradient oracles win, ties broken by the smaller final gradient
    /// norm; among unsolved, only the smaller final gradient norm counts.
    pub fn better_than(&self, other: &ExecutedRun) -> bool {
        let (a, b) = (&self.trajectory, &other.trajectory);
        let a_solved = a.status == TerminalStatus::Solved;
        let b_solved = b.status == TerminalStatus::Solved;
        match (a_solved, b_solved) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => {
                (a.grad_oracles_used, a.final_grad_inf) < (b.grad_oracles_used, b.final_grad_inf)
            }
            (false, false) => a.final_grad_inf < b.final_grad_inf,
        }
    }
}

/// A (problem, seed, algorithm family) row of the solved table, carrying
/// the winning grid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedEntry {
    pub problem: String,
    pub seed: u64,
    pub algorithm: String,
    /// Winning grid label within the family.
    pub config: String,
    pub status: TerminalStatus,
    pub grad_oracles: u64,
    pub final_grad_inf: f64,
}

/// Per-(algorithm, problem, seed) outcomes plus per-algorithm solved totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedTable {
    pub entries: Vec<SolvedEntry>,
    /// Family name -> number of Solved entries. Every family present in the
    /// entries appears, including those that solved nothing.
    pub totals: BTreeMap<String, usize>,
}

impl SolvedTable {
    /// Build the table from per-family winners; totals are derived from the
    /// entries so they cannot disagree.
    pub fn from_entries(entries: Vec<SolvedEntry>) -> SolvedTable {
        let mut totals = BTreeMap::new();
        for entry in &entries {
            let solved = totals.entry(entry.algorithm.clone()).or_insert(0);
            if entry.status == TerminalStatus::Solved {
                *solved += 1;
            }
        }
        SolvedTable { entries, totals }
    }
}

/// Everything produced by one benchmark execution: every grid-point run,
/// the per-family winners (as indices into `runs`), and the solved table.
#[derive(Debug)]
pub struct BenchOutcome {
    pub runs: Vec<ExecutedRun>,
    /// Indices of the per-(problem, seed, family) winning runs, in config
    /// order.
    pub winners: Vec<usize>,
    pub table: SolvedTable,
}

struct Job {
    problem_idx: usize,
    seed: u64,
    point: GridPoint,
}

/// Run every (problem, seed, grid point) combination of the config on a
/// rayon pool with `jobs` workers (0 means one per core). Oracles are
/// instantiated once and shared; each job owns its optimizer state.
pub fn execute(
    config: &BenchConfig,
    data_root: Option<&std::path::Path>,
    jobs: usize,
) -> Result<BenchOutcome> {
    config.validate(data_root)?;
    let oracles: Vec<(String, ProblemOracle)> = config
        .problems
        .iter()
        .map(|spec| Ok((spec.id(), spec.instantiate(data_root)?)))
        .collect::<Result<_>>()?;

    let mut job_list = Vec::new();
    for (problem_idx, (_, oracle)) in oracles.iter().enumerate() {
        let l = oracle.smoothness_bound();
        let mu = oracle.strong_convexity_estimate();
        for seed in &config.seeds {
            for spec in &config.algorithms {
                for point in expand(spec, l, mu) {
                    job_list.push(Job {
                        problem_idx,
                        seed: *seed,
                        point,
                    });
                }
            }
        }
    }

    let run_config = RunConfig {
        max_grad_oracles: config.budget,
        tol_grad_inf: config.tolerance,
        max_iters: None,
        record_query_points: false,
        snapshot_every: None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    let runs: Vec<ExecutedRun> = pool.install(|| {
        job_list
            .par_iter()
            .map(|job| {
                let (problem_id, oracle) = &oracles[job.problem_idx];
                let mut opt = job.point.instance.build(oracle.dim())?;
                let x1 = optim::init_point(oracle.dim(), job.seed);
                let trajectory = optim::run(opt.as_mut(), oracle, &run_config, x1)?;
                Ok(ExecutedRun {
                    problem: problem_id.clone(),
                    family: job.point.family,
                    label: job.point.label.clone(),
                    seed: job.seed,
                    trajectory,
                })
            })
            .collect::<Result<_>>()
    })?;

    let winners = pick_winners(&runs);
    let table = SolvedTable::from_entries(
        winners
            .iter()
            .map(|&i| {
                let run = &runs[i];
                SolvedEntry {
                    problem: run.problem.clone(),
                    seed: run.seed,
                    algorithm: run.family.to_string(),
                    config: run.label.clone(),
                    status: run.status(),
                    grad_oracles: run.trajectory.grad_oracles_used,
                    final_grad_inf: run.trajectory.final_grad_inf,
                }
            })
            .collect(),
    );
    Ok(BenchOutcome {
        runs,
        winners,
        table,
    })
}

/// Index of the best run per (problem, seed, family), keeping the first
/// grid point on exact ties so results do not depend on scheduling.
fn pick_winners(runs: &[ExecutedRun]) -> Vec<usize> {
    let mut winners: Vec<usize> = Vec::new();
    let mut index: BTreeMap<(String, u64, &'static str), usize> = BTreeMap::new();
    for (i, run) in runs.iter().enumerate() {
        let key = (run.problem.clone(), run.seed, run.family);
        match index.get(&key) {
            None => {
                index.insert(key, winners.len());
                winners.push(i);
            }
            Some(&slot) => {
                if run.better_than(&runs[winners[slot]]) {
                    winners[slot] = i;
                }
            }
        }
    }
    winners
}
