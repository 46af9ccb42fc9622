//! Benchmark configuration: problem specs, algorithm specs with parameter
//! grids, and the JSON config file the CLI consumes.
//!
//! Problem-dependent quantities (the smoothness constant `L`) are not known
//! when a config is written, so learning rates and feasible-set caps are
//! expressed in units of `1/L` and resolved per problem at expansion time.
//! Momentum learning rates and interpolation parameters are dimensionless
//! and stored as-is.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, DenseMatrix};
use crate::problems::{load_libsvm, ProblemOracle, DEFAULT_LAMBDA};
use crate::Result;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default gradient-oracle budget per run.
pub const DEFAULT_BUDGET: u64 = 1000;
/// Default stopping tolerance on the gradient infinity norm.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Plain accelerated iterations used when the warm start is enabled
/// without an explicit count.
pub const DEFAULT_WARM_START_ITERS: usize = 100;

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_out() -> PathBuf {
    PathBuf::from("bench-out")
}

fn default_toy_n() -> usize {
    50
}

fn default_toy_cond() -> f64 {
    1e4
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_gd_hb_betas() -> Vec<f64> {
    vec![0.1, 0.5, 0.9, 0.99]
}

fn default_hdm_best_eta_p() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}

fn default_hdm_best_eta_b() -> Vec<f64> {
    vec![1.0, 3.0, 5.0, 10.0, 100.0]
}

fn default_thetas() -> Vec<f64> {
    vec![0.5]
}

fn default_one() -> f64 {
    1.0
}

fn default_cap_over_l() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

/// One optimization problem instance.
///
/// Dataset paths are resolved against the data root (the `HYPERGRAD_DATA_DIR`
/// environment variable in the CLI) when they are relative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    /// `f(x) = ½ xᵀA x` with a rotated log-spaced spectrum; see
    /// [`toy_quadratic`].
    ToyQuadratic {
        #[serde(default = "default_toy_n")]
        n: usize,
        #[serde(default = "default_toy_cond")]
        cond: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Ridge-regularized logistic regression on a LIBSVM file.
    Logistic {
        dataset: PathBuf,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    /// Ridge-regularized smoothed hinge loss on a LIBSVM file.
    SmoothSvm {
        dataset: PathBuf,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

impl ProblemSpec {
    /// Stable identifier used in output file names and the solved table.
    pub fn id(&self) -> String {
        match self {
            ProblemSpec::ToyQuadratic { n, cond, seed } => {
                format!("toy-n{}-cond{:e}-seed{}", n, cond, seed)
            }
            ProblemSpec::Logistic { dataset, .. } => {
                format!("logistic-{}", dataset_stem(dataset))
            }
            ProblemSpec::SmoothSvm { dataset, .. } => {
                format!("svm-{}", dataset_stem(dataset))
            }
        }
    }

    fn resolved_dataset(&self, data_root: Option<&Path>) -> Option<PathBuf> {
        let path = match self {
            ProblemSpec::ToyQuadratic { .. } => return None,
            ProblemSpec::Logistic { dataset, .. } => dataset,
            ProblemSpec::SmoothSvm { dataset, .. } => dataset,
        };
        Some(match data_root {
            Some(root) if path.is_relative() => root.join(path),
            _ => path.clone(),
        })
    }

    /// Build the oracle, loading the dataset when the problem has one.
    pub fn instantiate(&self, data_root: Option<&Path>) -> Result<ProblemOracle> {
        match self {
            ProblemSpec::ToyQuadratic { n, cond, seed } => toy_quadratic(*n, *cond, *seed),
            ProblemSpec::Logistic { lambda, .. } => {
                let path = self.resolved_dataset(data_root).unwrap();
                ProblemOracle::logistic(load_libsvm(&path)?, *lambda)
            }
            ProblemSpec::SmoothSvm { lambda, .. } => {
                let path = self.resolved_dataset(data_root).unwrap();
                ProblemOracle::smooth_svm(load_libsvm(&path)?, *lambda)
            }
        }
    }
}

/// Output label for a dataset path: the file name with its extensions and
/// any filename-unfriendly characters removed.
fn dataset_stem(path: &Path) -> String {
    let mut name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    for suffix in [".gz", ".libsvm", ".txt"] {
        if let Some(stripped) = name.strip_suffix(suffix) {
            name = stripped.to_string();
        }
    }
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Feasible-momentum range for the practical method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[derive(Default)]
pub enum BetaRange {
    /// Nonnegative momentum, `[0, 0.9995]`.
    #[default]
    Pos,
    /// Sign-free momentum, `[-0.9995, 0.9995]`.
    Sym,
}

/// Preconditioner shape for the plain learned method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeSpec {
    Scalar,
    Diagonal,
}

/// One algorithm family plus its hyperparameter grid.
///
/// An empty grid vector means the standard grid for that family. Stepsize
/// grids for `adam` and `adagrad` are absolute; when empty they default to
/// `{1/L, 1e-3, 1e-2, 1e-1, 1, 10}` per problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    /// Gradient descent with the safe stepsize `1/L`.
    Gd,
    /// Heavy-ball with stepsize `1/L` and a fixed momentum grid.
    GdHb {
        #[serde(default = "default_gd_hb_betas")]
        betas: Vec<f64>,
    },
    /// Monotone accelerated gradient descent for convex objectives.
    AgdCvx,
    /// Accelerated gradient descent for strongly convex objectives.
    AgdScvx,
    Adam {
        #[serde(default)]
        stepsizes: Vec<f64>,
    },
    Adagrad {
        #[serde(default)]
        stepsizes: Vec<f64>,
    },
    /// Plain hypergradient descent with a learned preconditioner.
    Hdm {
        #[serde(default = "ShapeSpec::diagonal")]
        shape: ShapeSpec,
        #[serde(default = "default_one")]
        eta_p_over_l: f64,
        #[serde(default = "default_cap_over_l")]
        cap_over_l: f64,
        #[serde(default = "default_true")]
        null_step: bool,
    },
    /// The potential-based heavy-ball variant with exact feedback gradients.
    HdmHb {
        #[serde(default = "default_one")]
        eta_p_over_l: f64,
        #[serde(default = "default_one")]
        eta_b: f64,
    },
    /// The accelerated variant with a learned scalar stepsize.
    HdmAgd {
        #[serde(default = "default_thetas")]
        thetas: Vec<f64>,
        #[serde(default = "default_one")]
        eta_p_over_l: f64,
        #[serde(default = "default_cap_over_l")]
        cap_over_l: f64,
        #[serde(default)]
        warm_start_iters: usize,
    },
    /// The practical variant: diagonal preconditioner plus scalar momentum,
    /// both learned by AdaGrad. Grid units: `eta_p_over_l` in `1/L`,
    /// `eta_b` absolute.
    HdmBest {
        #[serde(default = "default_hdm_best_eta_p")]
        eta_p_over_l: Vec<f64>,
        #[serde(default = "default_hdm_best_eta_b")]
        eta_b: Vec<f64>,
        #[serde(default)]
        beta_range: BetaRange,
    },
}

impl ShapeSpec {
    fn diagonal() -> ShapeSpec {
        ShapeSpec::Diagonal
    }
}

impl AlgorithmSpec {
    /// Family name used for `--algo` matching and solved-table totals.
    pub fn family(&self) -> &'static str {
        match self {
            AlgorithmSpec::Gd => "gd",
            AlgorithmSpec::GdHb { .. } => "gd-hb",
            AlgorithmSpec::AgdCvx => "agd-cvx",
            AlgorithmSpec::AgdScvx => "agd-scvx",
            AlgorithmSpec::Adam { .. } => "adam",
            AlgorithmSpec::Adagrad { .. } => "adagrad",
            AlgorithmSpec::Hdm { .. } => "hdm",
            AlgorithmSpec::HdmHb { .. } => "hdm-hb",
            AlgorithmSpec::HdmAgd { .. } => "hdm-agd",
            AlgorithmSpec::HdmBest { .. } => "hdm-best",
        }
    }

    /// The default spec for a family name, as used by `--algo` without a
    /// config file.
    pub fn default_for(family: &str) -> Result<AlgorithmSpec> {
        Ok(match family {
            "gd" => AlgorithmSpec::Gd,
            "gd-hb" => AlgorithmSpec::GdHb {
                betas: default_gd_hb_betas(),
            },
            "agd-cvx" => AlgorithmSpec::AgdCvx,
            "agd-scvx" => AlgorithmSpec::AgdScvx,
            "adam" => AlgorithmSpec::Adam { stepsizes: vec![] },
            "adagrad" => AlgorithmSpec::Adagrad { stepsizes: vec![] },
            "hdm" => AlgorithmSpec::Hdm {
                shape: ShapeSpec::Diagonal,
                eta_p_over_l: 1.0,
                cap_over_l: 2.0,
                null_step: true,
            },
            "hdm-hb" => AlgorithmSpec::HdmHb {
                eta_p_over_l: 1.0,
                eta_b: 1.0,
            },
            "hdm-agd" => AlgorithmSpec::HdmAgd {
                thetas: default_thetas(),
                eta_p_over_l: 1.0,
                cap_over_l: 2.0,
                warm_start_iters: 0,
            },
            "hdm-best" => AlgorithmSpec::HdmBest {
                eta_p_over_l: default_hdm_best_eta_p(),
                eta_b: default_hdm_best_eta_b(),
                beta_range: BetaRange::Pos,
            },
            other => return Err(Error::config(format!("unknown algorithm family '{other}'"))),
        })
    }

    /// All family names, in the order the default battery runs them.
    pub fn battery() -> Vec<AlgorithmSpec> {
        [
            "gd", "gd-hb", "agd-cvx", "agd-scvx", "adam", "adagrad", "hdm-best",
        ]
        .iter()
        .map(|f| AlgorithmSpec::default_for(f).unwrap())
        .collect()
    }
}

/// A full benchmark description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub problems: Vec<ProblemSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Gradient-oracle budget per run.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Stopping tolerance on the gradient infinity norm.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// One starting point per seed, shared across algorithms.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Output directory for traces and the summary.
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl BenchConfig {
    /// Parse a JSON config file.
    pub fn load(path: &Path) -> Result<BenchConfig> {
        let mut file = File::open(path).map_err(|source| Error::DatasetIo {
            path: path.to_path_buf(),
            source,
        })?;
        let mut text = String::new();
        file.read_to_string(&mut text)
            .map_err(|source| Error::DatasetIo {
                path: path.to_path_buf(),
                source,
            })?;
        let config: BenchConfig = serde_json::from_str(&text)?;
        Ok(config)
    }

    /// Reject empty problem/algorithm/seed lists, bad budgets and
    /// tolerances, and dataset paths that cannot be opened.
    pub fn validate(&self, data_root: Option<&Path>) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::config("config needs at least one problem"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("config needs at least one algorithm"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("config needs at least one seed"));
        }
        if self.budget == 0 {
            return Err(Error::config("gradient-oracle budget must be >= 1"));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::config("tolerance must be finite and > 0"));
        }
        for problem in &self.problems {
            if let ProblemSpec::ToyQuadratic { n, cond, .. } = problem {
                validate_toy(*n, *cond)?;
            }
            if let Some(path) = problem.resolved_dataset(data_root) {
                File::open(&path).map_err(|source| Error::DatasetIo { path, source })?;
            }
        }
        Ok(())
    }
}

fn validate_toy(n: usize, cond: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::config("toy quadratic needs n >= 2"));
    }
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::config("toy quadratic needs a finite cond >= 1"));
    }
    Ok(())
}

/// The demo's ill-conditioned quadratic: `f(x) = ½ xᵀA x` with
/// `A = Qᵀ diag(logspace(1, cond, n)) Q` for a seeded random orthogonal `Q`.
///
/// The spectrum bounds are exact by construction, so the oracle reports
/// `L = cond`, `μ = 1`, and `f* = 0` without estimation.
pub fn toy_quadratic(n: usize, cond: f64, seed: u64) -> Result<ProblemOracle> {
    validate_toy(n, cond)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = linalg::random_orthogonal(&mut rng, n);
    let spectrum = linalg::logspace(1.0, cond, n);
    let a = DenseMatrix::conjugate_diagonal(&q, &spectrum);
    ProblemOracle::quadratic_with_bounds(a, vec![0.0; n], cond, 1.0)
}
