//! Benchmark harness and CLI.
//!
//! Four subcommands drive the library end to end:
//!
//! * `run` — execute a benchmark configuration (JSON file or flags) and
//!   write per-run CSV traces, a solved table, and `summary.json`;
//! * `grid` — the same sweep, but reporting every grid point per problem
//!   and the best configuration in `grid.json`;
//! * `demo` — toy-quadratic demonstrations of the methods' qualitative
//!   behavior, one CSV per trace;
//! * `verify` — the seeded self-check battery; exits nonzero when any
//!   check fails.
//!
//! Exit codes: 0 on success, 1 when a check or demo assertion fails, 2 for
//! configuration, dataset, or I/O problems.

pub mod config;
pub mod demo;
pub mod output;
pub mod runner;
pub mod suite;

pub use config::{toy_quadratic, AlgorithmSpec, BenchConfig, BetaRange, ProblemSpec, ShapeSpec};
pub use demo::{run_demo, write_demo_outputs, DemoReport};
pub use output::{emit_outputs, trace_csv, GridEntry, Summary, CSV_HEADER};
pub use runner::{execute, BenchOutcome, ExecutedRun, SolvedEntry, SolvedTable};
pub use suite::run_suite;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::problems::DEFAULT_LAMBDA;
use crate::verify::CheckReport;
use crate::Result;

use config::DEFAULT_WARM_START_ITERS;

#[derive(Parser)]
#[command(
    name = "hypergrad",
    about = "Benchmark harness for online-learned preconditioning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a benchmark and write CSV traces plus summary.json.
    Run(RunArgs),
    /// Sweep hyperparameter grids; report every outcome and the best
    /// configuration per problem in grid.json.
    Grid(RunArgs),
    /// Toy-quadratic demonstrations; one CSV per trace.
    Demo(DemoArgs),
    /// Run the self-check battery; nonzero exit on any failed check.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON benchmark configuration; omitted, one is built from the flags
    /// below (toy quadratic unless --dataset is given).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Use a single starting-point seed instead of the config's list.
    #[arg(long)]
    seed: Option<u64>,
    /// Gradient-oracle budget per run (default 1000).
    #[arg(long)]
    budget: Option<u64>,
    /// Stopping tolerance on the gradient infinity norm (default 1e-4).
    #[arg(long)]
    tol: Option<f64>,
    /// Restrict to one algorithm family, e.g. "hdm-best" or "gd".
    #[arg(long)]
    algo: Option<String>,
    /// LIBSVM dataset (repeatable); each one yields a logistic and a
    /// smoothed-SVM problem. Relative paths resolve against
    /// HYPERGRAD_DATA_DIR.
    #[arg(long)]
    dataset: Vec<PathBuf>,
    /// Preconditioner learning rate in units of 1/L; replaces the grid.
    #[arg(long)]
    eta_p: Option<f64>,
    /// Momentum learning rate; replaces the grid.
    #[arg(long)]
    eta_b: Option<f64>,
    /// Interpolation parameter of the accelerated variant (at least 1/2).
    #[arg(long)]
    theta: Option<f64>,
    /// Disable the null step on the plain learned-preconditioner method.
    #[arg(long)]
    no_null_step: bool,
    /// Feasible momentum range for the practical variant.
    #[arg(long, value_enum)]
    beta_range: Option<BetaRangeArg>,
    /// Warm-start the accelerated variant with plain accelerated
    /// iterations before learning.
    #[arg(long)]
    warm_start_agd: bool,
}

#[derive(clap::Args)]
struct DemoArgs {
    /// Output directory for the demo traces.
    #[arg(long, default_value = "demo-out")]
    out: PathBuf,
    /// Seed for the demo instance and starting point.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Seed for the check battery.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the reports to checks.json in this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BetaRangeArg {
    Pos,
    Sym,
}

impl From<BetaRangeArg> for BetaRange {
    fn from(arg: BetaRangeArg) -> BetaRange {
        match arg {
            BetaRangeArg::Pos => BetaRange::Pos,
            BetaRangeArg::Sym => BetaRange::Sym,
        }
    }
}

/// Build a config from flags alone: the default toy quadratic (or the
/// given datasets) against either one family or the full baseline battery.
fn synthesize_config(args: &RunArgs) -> Result<BenchConfig> {
    let problems = if args.dataset.is_empty() {
        vec![ProblemSpec::ToyQuadratic {
            n: 50,
            cond: 1e4,
            seed: 0,
        }]
    } else {
        args.dataset
            .iter()
            .flat_map(|d| {
                [
                    ProblemSpec::Logistic {
                        dataset: d.clone(),
                        lambda: DEFAULT_LAMBDA,
                    },
                    ProblemSpec::SmoothSvm {
                        dataset: d.clone(),
                        lambda: DEFAULT_LAMBDA,
                    },
                ]
            })
            .collect()
    };
    let algorithms = match &args.algo {
        Some(family) => vec![AlgorithmSpec::default_for(family)?],
        None => AlgorithmSpec::battery(),
    };
    Ok(BenchConfig {
        problems,
        algorithms,
        budget: config::DEFAULT_BUDGET,
        tolerance: config::DEFAULT_TOLERANCE,
        seeds: vec![1],
        out: PathBuf::from("bench-out"),
    })
}

/// Apply CLI overrides on top of a loaded or synthesized config.
fn apply_overrides(config: &mut BenchConfig, args: &RunArgs) -> Result<()> {
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    if let Some(budget) = args.budget {
        config.budget = budget;
    }
    if let Some(tol) = args.tol {
        config.tolerance = tol;
    }
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    if let Some(family) = &args.algo {
        config.algorithms.retain(|spec| spec.family() == family);
        if config.algorithms.is_empty() {
            return Err(Error::config(format!(
                "algorithm '{family}' is not in the configuration"
            )));
        }
    }
    for spec in &mut config.algorithms {
        match spec {
            AlgorithmSpec::Hdm {
                eta_p_over_l,
                null_step,
                ..
            } => {
                if let Some(v) = args.eta_p {
                    *eta_p_over_l = v;
                }
                if args.no_null_step {
                    *null_step = false;
                }
            }
            AlgorithmSpec::HdmHb {
                eta_p_over_l,
                eta_b,
            } => {
                if let Some(v) = args.eta_p {
                    *eta_p_over_l = v;
                }
                if let Some(v) = args.eta_b {
                    *eta_b = v;
                }
            }
            AlgorithmSpec::HdmAgd {
                thetas,
                eta_p_over_l,
                warm_start_iters,
                ..
            } => {
                if let Some(v) = args.theta {
                    *thetas = vec![v];
                }
                if let Some(v) = args.eta_p {
                    *eta_p_over_l = v;
                }
                if args.warm_start_agd && *warm_start_iters == 0 {
                    *warm_start_iters = DEFAULT_WARM_START_ITERS;
                }
            }
            AlgorithmSpec::HdmBest {
                eta_p_over_l,
                eta_b,
                beta_range,
            } => {
                if let Some(v) = args.eta_p {
                    *eta_p_over_l = vec![v];
                }
                if let Some(v) = args.eta_b {
                    *eta_b = vec![v];
                }
                if let Some(range) = args.beta_range {
                    *beta_range = range.into();
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn data_root() -> Option<PathBuf> {
    std::env::var_os("HYPERGRAD_DATA_DIR").map(PathBuf::from)
}

fn load_config(args: &RunArgs) -> Result<BenchConfig> {
    let mut config = match &args.config {
        Some(path) => BenchConfig::load(path)?,
        None => synthesize_config(args)?,
    };
    apply_overrides(&mut config, args)?;
    Ok(config)
}

fn print_table(table: &SolvedTable) {
    println!("per-problem winners:");
    for entry in &table.entries {
        println!(
            "  {:<40} seed {:<3} {:<10} {:?} in {} oracles ({})",
            entry.problem,
            entry.seed,
            entry.algorithm,
            entry.status,
            entry.grad_oracles,
            entry.config,
        );
    }
    println!("solved totals:");
    for (family, total) in &table.totals {
        println!("  {family:<10} {total}");
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let config = load_config(args)?;
    let outcome = runner::execute(&config, data_root().as_deref(), args.jobs)?;
    let winners: Vec<&ExecutedRun> = outcome.winners.iter().map(|&i| &outcome.runs[i]).collect();
    let summary = Summary {
        config: config.clone(),
        table: outcome.table.clone(),
        checks: vec![],
    };
    let paths = output::emit_outputs(&winners, &summary, &config.out)?;
    print_table(&outcome.table);
    println!("wrote {} files to {}", paths.len(), config.out.display());
    Ok(0)
}

fn cmd_grid(args: &RunArgs) -> Result<i32> {
    let config = load_config(args)?;
    let outcome = runner::execute(&config, data_root().as_deref(), args.jobs)?;
    let entries = output::grid_entries(&outcome);
    let path = output::write_grid(&config.out, &entries)?;
    for entry in &entries {
        println!(
            "{} seed {} {}: best {} ({} grid points)",
            entry.problem,
            entry.seed,
            entry.algorithm,
            entry.best,
            entry.outcomes.len(),
        );
    }
    println!("wrote {}", path.display());
    Ok(0)
}

fn print_checks(reports: &[CheckReport]) -> bool {
    let mut all_passed = true;
    for report in reports {
        let verdict = if report.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:<32} lhs={:+.6e} rhs={:+.6e} margin={:+.3e}",
            report.name, report.lhs, report.rhs, report.margin
        );
        all_passed &= report.passed;
    }
    all_passed
}

fn cmd_demo(args: &DemoArgs) -> Result<i32> {
    let report = demo::run_demo(args.seed)?;
    let paths = demo::write_demo_outputs(&report, &args.out)?;
    println!("f(x1) = {:.6e}", report.f1);
    let all_passed = print_checks(&report.checks());
    println!("wrote {} traces to {}", paths.len(), args.out.display());
    Ok(if all_passed { 0 } else { 1 })
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let reports = suite::run_suite(args.seed)?;
    let all_passed = print_checks(&reports);
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|source| Error::OutputIo {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join("checks.json");
        let mut text = serde_json::to_string_pretty(&reports)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| Error::OutputIo {
            path: path.clone(),
            source,
        })?;
        println!("wrote {}", path.display());
    }
    let (passed, total) = (reports.iter().filter(|r| r.passed).count(), reports.len());
    println!("{passed}/{total} checks passed");
    Ok(if all_passed { 0 } else { 1 })
}

/// Entry point for the `hypergrad` binary. `argv` is the argument list
/// without the program name; the returned code follows the module's exit
/// convention.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut full: Vec<String> = vec!["hypergrad".to_string()];
    full.extend(argv.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(full) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Grid(args) => cmd_grid(args),
        Cmd::Demo(args) => cmd_demo(args),
        Cmd::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn run_args(pairs: &[&str]) -> RunArgs {
        let mut argv = vec!["hypergrad", "run"];
        argv.extend(pairs);
        match Cli::try_parse_from(argv).unwrap().command {
            Cmd::Run(args) => args,
            _ => unreachable!(),
        }
    }

    #[test]
    fn synthesized_config_defaults_to_the_toy_battery() {
        let args = run_args(&[]);
        let config = load_config(&args).unwrap();
        assert_eq!(config.problems.len(), 1);
        assert_eq!(config.algorithms.len(), 7);
        assert_eq!(config.budget, 1000);
        assert_eq!(config.tolerance, 1e-4);
    }

    #[test]
    fn datasets_expand_to_logistic_and_svm_problems() {
        let args = run_args(&["--dataset", "a.libsvm", "--dataset", "b.libsvm"]);
        let config = load_config(&args).unwrap();
        assert_eq!(config.problems.len(), 4);
        assert!(matches!(config.problems[0], ProblemSpec::Logistic { .. }));
        assert!(matches!(config.problems[1], ProblemSpec::SmoothSvm { .. }));
    }

    #[test]
    fn flags_override_the_config() {
        let args = run_args(&[
            "--algo",
            "hdm-best",
            "--eta-p",
            "10",
            "--eta-b",
            "5",
            "--beta-range",
            "sym",
            "--budget",
            "250",
            "--tol",
            "1e-6",
            "--seed",
            "9",
        ]);
        let config = load_config(&args).unwrap();
        assert_eq!(config.budget, 250);
        assert_eq!(config.tolerance, 1e-6);
        assert_eq!(config.seeds, vec![9]);
        assert_eq!(config.algorithms.len(), 1);
        match &config.algorithms[0] {
            AlgorithmSpec::HdmBest {
                eta_p_over_l,
                eta_b,
                beta_range,
            } => {
                assert_eq!(eta_p_over_l, &[10.0]);
                assert_eq!(eta_b, &[5.0]);
                assert_eq!(*beta_range, BetaRange::Sym);
            }
            other => panic!("unexpected spec {other:?}"),
        }
    }

    #[test]
    fn unknown_algorithm_is_a_config_error() {
        let args = run_args(&["--algo", "newton"]);
        assert!(matches!(load_config(&args), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn run_with_an_empty_algorithm_list_exits_2() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"problems": [{"kind": "toy-quadratic"}], "algorithms": []}"#,
        )
        .unwrap();
        let code = cli_main(["run", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 2);
    }

    #[test]
    fn run_executes_a_small_config_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("results");
        let path = dir.path().join("bench.json");
        fs::write(
            &path,
            r#"{
                "problems": [{"kind": "toy-quadratic", "n": 10, "cond": 50.0, "seed": 3}],
                "algorithms": [{"name": "gd"}, {"name": "hdm-best",
                    "eta_p_over_l": [10.0], "eta_b": [5.0]}],
                "budget": 600,
                "seeds": [1]
            }"#,
        )
        .unwrap();
        let code = cli_main([
            "run",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            "1",
        ]);
        assert_eq!(code, 0);
        let summary_text = fs::read_to_string(out.join("summary.json")).unwrap();
        let summary: Summary = serde_json::from_str(&summary_text).unwrap();
        assert_eq!(summary.table.entries.len(), 2);
        assert_eq!(summary.config.budget, 600);
        let csvs: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| {
                let name = e.unwrap().file_name().into_string().unwrap();
                name.ends_with(".csv").then_some(name)
            })
            .collect();
        assert_eq!(csvs.len(), 2);
    }

    #[test]
    fn grid_reports_every_outcome_and_a_best_config() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep");
        let code = cli_main([
            "grid".to_string(),
            "--algo".to_string(),
            "gd-hb".to_string(),
            "--budget".to_string(),
            "400".to_string(),
            "--out".to_string(),
            out.to_str().unwrap().to_string(),
            "--jobs".to_string(),
            "1".to_string(),
        ]);
        assert_eq!(code, 0);
        let text = fs::read_to_string(out.join("grid.json")).unwrap();
        let entries: Vec<GridEntry> = serde_json::from_str(&text).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].outcomes.len(), 4);
        assert!(entries[0].best.starts_with("gd-hb-beta"));
    }

    #[test]
    fn help_exits_zero_and_bad_flags_exit_two() {
        assert_eq!(cli_main(["--help"]), 0);
        assert_eq!(cli_main(["run", "--no-such-flag"]), 2);
        assert_eq!(cli_main(["frobnicate"]), 2);
    }
}
