//! Machine-readable outputs: per-run CSV traces and the JSON summary.
//!
//! All floating-point cells are printed with 17 significant digits
//! (`{:.16e}`), which round-trips every finite f64 exactly, so identical
//! runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::optim::Trajectory;
use crate::verify::CheckReport;
use crate::Result;

use crate::optim::TerminalStatus;

use super::config::BenchConfig;
use super::runner::{BenchOutcome, ExecutedRun, SolvedTable};

/// CSV column header shared by every trace file.
pub const CSV_HEADER: &str = "iter,grad_oracles,f,f_gap,grad_inf_norm,h_value,null_step";

/// Everything `summary.json` records about one benchmark execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// The configuration the benchmark ran with.
    pub config: BenchConfig,
    pub table: SolvedTable,
    /// Reports from any checks run alongside the benchmark; empty for a
    /// plain `run`.
    pub checks: Vec<CheckReport>,
}

fn write_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::OutputIo {
        path: path.to_path_buf(),
        source,
    }
}

fn float_cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional_cell(v: Option<f64>) -> String {
    v.map(float_cell).unwrap_or_default()
}

/// Render a trajectory as CSV text, one row per recorded iteration
/// (including iteration 0). `f_gap` and `h_value` cells are empty when
/// unknown.
pub fn trace_csv(trajectory: &Trajectory) -> String {
    let mut text = String::with_capacity(64 * (trajectory.records.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for record in &trajectory.records {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            record.iter,
            record.grad_oracles,
            float_cell(record.f),
            optional_cell(record.f_gap),
            float_cell(record.grad_inf_norm),
            optional_cell(record.h_value),
            record.null_step,
        ));
    }
    text
}

/// File name for one run's trace: `{problem}__{config}__seed{seed}.csv`.
pub fn trace_file_name(run: &ExecutedRun) -> String {
    format!("{}__{}__seed{}.csv", run.problem, run.label, run.seed)
}

/// Write one trace CSV into `dir` and return its path.
pub fn write_trace(dir: &Path, run: &ExecutedRun) -> Result<PathBuf> {
    let path = dir.join(trace_file_name(run));
    fs::write(&path, trace_csv(&run.trajectory)).map_err(write_error(&path))?;
    Ok(path)
}

/// Serialize the summary with stable field ordering and a trailing newline.
pub fn summary_json(summary: &Summary) -> Result<String> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    Ok(text)
}

/// Write `summary.json` into `dir` and return its path.
pub fn write_summary(dir: &Path, summary: &Summary) -> Result<PathBuf> {
    let path = dir.join("summary.json");
    fs::write(&path, summary_json(summary)?).map_err(write_error(&path))?;
    Ok(path)
}

/// Write every trace plus `summary.json` into `dir`, creating it first.
/// Returns the written paths, traces first.
pub fn emit_outputs(runs: &[&ExecutedRun], summary: &Summary, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(write_error(dir))?;
    let mut paths = Vec::with_capacity(runs.len() + 1);
    for run in runs {
        paths.push(write_trace(dir, run)?);
    }
    paths.push(write_summary(dir, summary)?);
    Ok(paths)
}

/// One grid point's result inside a [`GridEntry`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub config: String,
    pub status: TerminalStatus,
    pub grad_oracles: u64,
    pub final_grad_inf: f64,
}

/// Sweep results for one (problem, seed, algorithm family): every grid
/// point's outcome and the label of the best one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub problem: String,
    pub seed: u64,
    pub algorithm: String,
    /// Label of the winning configuration.
    pub best: String,
    pub outcomes: Vec<GridOutcome>,
}

/// Group a benchmark outcome into per-family sweep entries, in config
/// order.
pub fn grid_entries(outcome: &BenchOutcome) -> Vec<GridEntry> {
    outcome
        .winners
        .iter()
        .map(|&w| {
            let winner = &outcome.runs[w];
            let outcomes = outcome
                .runs
                .iter()
                .filter(|r| {
                    r.problem == winner.problem
                        && r.seed == winner.seed
                        && r.family == winner.family
                })
                .map(|r| GridOutcome {
                    config: r.label.clone(),
                    status: r.status(),
                    grad_oracles: r.trajectory.grad_oracles_used,
                    final_grad_inf: r.trajectory.final_grad_inf,
                })
                .collect();
            GridEntry {
                problem: winner.problem.clone(),
                seed: winner.seed,
                algorithm: winner.family.to_string(),
                best: winner.label.clone(),
                outcomes,
            }
        })
        .collect()
}

/// Write `grid.json` into `dir` and return its path.
pub fn write_grid(dir: &Path, entries: &[GridEntry]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(write_error(dir))?;
    let path = dir.join("grid.json");
    let mut text = serde_json::to_string_pretty(entries)?;
    text.push('\n');
    fs::write(&path, text).map_err(write_error(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::{toy_quadratic, AlgorithmSpec, ProblemSpec};
    use crate::bench::runner::{execute, SolvedEntry};
    use crate::optim::{self, Gd, RunConfig, TerminalStatus};
    use std::collections::BTreeMap;

    fn solved_toy_run() -> ExecutedRun {
        let oracle = toy_quadratic(8, 10.0, 2).unwrap();
        let mut opt = Gd::new(0.1).unwrap();
        let config = RunConfig {
            max_grad_oracles: 500,
            ..RunConfig::default()
        };
        let trajectory = optim::run(&mut opt, &oracle, &config, optim::init_point(8, 1)).unwrap();
        ExecutedRun {
            problem: "toy-n8-cond1e1-seed2".into(),
            family: "gd",
            label: "gd".into(),
            seed: 1,
            trajectory,
        }
    }

    #[test]
    fn csv_has_one_row_per_recorded_iteration_and_meets_the_tolerance() {
        let run = solved_toy_run();
        assert_eq!(run.trajectory.status, TerminalStatus::Solved);
        let text = trace_csv(&run.trajectory);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), run.trajectory.iterations() + 2);
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        assert_eq!(last.len(), 7);
        let grad_inf: f64 = last[4].parse().unwrap();
        assert!(grad_inf <= 1e-4);
        // A known optimum means every f_gap cell is filled.
        assert!(!last[3].is_empty());
        assert!(last[6] == "true" || last[6] == "false");
    }

    #[test]
    fn float_cells_round_trip_exactly() {
        for v in [1.0 / 3.0, 1e-300, 12345.6789, 4.9e-324] {
            let cell = float_cell(v);
            let back: f64 = cell.parse().unwrap();
            assert_eq!(back, v);
        }
    }

    #[test]
    fn identical_runs_emit_byte_identical_csvs() {
        let (a, b) = (solved_toy_run(), solved_toy_run());
        assert_eq!(trace_csv(&a.trajectory), trace_csv(&b.trajectory));
    }

    #[test]
    fn summary_round_trips_structurally() {
        let config = crate::bench::config::BenchConfig {
            problems: vec![ProblemSpec::ToyQuadratic {
                n: 8,
                cond: 10.0,
                seed: 2,
            }],
            algorithms: vec![AlgorithmSpec::Gd],
            budget: 500,
            tolerance: 1e-4,
            seeds: vec![1],
            out: PathBuf::from("out"),
        };
        let entries = vec![SolvedEntry {
            problem: "toy-n8-cond1e1-seed2".into(),
            seed: 1,
            algorithm: "gd".into(),
            config: "gd".into(),
            status: TerminalStatus::Solved,
            grad_oracles: 42,
            final_grad_inf: 3.2e-5,
        }];
        let summary = Summary {
            config,
            table: SolvedTable::from_entries(entries),
            checks: vec![CheckReport {
                name: "example".into(),
                passed: true,
                lhs: -1.0,
                rhs: 0.0,
                margin: -1.0,
            }],
        };
        let text = summary_json(&summary).unwrap();
        let back: Summary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, summary);
    }

    #[test]
    fn emit_outputs_writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let config = crate::bench::config::BenchConfig {
            problems: vec![ProblemSpec::ToyQuadratic {
                n: 8,
                cond: 10.0,
                seed: 2,
            }],
            algorithms: vec![AlgorithmSpec::Gd],
            budget: 500,
            tolerance: 1e-4,
            seeds: vec![1],
            out: dir.path().to_path_buf(),
        };
        let outcome = execute(&config, None, 1).unwrap();
        let winners: Vec<&ExecutedRun> =
            outcome.winners.iter().map(|&i| &outcome.runs[i]).collect();
        let summary = Summary {
            config: config.clone(),
            table: outcome.table.clone(),
            checks: vec![],
        };
        let paths = emit_outputs(&winners, &summary, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths[0].ends_with("toy-n8-cond1e1-seed2__gd__seed1.csv"));
        assert!(paths[1].ends_with("summary.json"));
        for path in &paths {
            assert!(path.exists());
        }
        let text = fs::read_to_string(&paths[1]).unwrap();
        let back: Summary = serde_json::from_str(&text).unwrap();
        assert_eq!(back.table.totals, BTreeMap::from([("gd".to_string(), 1)]));
    }

    #[test]
    fn write_errors_carry_the_path() {
        let run = solved_toy_run();
        let missing = Path::new("/nonexistent-dir-for-sure");
        match write_trace(missing, &run) {
            Err(Error::OutputIo { path, .. }) => {
                assert!(path.starts_with(missing));
            }
            other => panic!("expected an output error, got {other:?}"),
        }
    }
}
