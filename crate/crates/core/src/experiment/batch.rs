//! Batch execution: simulate every experiment, evaluate its declared
//! expectations, and write trajectory and summary CSVs.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use super::config::{BuiltExperiment, ControllerConfig, ExperimentSpec};
use super::csvio::{self, fmt_opt};
use crate::analysis::{
    convergence_time, default_chattering_window, escape_intervals, overestimation_check,
    sat_time_bound, total_variation,
};
use crate::simkernel::{simulate, SimError, Trajectory, TrajectoryMeta};

pub const SUMMARY_FILE: &str = "summary.csv";

pub const SUMMARY_HEADER: [&str; 11] = [
    "name",
    "status",
    "t_conv",
    "sigma_target",
    "sigma_measured",
    "max_gain_post",
    "total_variation",
    "sat_time_bound",
    "trajectory",
    "failures",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Pass,
    /// A declared expectation does not hold.
    Fail,
    /// An analysis request could not be evaluated.
    Error,
    Diverged,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Error => "error",
            Self::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub status: RowStatus,
    pub t_conv: Option<f64>,
    pub sigma_target: f64,
    pub sigma_measured: Option<f64>,
    pub max_gain_post: Option<f64>,
    pub total_variation: Option<f64>,
    pub sat_time_bound: Option<f64>,
    pub trajectory: String,
    /// Expectations that did not hold.
    pub failures: Vec<String>,
    /// Analysis or simulation failure, when there was one.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub rows: Vec<SummaryRow>,
}

impl BatchSummary {
    /// 0 when every row passes, 3 if any run diverged, otherwise 1.
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().any(|r| r.status == RowStatus::Diverged) {
            3
        } else if self.rows.iter().all(|r| r.status == RowStatus::Pass) {
            0
        } else {
            1
        }
    }

    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(io::Error::other)?;
        w.write_record(SUMMARY_HEADER).map_err(io::Error::other)?;
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                r.status.to_string(),
                fmt_opt(r.t_conv),
                csvio::fmt_f64(r.sigma_target),
                fmt_opt(r.sigma_measured),
                fmt_opt(r.max_gain_post),
                fmt_opt(r.total_variation),
                fmt_opt(r.sat_time_bound),
                r.trajectory.clone(),
                r.failures.join("; "),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(io::Error::other)?;
        }
        w.flush()
    }
}

/// Read back the experiment names and trajectory files listed in a summary.
pub fn read_summary_index(path: &Path) -> io::Result<Vec<(String, String)>> {
    let mut r = csv::Reader::from_path(path).map_err(io::Error::other)?;
    let header = r.headers().map_err(io::Error::other)?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}: missing `{name}` column", path.display()),
            )
        })
    };
    let (name_col, traj_col) = (col("name")?, col("trajectory")?);
    r.records()
        .map(|rec| {
            let rec = rec.map_err(io::Error::other)?;
            Ok((rec[name_col].to_string(), rec[traj_col].to_string()))
        })
        .collect()
}

/// Evaluate analyses and expectations of one finished run. Depends only on
/// the spec and the recorded samples.
pub fn evaluate(spec: &ExperimentSpec, built: &BuiltExperiment, traj: &Trajectory) -> SummaryRow {
    let mut row = SummaryRow {
        name: spec.name.clone(),
        status: RowStatus::Pass,
        t_conv: None,
        sigma_target: built.sigma,
        sigma_measured: None,
        max_gain_post: None,
        total_variation: None,
        sat_time_bound: None,
        trajectory: spec.trajectory_file(),
        failures: Vec::new(),
        error: None,
    };
    let mut errors = Vec::new();
    let d_bar = built.disturbance.d_bar();

    let conv = match convergence_time(traj, built.sigma) {
        Ok(c) => c,
        Err(e) => {
            row.status = RowStatus::Error;
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.t_conv = conv.t_conv;
    row.sigma_measured = Some(conv.sigma_measured);
    row.max_gain_post = conv.t_conv.map(|tc| {
        traj.samples
            .iter()
            .filter(|x| x.t >= tc)
            .map(|x| x.gain)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let window = spec
        .analysis
        .chattering_window
        .map(|[a, b]| (a, b))
        .unwrap_or_else(|| default_chattering_window(traj));
    match total_variation(traj, window) {
        Ok(r) => row.total_variation = Some(r.total_variation),
        Err(e) => errors.push(format!("total variation: {e}")),
    }
    if spec.analysis.sat_time_bound {
        if let (ControllerConfig::Saturated { k_max, .. }, Some(law)) = (&spec.controller, &built.law) {
            match sat_time_bound(built.sim.s0, law, *k_max, d_bar) {
                Ok(b) => row.sat_time_bound = Some(b),
                Err(e) => errors.push(format!("sat_time_bound: {e}")),
            }
        }
    }

    let expect = &spec.expect;
    let mut check = |ok: bool, what: String| {
        if !ok {
            row.failures.push(what);
        }
    };
    if let Some(want) = expect.converged {
        check(conv.converged() == want, format!("converged == {want}"));
    }
    if let Some(max) = expect.sigma_measured_max {
        check(
            conv.converged() && conv.sigma_measured <= max,
            format!("sigma_measured <= {max}"),
        );
    }
    if let Some(max) = expect.t_conv_max {
        check(conv.t_conv.is_some_and(|t| t <= max), format!("t_conv <= {max}"));
    }
    if let Some(want) = expect.no_overestimation {
        let passed = overestimation_check(traj, &conv, d_bar, spec.overestimation_margin())
            .map(|r| r.passed)
            .unwrap_or(false);
        check(passed == want, format!("no_overestimation == {want}"));
    }
    if let Some(want) = expect.ends_inside {
        let inside = traj.samples.last().is_some_and(|x| x.s.abs() <= built.sigma);
        check(inside == want, format!("ends_inside == {want}"));
    }
    let escapes = escape_intervals(traj, built.sigma).unwrap_or_default();
    if let Some(want) = expect.escapes_return {
        let all = escapes.iter().all(|e| e.t_reentry.is_some());
        check(all == want, format!("escapes_return == {want}"));
    }
    if let Some(want) = expect.final_escape_unreturned {
        let open = escapes.last().is_some_and(|e| e.t_reentry.is_none());
        check(open == want, format!("final_escape_unreturned == {want}"));
    }
    if let Some(want) = expect.initial_control_zero {
        let zero = traj.samples.first().is_some_and(|x| x.u_commanded == 0.0);
        check(zero == want, format!("initial_control_zero == {want}"));
    }
    if let Some(slack) = expect.sat_bound_slack {
        let ok = matches!((conv.t_conv, row.sat_time_bound), (Some(t), Some(b)) if t <= b + slack);
        check(ok, format!("t_conv <= sat_time_bound + {slack}"));
    }
    if let Some(max) = expect.total_variation_max {
        check(
            row.total_variation.is_some_and(|tv| tv <= max),
            format!("total_variation <= {max}"),
        );
    }

    if !errors.is_empty() {
        row.status = RowStatus::Error;
        row.error = Some(errors.join("; "));
    } else if !row.failures.is_empty() {
        row.status = RowStatus::Fail;
    }
    row
}

/// Outcome of one experiment: its summary row and whatever trajectory was
/// recorded (partial for diverged runs).
pub struct ExperimentOutcome {
    pub row: SummaryRow,
    pub trajectory: Option<Trajectory>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> ExperimentOutcome {
    let built = match spec.build() {
        Ok(b) => b,
        Err(e) => {
            return ExperimentOutcome {
                row: error_row(spec, f64::NAN, RowStatus::Error, e.to_string()),
                trajectory: None,
            }
        }
    };
    let mut controller = built.controller;
    match simulate(&mut controller, &built.disturbance, &built.sim) {
        Ok(traj) => {
            let mut row = evaluate(spec, &built, &traj);
            if let Err(e) = traj.check_disturbance_bound() {
                row.status = RowStatus::Error;
                row.error = Some(e.to_string());
            }
            ExperimentOutcome {
                row,
                trajectory: Some(traj),
            }
        }
        Err(e) => {
            let status = match e {
                SimError::Diverged { .. } | SimError::Controller { .. } => RowStatus::Diverged,
                _ => RowStatus::Error,
            };
            let trajectory = e.partial().cloned();
            ExperimentOutcome {
                row: error_row(spec, built.sigma, status, e.to_string()),
                trajectory,
            }
        }
    }
}

fn error_row(spec: &ExperimentSpec, sigma: f64, status: RowStatus, error: String) -> SummaryRow {
    SummaryRow {
        name: spec.name.clone(),
        status,
        t_conv: None,
        sigma_target: sigma,
        sigma_measured: None,
        max_gain_post: None,
        total_variation: None,
        sat_time_bound: None,
        trajectory: spec.trajectory_file(),
        failures: Vec::new(),
        error: Some(error),
    }
}

/// Run every experiment (up to `jobs` at a time), write `<name>.csv` per
/// experiment and `summary.csv` into `out_dir`.
pub fn run_batch(specs: &[ExperimentSpec], out_dir: &Path, jobs: usize) -> io::Result<BatchSummary> {
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(io::Error::other)?;
    let rows = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let outcome = run_experiment(spec);
                if let Some(traj) = &outcome.trajectory {
                    csvio::write_trajectory(&out_dir.join(spec.trajectory_file()), &traj.samples)?;
                }
                Ok(outcome.row)
            })
            .collect::<io::Result<Vec<_>>>()
    })?;
    let summary = BatchSummary { rows };
    summary.write_csv(&out_dir.join(SUMMARY_FILE))?;
    Ok(summary)
}

/// Rebuild a trajectory from its CSV and the spec that produced it.
pub fn load_trajectory(built: &BuiltExperiment, path: &Path) -> io::Result<Trajectory> {
    use crate::controllers::SlidingController;
    let samples = csvio::read_trajectory(path)?;
    Ok(Trajectory::new(
        samples,
        TrajectoryMeta {
            config: built.sim,
            controller: built.controller.describe(),
            gain_law: built.law,
            disturbance: built.disturbance.clone(),
        },
    ))
}
