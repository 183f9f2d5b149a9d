//! Post-hoc metrics over recorded trajectories.
//!
//! "Reached in finite time" is measured as permanent membership of the
//! band over the rest of the recorded horizon: `t_conv` is the earliest
//! sample after which every sample satisfies `|s| <= sigma`.

use thiserror::Error;

use crate::gains::{GainError, GainLaw};
use crate::simkernel::{Sample, Trajectory};

/// Absolute slack added to predicted band radii to absorb the per-step
/// motion of the sampled loop.
pub const DISCRETIZATION_SLACK: f64 = 5e-4;

/// Time excluded after `t_conv` before gains are checked for overestimation.
pub const SETTLE_PAD: f64 = 1.0;

pub const DEFAULT_OVERESTIMATION_MARGIN: f64 = 0.05;

/// Relative tolerance of the equal-accuracy premise of a convergence comparison.
pub const PREMISE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("band radius must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("window [{t0}, {t1}] is empty or outside the trajectory")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("trajectory never settles in its band")]
    NotConverged,
    #[error("saturation level k_max = {k_max} must exceed the disturbance bound d_bar = {d_bar}")]
    AssumptionViolated { k_max: f64, d_bar: f64 },
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),
    #[error(transparent)]
    Gain(#[from] GainError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Escape {
    pub t_exit: f64,
    pub t_reentry: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub t_conv: Option<f64>,
    pub sigma_target: f64,
    /// Max `|s|` after `t_conv`; without convergence, max `|s|` after the
    /// first entry into the band (or over the whole run if it never entered).
    pub sigma_measured: f64,
    /// Escapes after first entry. Empty whenever `t_conv` is present.
    pub escapes: Vec<Escape>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.t_conv.is_some()
    }
}

fn check_sigma(sigma: f64) -> Result<(), AnalysisError> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidSigma(sigma))
    }
}

fn max_abs_s(samples: &[Sample]) -> f64 {
    samples.iter().map(|x| x.s.abs()).fold(0.0, f64::max)
}

pub fn convergence_time(traj: &Trajectory, sigma: f64) -> Result<ConvergenceReport, AnalysisError> {
    check_sigma(sigma)?;
    let samples = &traj.samples;
    let start = match samples.iter().rposition(|x| x.s.abs() > sigma) {
        None => Some(0),
        Some(last_out) if last_out + 1 < samples.len() => Some(last_out + 1),
        Some(_) => None,
    };
    let report = match start {
        Some(i) => ConvergenceReport {
            t_conv: Some(samples[i].t),
            sigma_target: sigma,
            sigma_measured: max_abs_s(&samples[i..]),
            escapes: Vec::new(),
        },
        None => {
            let first_in = samples.iter().position(|x| x.s.abs() <= sigma).unwrap_or(0);
            ConvergenceReport {
                t_conv: None,
                sigma_target: sigma,
                sigma_measured: max_abs_s(&samples[first_in..]),
                escapes: escape_intervals(traj, sigma)?,
            }
        }
    };
    Ok(report)
}

/// Every excursion out of `|s| <= sigma` after the first entry, whether or
/// not the trajectory settles afterwards.
pub fn escape_intervals(traj: &Trajectory, sigma: f64) -> Result<Vec<Escape>, AnalysisError> {
    check_sigma(sigma)?;
    let mut escapes = Vec::new();
    let Some(first_in) = traj.samples.iter().position(|x| x.s.abs() <= sigma) else {
        return Ok(escapes);
    };
    let mut open: Option<f64> = None;
    for x in &traj.samples[first_in..] {
        let outside = x.s.abs() > sigma;
        match (open, outside) {
            (None, true) => open = Some(x.t),
            (Some(t_exit), false) => {
                escapes.push(Escape {
                    t_exit,
                    t_reentry: Some(x.t),
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(t_exit) = open {
        escapes.push(Escape {
            t_exit,
            t_reentry: None,
        });
    }
    Ok(escapes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChatteringReport {
    pub total_variation: f64,
    pub window: (f64, f64),
}

/// Final 20% of the recorded horizon.
pub fn default_chattering_window(traj: &Trajectory) -> (f64, f64) {
    let t_end = traj.t_end();
    (0.8 * t_end, t_end)
}

fn window_slice(traj: &Trajectory, t0: f64, t1: f64) -> Result<&[Sample], AnalysisError> {
    let tol = 1e-9 * traj.h();
    let empty = AnalysisError::EmptyWindow { t0, t1 };
    if !(t0.is_finite() && t1.is_finite()) || t0 < -tol || t0 >= t1 || t1 > traj.t_end() + tol {
        return Err(empty);
    }
    let lo = traj.samples.partition_point(|x| x.t < t0 - tol);
    let hi = traj.samples.partition_point(|x| x.t <= t1 + tol);
    if lo >= hi {
        return Err(empty);
    }
    Ok(&traj.samples[lo..hi])
}

/// Sum of `|u_applied(k+1) - u_applied(k)|` over consecutive samples inside
/// `[t0, t1]`.
pub fn total_variation(traj: &Trajectory, window: (f64, f64)) -> Result<ChatteringReport, AnalysisError> {
    let (t0, t1) = window;
    let samples = window_slice(traj, t0, t1)?;
    let total_variation = samples
        .windows(2)
        .map(|w| (w[1].u_applied - w[0].u_applied).abs())
        .sum();
    Ok(ChatteringReport {
        total_variation,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverestimationReport {
    pub passed: bool,
    /// Largest gain sample in the checked window.
    pub worst: Option<Sample>,
}

/// Passes iff every gain sample from `t_conv + SETTLE_PAD` on stays at or
/// below `d_bar + margin`.
pub fn overestimation_check(
    traj: &Trajectory,
    conv: &ConvergenceReport,
    d_bar: f64,
    margin: f64,
) -> Result<OverestimationReport, AnalysisError> {
    let t_conv = conv.t_conv.ok_or(AnalysisError::NotConverged)?;
    let from = t_conv + SETTLE_PAD;
    let worst = traj
        .samples
        .iter()
        .filter(|x| x.t >= from)
        .copied()
        .max_by(|a, b| a.gain.total_cmp(&b.gain));
    Ok(OverestimationReport {
        passed: worst.is_none_or(|w| w.gain <= d_bar + margin),
        worst,
    })
}

/// Two-stage reaching-time bound of the saturated controller: a stage at
/// full gain `k_max` down to `kappa(k_max)`, then a stage at the unsaturated
/// gain ending at `kappa(d_bar)`. The gain of the second stage is taken at
/// the midpoint of its interval.
pub fn sat_time_bound(s0: f64, law: &GainLaw, k_max: f64, d_bar: f64) -> Result<f64, AnalysisError> {
    if k_max.partial_cmp(&d_bar) != Some(std::cmp::Ordering::Greater) {
        return Err(AnalysisError::AssumptionViolated { k_max, d_bar });
    }
    let sigma_1 = law.inverse(d_bar)?;
    let sigma_s = law.inverse(k_max)?;
    let start = s0.abs();
    if start <= sigma_1 {
        return Ok(0.0);
    }
    let (t_a, upper) = if start > sigma_s {
        ((start - sigma_s) / (k_max - d_bar), sigma_s)
    } else {
        (0.0, start)
    };
    let s_star = sigma_1 + (upper - sigma_1) / 2.0;
    let t_b = (upper - sigma_1) / (law.eval(s_star)? - d_bar);
    Ok(t_a + t_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceOrdering {
    FirstFaster,
    SecondFaster,
    Tie,
}

/// Common band radius `sigma_c` of two laws, provided their ultimate bounds
/// at `d_bar` agree and the laws themselves agree at `sigma_c`, both within
/// [`PREMISE_TOLERANCE`].
pub fn equal_accuracy_premise(a: &GainLaw, b: &GainLaw, d_bar: f64) -> Result<f64, AnalysisError> {
    let sa = a.inverse(d_bar)?;
    let sb = b.inverse(d_bar)?;
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    if rel(sa, sb) > PREMISE_TOLERANCE {
        return Err(AnalysisError::InvalidComparison(format!(
            "ultimate bounds differ: {sa} vs {sb}"
        )));
    }
    let sigma_c = 0.5 * (sa + sb);
    let (ka, kb) = (a.eval(sigma_c)?, b.eval(sigma_c)?);
    if rel(ka, kb) > PREMISE_TOLERANCE {
        return Err(AnalysisError::InvalidComparison(format!(
            "gains at sigma_c = {sigma_c} differ: {ka} vs {kb}"
        )));
    }
    Ok(sigma_c)
}

pub fn compare_convergence(
    first: &Trajectory,
    second: &Trajectory,
    sigma: f64,
) -> Result<ConvergenceOrdering, AnalysisError> {
    let (ma, mb) = (&first.meta, &second.meta);
    if ma.config.s0 != mb.config.s0 || ma.config.h != mb.config.h {
        return Err(AnalysisError::InvalidComparison(
            "runs differ in initial condition or step".into(),
        ));
    }
    if ma.disturbance != mb.disturbance {
        return Err(AnalysisError::InvalidComparison("runs differ in disturbance".into()));
    }
    let (Some(la), Some(lb)) = (ma.gain_law, mb.gain_law) else {
        return Err(AnalysisError::InvalidComparison(
            "both runs need a class-K-infinity gain law".into(),
        ));
    };
    equal_accuracy_premise(&la, &lb, ma.disturbance.d_bar())?;
    let ta = convergence_time(first, sigma)?.t_conv;
    let tb = convergence_time(second, sigma)?.t_conv;
    match (ta, tb) {
        (None, None) => Err(AnalysisError::NotConverged),
        (Some(_), None) => Ok(ConvergenceOrdering::FirstFaster),
        (None, Some(_)) => Ok(ConvergenceOrdering::SecondFaster),
        (Some(a), Some(b)) if a < b => Ok(ConvergenceOrdering::FirstFaster),
        (Some(a), Some(b)) if b < a => Ok(ConvergenceOrdering::SecondFaster),
        _ => Ok(ConvergenceOrdering::Tie),
    }
}
