//! Fixed-step closed-loop simulation of `ds/dt = u + d`.

use thiserror::Error;

use crate::controllers::{ControlError, SlidingController};
use crate::gains::GainLaw;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation input: {0}")]
    Invalid(String),
    #[error("disturbance table queried at t = {t} outside its domain [{lo}, {hi}]")]
    Extrapolation { t: f64, lo: f64, hi: f64 },
    #[error("simulation diverged at t = {t}")]
    Diverged { t: f64, partial: Box<Trajectory> },
    #[error("controller failed at t = {t}: {source}")]
    Controller {
        t: f64,
        source: ControlError,
        partial: Box<Trajectory>,
    },
    #[error("|d({t})| = {value} exceeds declared bound {d_bar}")]
    DisturbanceBound { t: f64, value: f64, d_bar: f64 },
}

impl SimError {
    /// Samples recorded before the failure, when the run got that far.
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            Self::Diverged { partial, .. } | Self::Controller { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Piecewise-linear signal over strictly increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampleTable {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, SimError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(SimError::Invalid(
                "sample table needs equally many (>= 1) times and values".into(),
            ));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(SimError::Invalid("sample table entries must be finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::Invalid(
                "sample table times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Result<f64, SimError> {
        let (lo, hi) = (self.times[0], self.times[self.times.len() - 1]);
        if !(lo..=hi).contains(&t) {
            return Err(SimError::Extrapolation { t, lo, hi });
        }
        let i = self.times.partition_point(|&x| x <= t);
        if i == self.times.len() {
            return Ok(self.values[i - 1]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSignal {
    /// `amplitude * sin(omega * t + phase)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// `0.1 sin(3t)` for `t <= 5`, `0.2 cos(5t)` afterwards.
    SwitchedHarmonic,
    /// `2 sin(t)`.
    SinTwo,
    Custom(SampleTable),
}

/// A disturbance signal together with its declared bound `d_bar`. The bound
/// is analysis-side information and is never shown to controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    signal: DisturbanceSignal,
    d_bar: f64,
}

impl DisturbanceSpec {
    pub fn new(signal: DisturbanceSignal, d_bar: f64) -> Result<Self, SimError> {
        if !(d_bar.is_finite() && d_bar > 0.0) {
            return Err(SimError::Invalid(format!(
                "disturbance bound d_bar must be positive, got {d_bar}"
            )));
        }
        if let DisturbanceSignal::Sinusoid {
            amplitude,
            omega,
            phase,
        } = signal
        {
            if ![amplitude, omega, phase].iter().all(|x| x.is_finite()) {
                return Err(SimError::Invalid("sinusoid parameters must be finite".into()));
            }
        }
        Ok(Self { signal, d_bar })
    }

    pub fn signal(&self) -> &DisturbanceSignal {
        &self.signal
    }

    pub fn d_bar(&self) -> f64 {
        self.d_bar
    }

    pub fn describe(&self) -> String {
        match &self.signal {
            DisturbanceSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => format!("{amplitude}*sin({omega}t+{phase})"),
            DisturbanceSignal::SwitchedHarmonic => "piecewise(0.1sin3t|0.2cos5t)".into(),
            DisturbanceSignal::SinTwo => "2sin(t)".into(),
            DisturbanceSignal::Custom(table) => format!("table({} points)", table.times.len()),
        }
    }
}

pub fn eval_disturbance(spec: &DisturbanceSpec, t: f64) -> Result<f64, SimError> {
    match &spec.signal {
        DisturbanceSignal::Sinusoid {
            amplitude,
            omega,
            phase,
        } => Ok(amplitude * (omega * t + phase).sin()),
        DisturbanceSignal::SwitchedHarmonic => Ok(if t <= 5.0 {
            0.1 * (3.0 * t).sin()
        } else {
            0.2 * (5.0 * t).cos()
        }),
        DisturbanceSignal::SinTwo => Ok(2.0 * t.sin()),
        DisturbanceSignal::Custom(table) => table.eval(t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub s0: f64,
    pub h: f64,
    pub t_end: f64,
    pub u_max: Option<f64>,
}

impl SimConfig {
    pub fn new(s0: f64, h: f64, t_end: f64, u_max: Option<f64>) -> Result<Self, SimError> {
        let cfg = Self { s0, h, t_end, u_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.s0.is_finite() {
            return Err(SimError::Invalid(format!("s0 must be finite, got {}", self.s0)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(SimError::Invalid(format!("step h must be positive, got {}", self.h)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.h) {
            return Err(SimError::Invalid(format!(
                "horizon t_end = {} must be at least one step h = {}",
                self.t_end, self.h
            )));
        }
        if let Some(u_max) = self.u_max {
            if !(u_max.is_finite() && u_max > 0.0) {
                return Err(SimError::Invalid(format!("u_max must be positive, got {u_max}")));
            }
        }
        Ok(())
    }

    /// Number of integration steps, `floor(t_end / h)`, tolerant of the
    /// representation error in quotients like `10 / 0.001`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.h;
        (ratio + ratio.abs() * 1e-12).floor() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub s: f64,
    pub u_commanded: f64,
    pub u_applied: f64,
    pub gain: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub config: SimConfig,
    pub controller: String,
    pub gain_law: Option<GainLaw>,
    pub disturbance: DisturbanceSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>, meta: TrajectoryMeta) -> Self {
        Self { samples, meta }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn h(&self) -> f64 {
        self.meta.config.h
    }

    /// A-posteriori check of `|d(t)| <= d_bar` over the recorded samples.
    pub fn check_disturbance_bound(&self) -> Result<(), SimError> {
        let d_bar = self.meta.disturbance.d_bar();
        match self.samples.iter().find(|s| s.d.abs() > d_bar) {
            Some(s) => Err(SimError::DisturbanceBound {
                t: s.t,
                value: s.d.abs(),
                d_bar,
            }),
            None => Ok(()),
        }
    }
}

/// Explicit-Euler closed loop: at each sample `u_k` is computed from `s_k`,
/// clamped to `u_max` when set, and `s_{k+1} = s_k + h (u_k + d(t_k))`.
///
/// The controller is reset to `s0` first, so replaying the same arguments
/// produces bit-identical trajectories.
pub fn simulate<C: SlidingController + ?Sized>(
    controller: &mut C,
    disturbance: &DisturbanceSpec,
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let steps = cfg.steps();
    let meta = TrajectoryMeta {
        config: *cfg,
        controller: controller.describe(),
        gain_law: controller.gain_law(),
        disturbance: disturbance.clone(),
    };
    let mut samples = Vec::with_capacity(steps + 1);
    controller.reset(cfg.s0);
    let mut s = cfg.s0;
    for k in 0..=steps {
        let t = cfg.time(k);
        let d = eval_disturbance(disturbance, t)?;
        let out = match controller.control(t, s, cfg.h) {
            Ok(out) => out,
            Err(source) => {
                return Err(SimError::Controller {
                    t,
                    source,
                    partial: Box::new(Trajectory::new(samples, meta)),
                })
            }
        };
        let u_applied = match cfg.u_max {
            Some(u_max) => out.u.clamp(-u_max, u_max),
            None => out.u,
        };
        if !u_applied.is_finite() {
            return Err(SimError::Diverged {
                t,
                partial: Box::new(Trajectory::new(samples, meta)),
            });
        }
        samples.push(Sample {
            t,
            s,
            u_commanded: out.u,
            u_applied,
            gain: out.gain,
            d,
        });
        if k < steps {
            s += cfg.h * (u_applied + d);
            if !s.is_finite() {
                return Err(SimError::Diverged {
                    t: cfg.time(k + 1),
                    partial: Box::new(Trajectory::new(samples, meta)),
                });
            }
        }
    }
    Ok(Trajectory::new(samples, meta))
}
