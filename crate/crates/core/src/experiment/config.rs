//! Experiment files.
//!
//! An experiment file is TOML with one `[[experiment]]` table per run.
//! Every table is strict: unknown keys are rejected so that a typo fails
//! the load instead of silently running a different controller.
//!
//! ```toml
//! [[experiment]]
//! name = "cv"
//!
//! [experiment.controller]
//! type = "k_infty"            # k_infty | saturated | obeid | tbg_integral | fixed_sign
//! law = { type = "convex", rho = 5.0, lambda = 0.05 }
//!
//! [experiment.disturbance]
//! type = "switched_harmonic"      # sinusoid | switched_harmonic | sin_two | table
//! d_bar = 0.2
//!
//! [experiment.sim]
//! s0 = 1.0
//! h = 1e-3
//! t_end = 10.0
//! # u_max = 1.9
//!
//! [experiment.analysis]       # optional
//! sigma = 3.52e-3             # defaults to the predicted bound + 5e-4
//! chattering_window = [8.0, 10.0]
//! overestimation_margin = 0.05
//! sat_time_bound = false
//!
//! [experiment.expect]         # optional, every key optional
//! converged = true
//! sigma_measured_max = 3.52e-3
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{DEFAULT_OVERESTIMATION_MARGIN, DISCRETIZATION_SLACK};
use crate::controllers::{Controller, TbgParams};
use crate::gains::{ultimate_bound, GainLaw, PsbParams};
use crate::simkernel::{DisturbanceSignal, DisturbanceSpec, SampleTable, SimConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: no experiments defined")]
    Empty { path: PathBuf },
    #[error("experiment `{experiment}`: {reason}")]
    Invalid { experiment: String, reason: String },
    #[error("cannot serialize experiments: {0}")]
    Serialize(String),
}

fn invalid(experiment: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        experiment: experiment.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Concave { rho: f64, lambda: f64 },
    Convex { rho: f64, lambda: f64 },
}

impl LawConfig {
    pub fn build(&self) -> Result<GainLaw, crate::gains::GainError> {
        match *self {
            Self::Concave { rho, lambda } => GainLaw::concave(rho, lambda),
            Self::Convex { rho, lambda } => GainLaw::convex(rho, lambda),
        }
    }

    pub fn with_params(&self, rho: f64, lambda: f64) -> Self {
        match self {
            Self::Concave { .. } => Self::Concave { rho, lambda },
            Self::Convex { .. } => Self::Convex { rho, lambda },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    KInfty { law: LawConfig },
    Saturated { law: LawConfig, k_max: f64 },
    Obeid { epsilon: f64, k_bar: f64 },
    TbgIntegral { law: LawConfig, t_f: f64, delta: f64 },
    FixedSign { k: f64 },
}

impl ControllerConfig {
    pub fn law(&self) -> Option<&LawConfig> {
        match self {
            Self::KInfty { law } | Self::Saturated { law, .. } | Self::TbgIntegral { law, .. } => {
                Some(law)
            }
            Self::Obeid { .. } | Self::FixedSign { .. } => None,
        }
    }

    pub fn law_mut(&mut self) -> Option<&mut LawConfig> {
        match self {
            Self::KInfty { law } | Self::Saturated { law, .. } | Self::TbgIntegral { law, .. } => {
                Some(law)
            }
            Self::Obeid { .. } | Self::FixedSign { .. } => None,
        }
    }

    fn build(&self, name: &str) -> Result<Controller, ConfigError> {
        let law = |l: &LawConfig| l.build().map_err(|e| invalid(name, e));
        let controller = match self {
            Self::KInfty { law: l } => Controller::k_infty(law(l)?),
            Self::Saturated { law: l, k_max } => Controller::saturated(law(l)?, *k_max),
            Self::Obeid { epsilon, k_bar } => Ok(Controller::obeid(
                PsbParams::new(*epsilon, *k_bar).map_err(|e| invalid(name, e))?,
            )),
            Self::TbgIntegral { law: l, t_f, delta } => {
                let tbg = TbgParams::new(*t_f, *delta).map_err(|e| invalid(name, e))?;
                Controller::tbg_integral(law(l)?, tbg)
            }
            Self::FixedSign { k } => Controller::fixed_sign(*k),
        };
        controller.map_err(|e| invalid(name, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceConfig {
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        d_bar: f64,
    },
    SwitchedHarmonic { d_bar: f64 },
    SinTwo { d_bar: f64 },
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
        d_bar: f64,
    },
}

impl DisturbanceConfig {
    pub fn d_bar(&self) -> f64 {
        match *self {
            Self::Sinusoid { d_bar, .. }
            | Self::SwitchedHarmonic { d_bar }
            | Self::SinTwo { d_bar }
            | Self::Table { d_bar, .. } => d_bar,
        }
    }

    fn build(&self, name: &str) -> Result<DisturbanceSpec, ConfigError> {
        let signal = match self {
            Self::Sinusoid {
                amplitude,
                omega,
                phase,
                ..
            } => DisturbanceSignal::Sinusoid {
                amplitude: *amplitude,
                omega: *omega,
                phase: *phase,
            },
            Self::SwitchedHarmonic { .. } => DisturbanceSignal::SwitchedHarmonic,
            Self::SinTwo { .. } => DisturbanceSignal::SinTwo,
            Self::Table { times, values, .. } => DisturbanceSignal::Custom(
                SampleTable::new(times.clone(), values.clone()).map_err(|e| invalid(name, e))?,
            ),
        };
        DisturbanceSpec::new(signal, self.d_bar()).map_err(|e| invalid(name, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub s0: f64,
    pub h: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chattering_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overestimation_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sat_time_bound: bool,
}

impl AnalysisSection {
    fn is_default(&self) -> bool {
        self == &Self::default()
    }
}

/// Declared outcomes. Pass/fail of a run is computed from these alone.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_measured_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_conv_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_overestimation: Option<bool>,
    /// The last sample lies inside the band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ends_inside: Option<bool>,
    /// Every escape from the band after first entry is followed by a reentry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escapes_return: Option<bool>,
    /// The run has at least one escape and the last one never returns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_escape_unreturned: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_control_zero: Option<bool>,
    /// `t_conv <= sat_time_bound + slack`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sat_bound_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_variation_max: Option<f64>,
}

impl Expectations {
    fn is_default(&self) -> bool {
        self == &Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Trajectory file name, relative to the output directory. Defaults to
    /// `<name>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub controller: ControllerConfig,
    pub disturbance: DisturbanceConfig,
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "AnalysisSection::is_default")]
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Expectations::is_default")]
    pub expect: Expectations,
}

/// The runtime objects an [`ExperimentSpec`] describes.
#[derive(Debug, Clone)]
pub struct BuiltExperiment {
    pub controller: Controller,
    pub disturbance: DisturbanceSpec,
    pub sim: SimConfig,
    pub sigma: f64,
    pub law: Option<GainLaw>,
}

impl ExperimentSpec {
    pub fn trajectory_file(&self) -> String {
        self.output.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }

    pub fn build(&self) -> Result<BuiltExperiment, ConfigError> {
        let name = self.name.as_str();
        if name.is_empty()
            || !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(invalid(name, "name must be non-empty and use only [A-Za-z0-9_-]"));
        }
        let controller = self.controller.build(name)?;
        let disturbance = self.disturbance.build(name)?;
        let s = self.sim;
        let sim = SimConfig::new(s.s0, s.h, s.t_end, s.u_max).map_err(|e| invalid(name, e))?;
        let law = self
            .controller
            .law()
            .map(|l| l.build())
            .transpose()
            .map_err(|e| invalid(name, e))?;
        let sigma = match (self.analysis.sigma, law) {
            (Some(sigma), _) => sigma,
            (None, Some(law)) => {
                ultimate_bound(&law, disturbance.d_bar())
                    .map_err(|e| invalid(name, e))?
                    .sigma
                    + DISCRETIZATION_SLACK
            }
            (None, None) => {
                return Err(invalid(
                    name,
                    "analysis.sigma is required for controllers without a class-K-infinity law",
                ))
            }
        };
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(name, format!("analysis.sigma must be positive, got {sigma}")));
        }
        if let Some([t0, t1]) = self.analysis.chattering_window {
            if !(0.0 <= t0 && t0 < t1 && t1 <= s.t_end) {
                return Err(invalid(
                    name,
                    format!("chattering window [{t0}, {t1}] must satisfy 0 <= t0 < t1 <= t_end"),
                ));
            }
        }
        if let Some(margin) = self.analysis.overestimation_margin {
            if !(margin.is_finite() && margin > 0.0) {
                return Err(invalid(name, "overestimation_margin must be positive"));
            }
        }
        let saturated = matches!(self.controller, ControllerConfig::Saturated { .. });
        if self.analysis.sat_time_bound && !saturated {
            return Err(invalid(name, "sat_time_bound applies only to saturated controllers"));
        }
        if self.expect.sat_bound_slack.is_some() && !self.analysis.sat_time_bound {
            return Err(invalid(name, "expect.sat_bound_slack needs analysis.sat_time_bound"));
        }
        Ok(BuiltExperiment {
            controller,
            disturbance,
            sim,
            sigma,
            law,
        })
    }

    pub fn overestimation_margin(&self) -> f64 {
        self.analysis
            .overestimation_margin
            .unwrap_or(DEFAULT_OVERESTIMATION_MARGIN)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    experiment: Vec<ExperimentSpec>,
}

/// Parse and validate experiment text; `origin` only labels diagnostics.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<ExperimentSpec>, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    if file.experiment.is_empty() {
        return Err(ConfigError::Empty {
            path: origin.to_path_buf(),
        });
    }
    let mut names = HashSet::new();
    let mut files = HashSet::new();
    for spec in &file.experiment {
        if !names.insert(spec.name.as_str()) {
            return Err(invalid(&spec.name, "name is not unique within the batch"));
        }
        if !files.insert(spec.trajectory_file()) {
            return Err(invalid(&spec.name, "output file collides with another experiment"));
        }
        spec.build()?;
    }
    Ok(file.experiment)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<ExperimentSpec>, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

pub fn write_config(specs: &[ExperimentSpec]) -> Result<String, ConfigError> {
    let file = ConfigFile {
        experiment: specs.to_vec(),
    };
    toml::to_string(&file).map_err(|e| ConfigError::Serialize(e.to_string()))
}
