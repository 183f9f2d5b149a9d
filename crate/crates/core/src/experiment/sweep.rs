//! Grid search over the `(rho, lambda)` parameters of a gain law.

use std::cmp::Ordering;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{ConfigError, ExperimentSpec};
use crate::analysis::{convergence_time, DISCRETIZATION_SLACK};
use crate::gains::ultimate_bound;
use crate::simkernel::simulate;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub rho: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl SweepGrid {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rho
            .iter()
            .flat_map(move |&r| self.lambda.iter().map(move |&l| (r, l)))
    }
}

/// Parses `rho=1,5,25;lambda=0.05`.
impl FromStr for SweepGrid {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut rho = None;
        let mut lambda = None;
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| format!("expected `key=v1,v2,...`, got `{part}`"))?;
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            let slot = match key.trim() {
                "rho" => &mut rho,
                "lambda" => &mut lambda,
                other => return Err(format!("unknown grid key `{other}`")),
            };
            if slot.replace(values).is_some() {
                return Err(format!("grid key `{}` given twice", key.trim()));
            }
        }
        match (rho, lambda) {
            (Some(rho), Some(lambda)) if !rho.is_empty() && !lambda.is_empty() => {
                Ok(Self { rho, lambda })
            }
            _ => Err("grid needs non-empty `rho` and `lambda` lists".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub lambda: f64,
    pub bound: Option<f64>,
    pub peak_u: Option<f64>,
    pub t_conv: Option<f64>,
    pub feasible: bool,
    pub error: Option<String>,
}

/// Simulate `base` at every grid point. Feasible points (predicted bound
/// `<= target`, peak `|u| <= budget`) come first, fastest `t_conv` first;
/// the rest follow in grid order. `t_conv` is measured against the
/// predicted bound plus the discretization slack.
pub fn sweep(
    base: &ExperimentSpec,
    grid: &SweepGrid,
    target: f64,
    budget: f64,
) -> Result<Vec<SweepRow>, ConfigError> {
    if base.controller.law().is_none() {
        return Err(ConfigError::Invalid {
            experiment: base.name.clone(),
            reason: "sweep needs a controller with a class-K-infinity gain law".into(),
        });
    }
    let mut rows: Vec<SweepRow> = grid
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(rho, lambda)| evaluate_point(base, rho, lambda, target, budget))
        .collect();
    rows.sort_by(|a, b| match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => Ordering::Equal,
        (true, true) => match (a.t_conv, b.t_conv) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        },
    });
    Ok(rows)
}

fn evaluate_point(base: &ExperimentSpec, rho: f64, lambda: f64, target: f64, budget: f64) -> SweepRow {
    let mut row = SweepRow {
        rho,
        lambda,
        bound: None,
        peak_u: None,
        t_conv: None,
        feasible: false,
        error: None,
    };
    let mut spec = base.clone();
    if let Some(law) = spec.controller.law_mut() {
        *law = law.with_params(rho, lambda);
    }
    let result = (|| -> Result<(), String> {
        let built = spec.build().map_err(|e| e.to_string())?;
        let law = built.law.ok_or("no gain law")?;
        let bound = ultimate_bound(&law, built.disturbance.d_bar())
            .map_err(|e| e.to_string())?
            .sigma;
        row.bound = Some(bound);
        let mut controller = built.controller;
        let traj = simulate(&mut controller, &built.disturbance, &built.sim).map_err(|e| e.to_string())?;
        let peak = traj
            .samples
            .iter()
            .map(|x| x.u_applied.abs())
            .fold(0.0, f64::max);
        row.peak_u = Some(peak);
        row.t_conv = convergence_time(&traj, bound + DISCRETIZATION_SLACK)
            .map_err(|e| e.to_string())?
            .t_conv;
        row.feasible = bound <= target && peak <= budget;
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e);
    }
    row
}
