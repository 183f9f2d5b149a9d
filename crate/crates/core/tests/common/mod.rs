#![allow(dead_code)]

use std::path::{Path, PathBuf};

use proptest::prelude::*;

use kinf_smc::experiment::config::{
    AnalysisSection, BuiltExperiment, ControllerConfig, DisturbanceConfig, Expectations,
    LawConfig, SimSection,
};
use kinf_smc::experiment::{load_config, ExperimentSpec};
use kinf_smc::{simulate, GainLaw, Trajectory};

pub fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn load_bundled(name: &str) -> Vec<ExperimentSpec> {
    load_config(config_path(name)).expect("bundled config loads")
}

pub struct Run {
    pub spec: ExperimentSpec,
    pub built: BuiltExperiment,
    pub traj: Trajectory,
}

pub fn run_spec(spec: &ExperimentSpec) -> Run {
    let built = spec.build().expect("valid spec");
    let mut controller = built.controller;
    let traj = simulate(&mut controller, &built.disturbance, &built.sim).expect("simulation runs");
    Run {
        spec: spec.clone(),
        built,
        traj,
    }
}

pub fn run_named(specs: &[ExperimentSpec], name: &str) -> Run {
    run_spec(specs.iter().find(|s| s.name == name).expect("experiment present"))
}

pub fn arb_law_config() -> impl Strategy<Value = LawConfig> {
    (any::<bool>(), 0.05f64..50.0, 1e-3f64..5.0).prop_map(|(concave, rho, lambda)| {
        if concave {
            LawConfig::Concave { rho, lambda }
        } else {
            LawConfig::Convex { rho, lambda }
        }
    })
}

pub fn arb_kinf_law() -> impl Strategy<Value = GainLaw> {
    arb_law_config().prop_map(|l| l.build().unwrap())
}

pub fn arb_controller_config() -> impl Strategy<Value = ControllerConfig> {
    prop_oneof![
        arb_law_config().prop_map(|law| ControllerConfig::KInfty { law }),
        (arb_law_config(), 0.1f64..20.0).prop_map(|(law, k_max)| ControllerConfig::Saturated { law, k_max }),
        (0.01f64..1.0, 0.1f64..10.0).prop_map(|(epsilon, k_bar)| ControllerConfig::Obeid { epsilon, k_bar }),
        (arb_law_config(), 0.1f64..5.0, 1e-8f64..1e-2)
            .prop_map(|(law, t_f, delta)| ControllerConfig::TbgIntegral { law, t_f, delta }),
        (0.0f64..10.0).prop_map(|k| ControllerConfig::FixedSign { k }),
    ]
}

pub fn arb_disturbance_config() -> impl Strategy<Value = DisturbanceConfig> {
    prop_oneof![
        (-2.0f64..2.0, 0.0f64..20.0, -3.2f64..3.2).prop_map(|(amplitude, omega, phase)| {
            DisturbanceConfig::Sinusoid {
                amplitude,
                omega,
                phase,
                d_bar: amplitude.abs().max(1e-3),
            }
        }),
        Just(DisturbanceConfig::SwitchedHarmonic { d_bar: 0.2 }),
        Just(DisturbanceConfig::SinTwo { d_bar: 2.0 }),
        prop::collection::vec(-1.0f64..1.0, 2..6).prop_map(|values| {
            let times = (0..values.len()).map(|i| i as f64 * 10.0).collect();
            let d_bar = values.iter().fold(1e-3f64, |m, v| m.max(v.abs()));
            DisturbanceConfig::Table { times, values, d_bar }
        }),
    ]
}

pub fn arb_sim() -> impl Strategy<Value = SimSection> {
    (-5.0f64..5.0, 1e-4f64..1e-2, 1usize..400, prop::option::of(0.1f64..10.0)).prop_map(
        |(s0, h, steps, u_max)| SimSection {
            s0,
            h,
            t_end: h * steps as f64,
            u_max,
        },
    )
}

fn arb_expectations() -> impl Strategy<Value = Expectations> {
    (
        prop::option::of(any::<bool>()),
        prop::option::of(1e-4f64..1.0),
        prop::option::of(0.0f64..10.0),
        prop::option::of(any::<bool>()),
        prop::option::of(any::<bool>()),
    )
        .prop_map(|(converged, sigma_measured_max, t_conv_max, ends_inside, escapes_return)| Expectations {
            converged,
            sigma_measured_max,
            t_conv_max,
            ends_inside,
            escapes_return,
            ..Expectations::default()
        })
}

pub fn arb_spec(index: usize) -> impl Strategy<Value = ExperimentSpec> {
    (
        arb_controller_config(),
        arb_disturbance_config(),
        arb_sim(),
        1e-4f64..1.0,
        prop::option::of(0.01f64..1.0),
        arb_expectations(),
        any::<bool>(),
    )
        .prop_map(move |(controller, disturbance, sim, sigma, margin, expect, custom_out)| ExperimentSpec {
            name: format!("exp_{index}"),
            output: custom_out.then(|| format!("run-{index}.csv")),
            controller,
            disturbance,
            sim,
            analysis: AnalysisSection {
                sigma: Some(sigma),
                chattering_window: None,
                overestimation_margin: margin,
                sat_time_bound: false,
            },
            expect,
        })
}

pub fn arb_specs() -> impl Strategy<Value = Vec<ExperimentSpec>> {
    (1usize..4).prop_flat_map(|n| (0..n).map(arb_spec).collect::<Vec<_>>())
}
