//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use common::{arb_kinf_law, arb_specs, load_bundled, run_named};
use kinf_smc::analysis::{
    compare_convergence, convergence_time, equal_accuracy_premise, escape_intervals,
    overestimation_check, sat_time_bound, total_variation, ConvergenceOrdering,
};
use kinf_smc::controllers::{tbg_z_closed_form, Controller, SlidingController, TbgParams};
use kinf_smc::experiment::{parse_config, write_config};
use kinf_smc::gains::{ultimate_bound, GainLaw};
use kinf_smc::simkernel::{simulate, DisturbanceSpec, SimConfig};

const BAND_CFG: &str = "band_comparison.cfg";
const ESCAPE_CFG: &str = "saturation_escape.cfg";
const PREDICTED_SIGMA: f64 = 3.02e-3;
const SLACK: f64 = 5e-4;
const BAND: f64 = PREDICTED_SIGMA + SLACK;
const D_BAR: f64 = 0.2;
const BAND_RUNS: [&str; 4] = ["cc", "cv", "sat", "tbg"];
const PROPERTY_CASES: u32 = 1000;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1_ultimate_bounds() -> Check {
    let specs = load_bundled(BAND_CFG);
    let mut detail = Vec::new();
    for name in BAND_RUNS {
        let run = run_named(&specs, name);
        let r = convergence_time(&run.traj, BAND).map_err(|e| e.to_string())?;
        let t_conv = r.t_conv.ok_or_else(|| format!("{name}: never settles in |s| <= {BAND}"))?;
        ensure(r.sigma_measured <= BAND, || {
            format!("{name}: sigma_measured {} > {BAND}", r.sigma_measured)
        })?;
        detail.push(format!("{name}: t_conv={t_conv:.3} sigma={:.4e}", r.sigma_measured));
    }
    Ok(detail.join(", "))
}

fn ac2_closed_form_bounds() -> Check {
    let cc = ultimate_bound(&GainLaw::concave(1.0, 0.01366).unwrap(), D_BAR).unwrap().sigma;
    let cv = ultimate_bound(&GainLaw::convex(5.0, 0.05).unwrap(), D_BAR).unwrap().sigma;
    for (name, sigma) in [("concave", cc), ("convex", cv)] {
        ensure((sigma - PREDICTED_SIGMA).abs() <= 0.01 * PREDICTED_SIGMA, || {
            format!("{name} bound {sigma} not within 1% of {PREDICTED_SIGMA}")
        })?;
    }
    Ok(format!("sigma_cc={cc:.6e}, sigma_cv={cv:.6e}"))
}

fn ac3_convex_faster() -> Check {
    let specs = load_bundled(BAND_CFG);
    let cc = run_named(&specs, "cc");
    let cv = run_named(&specs, "cv");
    let sigma_c = equal_accuracy_premise(&cc.built.law.unwrap(), &cv.built.law.unwrap(), D_BAR)
        .map_err(|e| format!("premise: {e}"))?;
    let order = compare_convergence(&cv.traj, &cc.traj, BAND).map_err(|e| e.to_string())?;
    ensure(order == ConvergenceOrdering::FirstFaster, || {
        format!("expected convex faster, got {order:?}")
    })?;
    let t_cc = convergence_time(&cc.traj, BAND).unwrap().t_conv.unwrap();
    let t_cv = convergence_time(&cv.traj, BAND).unwrap().t_conv.unwrap();
    Ok(format!("sigma_c={sigma_c:.4e}, t_cv={t_cv:.3} < t_cc={t_cc:.3}"))
}

fn ac4_prescribed_time() -> Check {
    let specs = load_bundled(BAND_CFG);
    let run = run_named(&specs, "tbg");
    let delta = 1e-5;
    let band = PREDICTED_SIGMA + delta / (1.0 + delta) + SLACK;
    let worst = run
        .traj
        .samples
        .iter()
        .filter(|x| x.t >= 2.05)
        .map(|x| x.s.abs())
        .fold(0.0, f64::max);
    ensure(worst <= band, || format!("max |s| after 2.05 s is {worst} > {band}"))?;
    let u0 = run.traj.samples[0].u_commanded;
    ensure(u0.abs() == 0.0, || format!("initial control {u0} is not zero"))?;
    Ok(format!("max |s| (t>=2.05) = {worst:.4e} <= {band:.4e}, u(0) = 0"))
}

fn ac5_saturation_contrast() -> Check {
    let specs = load_bundled(ESCAPE_CFG);
    let obeid = run_named(&specs, "obeid");
    let r = convergence_time(&obeid.traj, 0.1).map_err(|e| e.to_string())?;
    ensure(r.t_conv.is_none(), || format!("obeid settles at {:?}", r.t_conv))?;
    let last = r.escapes.last().ok_or("obeid records no escape")?;
    ensure(last.t_reentry.is_none(), || "obeid's final escape returns".into())?;

    let kinf = run_named(&specs, "kinf");
    let end = kinf.traj.samples.last().unwrap().s.abs();
    ensure(end <= 0.1, || format!("concave run ends at |s| = {end}"))?;
    let escapes = escape_intervals(&kinf.traj, 0.1).unwrap();
    ensure(!escapes.is_empty(), || "concave run never escapes, contrast is vacuous".into())?;
    ensure(escapes.iter().all(|e| e.t_reentry.is_some()), || {
        "a concave-run escape lacks a reentry".into()
    })?;
    Ok(format!(
        "obeid: {} escape(s), last exit at {:.3} s unreturned, |s(20)|={:.2}; concave: {} escape(s) all returned, |s(20)|={end:.4}",
        r.escapes.len(),
        last.t_exit,
        obeid.traj.samples.last().unwrap().s.abs(),
        escapes.len()
    ))
}

fn ac6_no_overestimation() -> Check {
    let specs = load_bundled(BAND_CFG);
    let mut detail = Vec::new();
    for name in BAND_RUNS {
        let run = run_named(&specs, name);
        let conv = convergence_time(&run.traj, BAND).unwrap();
        let r = overestimation_check(&run.traj, &conv, D_BAR, 0.05).map_err(|e| format!("{name}: {e}"))?;
        let worst = r.worst.map_or(f64::NAN, |w| w.gain);
        ensure(r.passed, || format!("{name}: gain {worst} exceeds {}", D_BAR + 0.05))?;
        detail.push(format!("{name}: max gain {worst:.4}"));
    }
    Ok(detail.join(", "))
}

fn ac7_chattering() -> Check {
    let specs = load_bundled(BAND_CFG);
    let cv = run_named(&specs, "cv");
    let mut relay = Controller::fixed_sign(5.0).unwrap();
    let relay_traj = simulate(&mut relay, &cv.built.disturbance, &cv.built.sim).map_err(|e| e.to_string())?;
    let window = (8.0, 10.0);
    let tv_cv = total_variation(&cv.traj, window).unwrap().total_variation;
    let tv_relay = total_variation(&relay_traj, window).unwrap().total_variation;
    ensure(tv_cv < 0.05 * tv_relay, || {
        format!("TV convex {tv_cv} not below 5% of relay {tv_relay}")
    })?;
    Ok(format!("TV convex={tv_cv:.4}, relay={tv_relay:.1}, ratio={:.2e}", tv_cv / tv_relay))
}

fn ac8_saturated_bound() -> Check {
    let specs = load_bundled(BAND_CFG);
    let sat = run_named(&specs, "sat");
    let cv = run_named(&specs, "cv");
    let bound = sat_time_bound(1.0, &sat.built.law.unwrap(), 5.0, D_BAR).map_err(|e| e.to_string())?;
    let rs = convergence_time(&sat.traj, BAND).unwrap();
    let rc = convergence_time(&cv.traj, BAND).unwrap();
    let t_sat = rs.t_conv.ok_or("saturated run never settles")?;
    ensure(t_sat <= bound + 0.1, || format!("t_conv {t_sat} > bound {bound} + 0.1"))?;
    let gap = (rs.sigma_measured - rc.sigma_measured).abs();
    ensure(gap <= SLACK, || format!("sigma_measured differs by {gap}"))?;
    Ok(format!("t_conv={t_sat:.3} <= {bound:.4}+0.1, |dsigma|={gap:.2e}"))
}

fn ac9_tbg_auxiliary() -> Check {
    let p = TbgParams::new(2.0, 1e-5).unwrap();
    let h = 1e-3;
    let law = GainLaw::convex(5.0, 0.05).unwrap();
    let mut c = Controller::tbg_integral(law, p).unwrap();
    c.reset(1.0);
    let dist = DisturbanceSpec::new(kinf_smc::DisturbanceSignal::SwitchedHarmonic, D_BAR).unwrap();
    let cfg = SimConfig::new(1.0, h, 10.0, None).unwrap();
    let mut s = cfg.s0;
    let mut worst: f64 = 0.0;
    let mut z_at_tf = f64::NAN;
    for k in 0..=cfg.steps() {
        let t = cfg.time(k);
        let z = c.state.z;
        if k == 2000 {
            z_at_tf = z;
        }
        worst = worst.max((z - tbg_z_closed_form(t, 1.0, &p)).abs());
        let out = c.control(t, s, h).map_err(|e| e.to_string())?;
        s += h * (out.u + kinf_smc::simkernel::eval_disturbance(&dist, t).unwrap());
    }
    let target = 1e-5 / (1.0 + 1e-5);
    ensure((z_at_tf - target).abs() <= 1e-3, || format!("z(t_f) = {z_at_tf}"))?;
    ensure(worst <= 10.0 * h, || format!("max |z - z_exact| = {worst}"))?;
    Ok(format!("z(2)={z_at_tf:.3e} (target {target:.3e}), max |z - exact| = {worst:.2e}"))
}

fn property(name: &str, test: impl Fn(&mut TestRunner) -> Result<(), String>) -> Result<String, String> {
    let mut runner = TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    test(&mut runner).map_err(|e| format!("{name}: {e}"))?;
    Ok(name.to_string())
}

fn ac10_properties() -> Check {
    let mut passed = Vec::new();

    passed.push(property("inverse round-trip", |r| {
        r.run(&(arb_kinf_law(), -6.0f64..3.0), |(law, exp)| {
            let x = 10f64.powf(exp);
            let back = law.inverse(law.eval(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x), "{law:?}: {x} -> {back}");
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?);

    passed.push(property("strict monotonicity", |r| {
        r.run(&(arb_kinf_law(), 0.0f64..1e3, 1e-6f64..1.0), |(law, a, rel)| {
            let b = a * (1.0 + rel) + rel;
            let (ka, kb) = (law.eval(a).unwrap(), law.eval(b).unwrap());
            prop_assert!(ka < kb, "{law:?}: K({a})={ka} !< K({b})={kb}");
            prop_assert_eq!(law.eval(0.0).unwrap(), 0.0);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?);

    passed.push(property("second-difference curvature", |r| {
        r.run(&(arb_kinf_law(), 0.01f64..100.0), |(law, x)| {
            let h = x / 100.0;
            let k = |v: f64| law.eval(v).unwrap();
            let d2 = k(x - h) + k(x + h) - 2.0 * k(x);
            match law {
                GainLaw::Concave(_) => prop_assert!(d2 <= 0.0, "{law:?} at {x}: {d2}"),
                GainLaw::Convex(_) => prop_assert!(d2 >= 0.0, "{law:?} at {x}: {d2}"),
                _ => unreachable!(),
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?);

    passed.push(property("sign opposition", |r| {
        r.run(&(arb_kinf_law(), -1e3f64..1e3, 0.1f64..20.0), |(law, s, k_max)| {
            for mut c in [Controller::k_infty(law).unwrap(), Controller::saturated(law, k_max).unwrap()] {
                c.reset(s);
                let u = c.control(0.0, s, 1e-3).unwrap().u;
                prop_assert!(u * s <= 0.0, "{}: u={u}, s={s}", c.describe());
            }
            let mut c = Controller::saturated(law, k_max).unwrap();
            c.reset(s);
            prop_assert!(c.control(0.0, s, 1e-3).unwrap().u.abs() <= k_max);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?);

    passed.push(property("one-step plant bound", |r| {
        r.run(
            &(common::arb_controller_config(), common::arb_disturbance_config(), common::arb_sim()),
            |(controller, disturbance, sim)| {
                let spec = kinf_smc::experiment::ExperimentSpec {
                    name: "p".into(),
                    output: None,
                    controller,
                    disturbance,
                    sim,
                    analysis: kinf_smc::experiment::config::AnalysisSection {
                        sigma: Some(0.1),
                        ..Default::default()
                    },
                    expect: Default::default(),
                };
                let built = spec.build().unwrap();
                let mut c = built.controller;
                let traj = match simulate(&mut c, &built.disturbance, &built.sim) {
                    Ok(t) => t,
                    Err(e) => e.partial().cloned().ok_or_else(|| TestCaseError::fail(e.to_string()))?,
                };
                let d_bar = built.disturbance.d_bar();
                for w in traj.samples.windows(2) {
                    let step = (w[1].s - w[0].s).abs();
                    let bound = built.sim.h * (w[0].u_applied.abs() + d_bar);
                    prop_assert!(step <= bound * (1.0 + 1e-12) + 1e-15 * (1.0 + w[0].s.abs()),
                        "step {step} > {bound} at t={}", w[0].t);
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
    })?);

    passed.push(property("config round-trip", |r| {
        r.run(&arb_specs(), |specs| {
            let text = write_config(&specs).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let back = parse_config(&text, std::path::Path::new("roundtrip.cfg"))
                .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(back, specs);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?);

    Ok(format!("{} x {PROPERTY_CASES} cases: {}", passed.len(), passed.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1  ultimate bounds of the four runs", ac1_ultimate_bounds),
        ("AC2  closed-form bound agreement", ac2_closed_form_bounds),
        ("AC3  convex converges faster than concave", ac3_convex_faster),
        ("AC4  prescribed-time convergence", ac4_prescribed_time),
        ("AC5  saturation escape contrast", ac5_saturation_contrast),
        ("AC6  no gain overestimation", ac6_no_overestimation),
        ("AC7  chattering mitigation", ac7_chattering),
        ("AC8  saturated convergence-time bound", ac8_saturated_bound),
        ("AC9  time-base-generator fidelity", ac9_tbg_auxiliary),
        ("AC10 property suites", ac10_properties),
    ];
    let mut failed = 0;
    for (title, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {title} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {title} ({secs:.2}s): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
