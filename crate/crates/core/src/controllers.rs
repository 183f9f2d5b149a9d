//! Control laws for the scalar plant `ds/dt = u + d`.
//!
//! Each [`Controller`] owns its adaptive state and is advanced once per
//! sample by the simulation kernel. Adaptive states are integrated with
//! explicit Euler at the sample step.

use std::f64::consts::PI;
use std::fmt::Debug;

use thiserror::Error;

use crate::gains::{saturate_gain, GainError, GainLaw, PsbParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error("{0} requires a class-K-infinity gain law")]
    NotClassKInfinity(&'static str),
    #[error("time-base-generator parameter `{name}` must be finite and positive, got {value}")]
    InvalidTbg { name: &'static str, value: f64 },
}

/// `sign(0) = 0`, so the control vanishes on the ideal surface.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Reaching,
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    /// Integrated reaching-phase gain of the two-phase controller.
    pub k_a: f64,
    pub phase: Phase,
    /// Auxiliary trajectory of the integral controller.
    pub z: f64,
    /// Sample at which the two-phase controller switched to its barrier.
    pub t_bar: Option<f64>,
}

impl ControllerState {
    pub fn initial(s0: f64) -> Self {
        Self {
            k_a: 0.0,
            phase: Phase::Reaching,
            z: s0,
            t_bar: None,
        }
    }
}

impl Default for ControllerState {
    fn default() -> Self {
        Self::initial(0.0)
    }
}

/// One sample of controller output: the commanded input and the gain
/// magnitude behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub u: f64,
    pub gain: f64,
}

/// Anything the simulation kernel can drive.
pub trait SlidingController {
    /// Reinitialize all internal state for a run starting at `s(0) = s0`.
    fn reset(&mut self, s0: f64);

    /// Compute the control at sample time `t` and advance internal state by `h`.
    fn control(&mut self, t: f64, s: f64, h: f64) -> Result<ControlOutput, ControlError>;

    fn describe(&self) -> String;

    /// The class-K∞ law behind the controller, when it has one.
    fn gain_law(&self) -> Option<GainLaw>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbgParams {
    t_f: f64,
    delta: f64,
}

impl TbgParams {
    pub fn new(t_f: f64, delta: f64) -> Result<Self, ControlError> {
        for (name, value) in [("t_f", t_f), ("delta", delta)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ControlError::InvalidTbg { name, value });
            }
        }
        Ok(Self { t_f, delta })
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Cosine ramp from 0 at `t = 0` to 1 at `t = t_f`, held at 1 afterwards.
pub fn tbg_zeta(t: f64, t_f: f64) -> f64 {
    if t <= t_f {
        (1.0 - (PI * t / t_f).cos()) / 2.0
    } else {
        1.0
    }
}

pub fn tbg_zeta_dot(t: f64, t_f: f64) -> f64 {
    if t <= t_f {
        // sin(pi) is ~1.2e-16, not 0; clamp so the rate stays nonnegative.
        (PI * (PI * t / t_f).sin() / (2.0 * t_f)).max(0.0)
    } else {
        0.0
    }
}

pub fn tbg_kg(t: f64, p: &TbgParams) -> f64 {
    tbg_zeta_dot(t, p.t_f) / (1.0 - tbg_zeta(t, p.t_f) + p.delta)
}

/// Exact solution of `dz/dt = -k_g(t) z` with `z(0) = s0`.
pub fn tbg_z_closed_form(t: f64, s0: f64, p: &TbgParams) -> f64 {
    s0 * (1.0 - tbg_zeta(t, p.t_f) + p.delta) / (1.0 + p.delta)
}

/// Auxiliary dynamics `dz/dt = -phi(t, z)` for the integral controller.
///
/// Implementations should keep `phi` bounded and satisfy `z * phi(t, z) >= 0`.
pub trait AuxiliaryDynamics: Debug {
    fn phi(&self, t: f64, z: f64) -> f64;

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBaseGenerator(pub TbgParams);

impl AuxiliaryDynamics for TimeBaseGenerator {
    fn phi(&self, t: f64, z: f64) -> f64 {
        tbg_kg(t, &self.0) * z
    }

    fn describe(&self) -> String {
        format!("tbg(t_f={}, delta={})", self.0.t_f, self.0.delta)
    }
}

/// One step of `u = -phi(t, z) - K(|e|) sign(e)` with `e = s - z`, advancing
/// `z` by Euler.
fn integral_step<A: AuxiliaryDynamics + ?Sized>(
    aux: &A,
    law: &GainLaw,
    z: &mut f64,
    t: f64,
    s: f64,
    h: f64,
) -> Result<ControlOutput, ControlError> {
    let phi = aux.phi(t, *z);
    let e_s = s - *z;
    let gain = law.eval(e_s.abs())?;
    *z -= h * phi;
    Ok(ControlOutput {
        u: -phi - gain * sign(e_s),
        gain,
    })
}

/// Integral sliding mode controller over arbitrary auxiliary dynamics.
#[derive(Debug, Clone)]
pub struct IntegralController<A> {
    law: GainLaw,
    aux: A,
    z: f64,
}

impl<A: AuxiliaryDynamics> IntegralController<A> {
    pub fn new(law: GainLaw, aux: A) -> Result<Self, ControlError> {
        if !law.is_class_k_infinity() {
            return Err(ControlError::NotClassKInfinity("integral controller"));
        }
        Ok(Self { law, aux, z: 0.0 })
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

impl<A: AuxiliaryDynamics> SlidingController for IntegralController<A> {
    fn reset(&mut self, s0: f64) {
        self.z = s0;
    }

    fn control(&mut self, t: f64, s: f64, h: f64) -> Result<ControlOutput, ControlError> {
        integral_step(&self.aux, &self.law, &mut self.z, t, s, h)
    }

    fn describe(&self) -> String {
        format!("integral({}, {})", self.law.name(), self.aux.describe())
    }

    fn gain_law(&self) -> Option<GainLaw> {
        Some(self.law)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw {
    /// `u = -K(|s|) sign(s)`.
    KInfty(GainLaw),
    /// `u = -sat(K(|s|), k_max) sign(s)`.
    SaturatedKInfty { law: GainLaw, k_max: f64 },
    /// Reaching phase with `dK_a/dt = k_bar |s|`, then the legacy barrier once
    /// `|s| <= epsilon / 2` has been sampled.
    ObeidTwoPhase(PsbParams),
    /// Integral controller driven by the cosine time-base generator.
    TbgIntegral { law: GainLaw, tbg: TbgParams },
    /// Constant relay `u = -k sign(s)`.
    FixedSign { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controller {
    law: ControlLaw,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(law: ControlLaw) -> Result<Self, ControlError> {
        match law {
            ControlLaw::KInfty(g) if !g.is_class_k_infinity() => {
                return Err(ControlError::NotClassKInfinity("k_infty controller"))
            }
            ControlLaw::SaturatedKInfty { law: g, k_max } => {
                if !g.is_class_k_infinity() {
                    return Err(ControlError::NotClassKInfinity("saturated controller"));
                }
                if !(k_max.is_finite() && k_max > 0.0) {
                    return Err(GainError::InvalidParameter {
                        name: "k_max",
                        value: k_max,
                    }
                    .into());
                }
            }
            ControlLaw::TbgIntegral { law: g, .. } if !g.is_class_k_infinity() => {
                return Err(ControlError::NotClassKInfinity("integral controller"))
            }
            ControlLaw::FixedSign { k } if !(k.is_finite() && k >= 0.0) => {
                return Err(GainError::InvalidParameter { name: "k", value: k }.into())
            }
            _ => {}
        }
        Ok(Self {
            law,
            state: ControllerState::default(),
        })
    }

    pub fn k_infty(law: GainLaw) -> Result<Self, ControlError> {
        Self::new(ControlLaw::KInfty(law))
    }

    pub fn saturated(law: GainLaw, k_max: f64) -> Result<Self, ControlError> {
        Self::new(ControlLaw::SaturatedKInfty { law, k_max })
    }

    pub fn obeid(params: PsbParams) -> Self {
        Self {
            law: ControlLaw::ObeidTwoPhase(params),
            state: ControllerState::default(),
        }
    }

    pub fn tbg_integral(law: GainLaw, tbg: TbgParams) -> Result<Self, ControlError> {
        Self::new(ControlLaw::TbgIntegral { law, tbg })
    }

    /// Relay baseline; `k = 0` is allowed and gives an open loop.
    pub fn fixed_sign(k: f64) -> Result<Self, ControlError> {
        Self::new(ControlLaw::FixedSign { k })
    }

    pub fn law(&self) -> &ControlLaw {
        &self.law
    }
}

impl SlidingController for Controller {
    fn reset(&mut self, s0: f64) {
        self.state = ControllerState::initial(s0);
    }

    fn control(&mut self, t: f64, s: f64, h: f64) -> Result<ControlOutput, ControlError> {
        debug_assert!(h > 0.0);
        let abs_s = s.abs();
        match &self.law {
            ControlLaw::KInfty(law) => {
                let gain = law.eval(abs_s)?;
                Ok(ControlOutput {
                    u: -gain * sign(s),
                    gain,
                })
            }
            ControlLaw::SaturatedKInfty { law, k_max } => {
                let gain = saturate_gain(law.eval(abs_s)?, *k_max);
                Ok(ControlOutput {
                    u: -gain * sign(s),
                    gain,
                })
            }
            ControlLaw::ObeidTwoPhase(p) => {
                let state = &mut self.state;
                if state.phase == Phase::Reaching && abs_s <= p.epsilon() / 2.0 {
                    state.phase = Phase::Barrier;
                    state.t_bar = Some(t);
                }
                let gain = match state.phase {
                    Phase::Reaching => {
                        let k = state.k_a;
                        state.k_a += h * p.k_bar() * abs_s;
                        k
                    }
                    Phase::Barrier => crate::gains::eval_psb(p, abs_s)?,
                };
                Ok(ControlOutput {
                    u: -gain * sign(s),
                    gain,
                })
            }
            ControlLaw::TbgIntegral { law, tbg } => integral_step(
                &TimeBaseGenerator(*tbg),
                law,
                &mut self.state.z,
                t,
                s,
                h,
            ),
            ControlLaw::FixedSign { k } => Ok(ControlOutput {
                u: -k * sign(s),
                gain: *k,
            }),
        }
    }

    fn describe(&self) -> String {
        match &self.law {
            ControlLaw::KInfty(g) => format!("k_infty({})", g.name()),
            ControlLaw::SaturatedKInfty { law, k_max } => {
                format!("saturated({}, k_max={k_max})", law.name())
            }
            ControlLaw::ObeidTwoPhase(p) => {
                format!("obeid(epsilon={}, k_bar={})", p.epsilon(), p.k_bar())
            }
            ControlLaw::TbgIntegral { law, tbg } => format!(
                "tbg_integral({}, t_f={}, delta={})",
                law.name(),
                tbg.t_f(),
                tbg.delta()
            ),
            ControlLaw::FixedSign { k } => format!("fixed_sign(k={k})"),
        }
    }

    fn gain_law(&self) -> Option<GainLaw> {
        match &self.law {
            ControlLaw::KInfty(law)
            | ControlLaw::SaturatedKInfty { law, .. }
            | ControlLaw::TbgIntegral { law, .. } => Some(*law),
            ControlLaw::ObeidTwoPhase(_) | ControlLaw::FixedSign { .. } => None,
        }
    }
}
