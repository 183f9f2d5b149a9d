//! Gain laws: the class-K∞ concave and convex barrier gains, the legacy
//! positive semi-definite barrier, and a fixed relay gain.
//!
//! Every function here is pure. Parameters are validated once, when the
//! parameter records are built, so evaluation itself never branches on
//! parameter validity.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

/// Largest exponent accepted by [`inv_concave`] before `exp` leaves the
/// double-precision range.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GainError {
    #[error("gain parameter `{name}` must be finite and positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("inverse argument k/rho = {ratio} exceeds the exponent limit {MAX_EXPONENT}")]
    OutOfRange { ratio: f64 },
    #[error("barrier pole reached: |s| = {abs_s} equals epsilon = {epsilon}")]
    Pole { abs_s: f64, epsilon: f64 },
    #[error("the {0} gain law has no class-K-infinity inverse")]
    UnsupportedVariant(&'static str),
}

fn positive(name: &'static str, value: f64) -> Result<f64, GainError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(GainError::InvalidParameter { name, value })
    }
}

/// Parameters of `rho * ln(|s| / lambda + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcaveParams {
    rho: f64,
    lambda: f64,
}

impl ConcaveParams {
    pub fn new(rho: f64, lambda: f64) -> Result<Self, GainError> {
        Ok(Self {
            rho: positive("rho", rho)?,
            lambda: positive("lambda", lambda)?,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Parameters of `rho * atan(|s| / lambda) / (pi/2 - atan(|s| / lambda))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexParams {
    rho: f64,
    lambda: f64,
}

impl ConvexParams {
    pub fn new(rho: f64, lambda: f64) -> Result<Self, GainError> {
        Ok(Self {
            rho: positive("rho", rho)?,
            lambda: positive("lambda", lambda)?,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Legacy two-phase barrier: half-width `epsilon` of the barrier and the
/// reaching-phase adaptation rate `k_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsbParams {
    epsilon: f64,
    k_bar: f64,
}

impl PsbParams {
    pub fn new(epsilon: f64, k_bar: f64) -> Result<Self, GainError> {
        Ok(Self {
            epsilon: positive("epsilon", epsilon)?,
            k_bar: positive("k_bar", k_bar)?,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }
}

/// Constant relay gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedParams {
    k: f64,
}

impl FixedParams {
    pub fn new(k: f64) -> Result<Self, GainError> {
        Ok(Self { k: positive("k", k)? })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainLaw {
    Concave(ConcaveParams),
    Convex(ConvexParams),
    PsbLegacy(PsbParams),
    FixedGain(FixedParams),
}

impl GainLaw {
    pub fn concave(rho: f64, lambda: f64) -> Result<Self, GainError> {
        ConcaveParams::new(rho, lambda).map(Self::Concave)
    }

    pub fn convex(rho: f64, lambda: f64) -> Result<Self, GainError> {
        ConvexParams::new(rho, lambda).map(Self::Convex)
    }

    pub fn psb(epsilon: f64, k_bar: f64) -> Result<Self, GainError> {
        PsbParams::new(epsilon, k_bar).map(Self::PsbLegacy)
    }

    pub fn fixed(k: f64) -> Result<Self, GainError> {
        FixedParams::new(k).map(Self::FixedGain)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Concave(_) => "concave",
            Self::Convex(_) => "convex",
            Self::PsbLegacy(_) => "psb",
            Self::FixedGain(_) => "fixed",
        }
    }

    /// True for the laws that are class K∞ (zero at zero, strictly
    /// increasing, radially unbounded, invertible on `[0, inf)`).
    pub fn is_class_k_infinity(&self) -> bool {
        matches!(self, Self::Concave(_) | Self::Convex(_))
    }

    /// Gain at `|s| = abs_s`. Only the legacy barrier can fail (at its pole).
    pub fn eval(&self, abs_s: f64) -> Result<f64, GainError> {
        match self {
            Self::Concave(p) => Ok(eval_concave(p, abs_s)),
            Self::Convex(p) => Ok(eval_convex(p, abs_s)),
            Self::PsbLegacy(p) => eval_psb(p, abs_s),
            Self::FixedGain(p) => Ok(p.k),
        }
    }

    /// Inverse `kappa(k)` of a class-K∞ law.
    pub fn inverse(&self, k: f64) -> Result<f64, GainError> {
        match self {
            Self::Concave(p) => inv_concave(p, k),
            Self::Convex(p) => Ok(inv_convex(p, k)),
            other => Err(GainError::UnsupportedVariant(other.name())),
        }
    }
}

pub fn eval_concave(p: &ConcaveParams, abs_s: f64) -> f64 {
    debug_assert!(abs_s >= 0.0);
    p.rho * (abs_s / p.lambda).ln_1p()
}

pub fn eval_convex(p: &ConvexParams, abs_s: f64) -> f64 {
    debug_assert!(abs_s >= 0.0);
    let angle = (abs_s / p.lambda).atan();
    p.rho * angle / (FRAC_PI_2 - angle)
}

pub fn inv_concave(p: &ConcaveParams, k: f64) -> Result<f64, GainError> {
    debug_assert!(k >= 0.0);
    let ratio = k / p.rho;
    if ratio.abs() > MAX_EXPONENT {
        return Err(GainError::OutOfRange { ratio });
    }
    Ok(p.lambda * ratio.exp_m1())
}

pub fn inv_convex(p: &ConvexParams, k: f64) -> f64 {
    debug_assert!(k >= 0.0);
    p.lambda * (FRAC_PI_2 * k / (k + p.rho)).tan()
}

/// `|s| / (epsilon - |s|)`, evaluated literally: past the pole the value is
/// negative, which is exactly how the legacy controller loses stability.
pub fn eval_psb(p: &PsbParams, abs_s: f64) -> Result<f64, GainError> {
    debug_assert!(abs_s >= 0.0);
    let gap = p.epsilon - abs_s;
    if gap == 0.0 {
        return Err(GainError::Pole {
            abs_s,
            epsilon: p.epsilon,
        });
    }
    Ok(abs_s / gap)
}

pub fn saturate_gain(k: f64, k_max: f64) -> f64 {
    if k >= k_max {
        k_max
    } else {
        k
    }
}

/// Radius of the real sliding band a class-K∞ law guarantees against a
/// disturbance bounded by `d_bar`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UltimateBound {
    pub sigma: f64,
}

pub fn ultimate_bound(law: &GainLaw, d_bar: f64) -> Result<UltimateBound, GainError> {
    let d_bar = positive("d_bar", d_bar)?;
    let sigma = law.inverse(d_bar)?;
    Ok(UltimateBound { sigma })
}
