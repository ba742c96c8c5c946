//! SDE parameterization and the conventions every other module relies on.
//!
//! The canonical equation is
//!
//! ```text
//! dv = -c [ alpha v - a + delta sgn(v) ] dt + sqrt(D) dB,   c in {1/2, 1}
//! ```
//!
//! `c = 1/2` is the form used for the stationary and regime results, `c = 1`
//! the form used for time-dependent propagators. The propagator literature
//! writes the constant force with the opposite sign (`+a` inside the
//! bracket); [`crate::propagator`] and [`crate::simulate::girsanov`] flip it
//! at their boundary so callers always pass the canonical `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `|a| / delta - 1` below which the force is treated
/// as exactly balancing the friction threshold.
pub const PARTLY_STUCK_RTOL: f64 = 1e-12;

/// Sign function with `sgn(0) = 0`.
#[inline]
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Prefactor `c` in front of the drift bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum DriftScale {
    Half,
    Unit,
}

impl DriftScale {
    pub fn value(self) -> f64 {
        match self {
            DriftScale::Half => 0.5,
            DriftScale::Unit => 1.0,
        }
    }
}

impl TryFrom<f64> for DriftScale {
    type Error = Error;

    fn try_from(c: f64) -> Result<Self> {
        if c == 0.5 {
            Ok(DriftScale::Half)
        } else if c == 1.0 {
            Ok(DriftScale::Unit)
        } else {
            Err(Error::invalid("drift_scale", format!("must be 0.5 or 1, got {c}")))
        }
    }
}

impl From<DriftScale> for f64 {
    fn from(c: DriftScale) -> f64 {
        c.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawModelParams {
    alpha: f64,
    a: f64,
    delta: f64,
    diffusion: f64,
    drift_scale: DriftScale,
}

/// Physical parameters of the dry-friction Langevin equation.
///
/// `diffusion = 0` is accepted: it is the deterministic limit the simulator
/// supports. Operations that need noise (`reduce`, scaling) reject it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", into = "RawModelParams")]
pub struct ModelParams {
    alpha: f64,
    a: f64,
    delta: f64,
    diffusion: f64,
    drift_scale: DriftScale,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.alpha, raw.a, raw.delta, raw.diffusion, raw.drift_scale)
    }
}

impl From<ModelParams> for RawModelParams {
    fn from(p: ModelParams) -> Self {
        RawModelParams {
            alpha: p.alpha,
            a: p.a,
            delta: p.delta,
            diffusion: p.diffusion,
            drift_scale: p.drift_scale,
        }
    }
}

impl ModelParams {
    pub fn new(alpha: f64, a: f64, delta: f64, diffusion: f64, drift_scale: DriftScale) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        if !a.is_finite() {
            return Err(Error::invalid("a", format!("must be finite, got {a}")));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::invalid("delta", format!("must be finite and > 0, got {delta}")));
        }
        if !diffusion.is_finite() || diffusion < 0.0 {
            return Err(Error::invalid(
                "diffusion",
                format!("must be finite and >= 0, got {diffusion}"),
            ));
        }
        Ok(ModelParams {
            alpha,
            a,
            delta,
            diffusion,
            drift_scale,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn drift_scale(&self) -> DriftScale {
        self.drift_scale
    }

    /// Drift `-c (alpha v - a + delta sgn v)`.
    #[inline]
    pub fn drift(&self, v: f64) -> f64 {
        -self.drift_scale.value() * (self.alpha * v - self.a + self.delta * sgn(v))
    }
}

/// Dimensionless / velocity-scaled coordinates of the stationary problem.
///
/// `tau` and `y` only exist with viscous friction (`alpha > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub nu: f64,
    pub tau: Option<f64>,
    pub y: Option<f64>,
    pub w: f64,
}

impl ReducedParams {
    /// Builds reduced coordinates directly from `(nu, tau, y)`; `w = y / tau`.
    pub fn new(nu: f64, tau: f64, y: f64) -> Result<Self> {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::invalid("nu", format!("must be finite and > 0, got {nu}")));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::invalid("tau", format!("must be finite and > 0, got {tau}")));
        }
        if !y.is_finite() {
            return Err(Error::invalid("y", format!("must be finite, got {y}")));
        }
        Ok(ReducedParams {
            nu,
            tau: Some(tau),
            y: Some(y),
            w: y / tau,
        })
    }

    pub fn tau(&self) -> Result<f64> {
        self.tau
            .ok_or_else(|| Error::invalid("tau", "undefined without viscous friction (alpha = 0)"))
    }

    pub fn y(&self) -> Result<f64> {
        self.y
            .ok_or_else(|| Error::invalid("y", "undefined without viscous friction (alpha = 0)"))
    }

    /// Inverse of [`reduce`]; the reduced coordinates are scale free, so the
    /// friction threshold has to be supplied.
    pub fn reconstruct(&self, delta: f64, drift_scale: DriftScale) -> Result<ModelParams> {
        let diffusion = 2.0 * drift_scale.value() * delta * self.nu;
        let alpha = match self.tau {
            Some(tau) => delta / tau,
            None => 0.0,
        };
        ModelParams::new(alpha, self.w * delta, delta, diffusion, drift_scale)
    }
}

/// Reduced coordinates whose stationary density `exp(-U/nu)/N` matches the
/// SDE's.
///
/// With drift scale `c` the stationary density is proportional to
/// `exp(-(2c/D)(alpha v^2/2 - a v + delta |v|))`, so `nu = D / (2 c delta)`:
/// `D / delta` for `c = 1/2` and `D / (2 delta)` for `c = 1`.
pub fn reduce(params: &ModelParams) -> Result<ReducedParams> {
    if params.diffusion <= 0.0 {
        return Err(Error::invalid("diffusion", "reduced coordinates need D > 0"));
    }
    let c = params.drift_scale.value();
    let nu = params.diffusion / (2.0 * c * params.delta);
    let (tau, y) = if params.alpha > 0.0 {
        (Some(params.delta / params.alpha), Some(params.a / params.alpha))
    } else {
        (None, None)
    };
    Ok(ReducedParams {
        nu,
        tau,
        y,
        w: params.a / params.delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Stuck,
    PartlyStuck,
    Viscous,
}

pub fn classify_regime(params: &ModelParams) -> Regime {
    let ratio = params.a.abs() / params.delta;
    if (ratio - 1.0).abs() <= PARTLY_STUCK_RTOL {
        Regime::PartlyStuck
    } else if ratio < 1.0 {
        Regime::Stuck
    } else {
        Regime::Viscous
    }
}

/// Unit-diffusion equivalent of a `c = 1` model at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledQuery {
    pub params: ModelParams,
    pub time: f64,
}

/// `Law(v[alpha, a, delta, D](t)) = Law(v[alpha/D, a/D, delta/D, 1](D t))`.
pub fn scale_to_unit_diffusion(params: &ModelParams, t: f64) -> Result<ScaledQuery> {
    if params.drift_scale != DriftScale::Unit {
        return Err(Error::invalid(
            "drift_scale",
            "scaling map is defined for c = 1; halve alpha, a and delta first",
        ));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    let d = params.diffusion;
    if d <= 0.0 {
        return Err(Error::invalid("diffusion", "scaling map needs D > 0"));
    }
    let scaled = if d == 1.0 {
        *params
    } else {
        ModelParams::new(params.alpha / d, params.a / d, params.delta / d, 1.0, DriftScale::Unit)?
    };
    Ok(ScaledQuery {
        params: scaled,
        time: d * t,
    })
}
