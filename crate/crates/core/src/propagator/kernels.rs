//! Densities of Brownian motion together with its local time at zero and
//! its occupation time of the positive half-line.
//!
//! Local time follows the `|B_t| = |B_0| + int sgn(B) dB + 2 L_t`
//! normalization. Every density here assumes a start `v0 >= 0`; negative
//! starts are handled by mirroring in the callers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analytic::special::{gaussian_kernel_unchecked, ln_gaussian_kernel};
use crate::error::{Error, Result};

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(name, format!("must be finite and > 0, got {t}")));
    }
    Ok(())
}

fn check_start(v0: f64) -> Result<()> {
    if !(v0 >= 0.0) || !v0.is_finite() {
        return Err(Error::invalid("v0", format!("kernel densities need v0 >= 0, got {v0}")));
    }
    Ok(())
}

/// First-passage density `h(s, v) = |v| / sqrt(2 pi s^3) exp(-v^2 / 2s)`.
pub fn h_kernel(s: f64, v: f64) -> Result<f64> {
    check_time("s", s)?;
    Ok(h_unchecked(s, v))
}

#[inline]
pub(crate) fn h_unchecked(s: f64, v: f64) -> f64 {
    v.abs() / (2.0 * PI * s * s * s).sqrt() * (-v * v / (2.0 * s)).exp()
}

/// `ln h(s, x)` for `x >= 0`.
#[inline]
pub(crate) fn ln_h(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    x.ln() - 0.5 * (2.0 * PI * s * s * s).ln() - x * x / (2.0 * s)
}

/// Mass of paths that never touch zero, per unit terminal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomWeight {
    pub weight: f64,
}

/// `omega(v0, b, t) = gamma_t(b - v0) - gamma_t(b + v0)`, the density of
/// `B_t` on the event `{L_t = 0, occupation = t}`.
pub fn atom_weight(v0: f64, b: f64, t: f64) -> Result<AtomWeight> {
    check_start(v0)?;
    check_time("t", t)?;
    if !(b > 0.0) {
        return Err(Error::invalid("b", format!("atom lives on b > 0, got {b}")));
    }
    Ok(AtomWeight {
        weight: atom_unchecked(v0, b, t),
    })
}

#[inline]
pub(crate) fn atom_unchecked(v0: f64, b: f64, t: f64) -> f64 {
    // gamma_t(b - v0) (1 - exp(-2 b v0 / t)) avoids the cancellation
    gaussian_kernel_unchecked(t, b - v0) * -(-2.0 * b * v0 / t).exp_m1()
}

#[inline]
pub(crate) fn ln_atom(v0: f64, b: f64, t: f64) -> f64 {
    if v0 <= 0.0 || b <= 0.0 {
        return f64::NEG_INFINITY;
    }
    ln_gaussian_kernel(t, b - v0) + (-(-2.0 * b * v0 / t).exp_m1()).ln()
}

/// A point of the `(B_t, L_t, occupation)` state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDensityPoint {
    pub b: f64,
    pub l: f64,
    pub occupation: f64,
    pub v0: f64,
}

/// Continuous part of the joint density of `(B_t, L_t)` started at `v0 >= 0`:
/// `2 h(t, 2l + v0 + |b|)`. The atom at `l = 0` is [`atom_weight`].
pub fn joint_density_bl(v0: f64, b: f64, l: f64, t: f64) -> Result<f64> {
    check_start(v0)?;
    check_time("t", t)?;
    if !(l >= 0.0) {
        return Err(Error::invalid("l", format!("local time must be >= 0, got {l}")));
    }
    Ok(2.0 * h_unchecked(t, 2.0 * l + v0 + b.abs()))
}

/// Levels of the two first-passage kernels in the trivariate density.
///
/// The density factors as `2 h(occ, l + x_pos) h(t - occ, l + x_neg)`: time
/// spent positive is a passage through `l + x_pos`, time spent negative a
/// passage through `l + x_neg`. The two branches agree at `b = 0`.
#[inline]
pub(crate) fn passage_levels(v0: f64, b: f64) -> (f64, f64) {
    if b < 0.0 {
        (v0, -b)
    } else {
        (v0 + b, 0.0)
    }
}

/// Density of `(B_t, L_t, occupation)` jointly in all three variables.
pub fn trivariate_density(v0: f64, b: f64, l: f64, occupation: f64, t: f64) -> Result<f64> {
    check_start(v0)?;
    check_time("t", t)?;
    if !(l > 0.0) {
        return Err(Error::invalid("l", format!("must be > 0, got {l}")));
    }
    if !(occupation > 0.0 && occupation < t) {
        return Err(Error::invalid(
            "occupation",
            format!("must lie strictly inside (0, {t}), got {occupation}"),
        ));
    }
    let (x_pos, x_neg) = passage_levels(v0, b);
    Ok(2.0 * h_unchecked(occupation, l + x_pos) * h_unchecked(t - occupation, l + x_neg))
}
