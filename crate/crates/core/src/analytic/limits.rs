//! Small-noise limit laws of the stationary velocity in the three regimes.
//!
//! Each density is expressed in the rescaled variable whose law converges:
//! `v / nu` (stuck, and the opposing side of the balanced case),
//! `v / sqrt(nu)` (driven side of the balanced case) and
//! `(v - (y - sgn(y) tau)) / sqrt(nu)` (viscous).

use std::f64::consts::PI;

use super::curve::{linspace, resolved_grid, DensityCurve, DEFAULT_GRID_POINTS};
use super::special::gaussian_cdf;
use crate::error::{Error, Result};

fn check_tilt(w: f64) -> Result<()> {
    if !(w.abs() < 1.0) {
        return Err(Error::invalid("w", format!("stuck regime needs |w| < 1, got {w}")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid("tau", format!("must be finite and > 0, got {tau}")));
    }
    Ok(())
}

/// `((1 - w^2) / 2) exp(-|u| + w u)`, the stuck law of `v / nu` with `w = a / delta`.
pub fn stuck_limit_density(w: f64, u: f64) -> Result<f64> {
    check_tilt(w)?;
    Ok(0.5 * (1.0 - w * w) * (-u.abs() + w * u).exp())
}

pub fn stuck_limit_cdf(w: f64, u: f64) -> Result<f64> {
    check_tilt(w)?;
    Ok(if u < 0.0 {
        0.5 * (1.0 - w) * ((1.0 + w) * u).exp()
    } else {
        1.0 - 0.5 * (1.0 + w) * (-(1.0 - w) * u).exp()
    })
}

pub fn limit_pdf_stuck(w: f64, grid: &[f64]) -> Result<DensityCurve> {
    check_tilt(w)?;
    let curve = DensityCurve::from_fn(grid, |u| 0.5 * (1.0 - w * w) * (-u.abs() + w * u).exp())?;
    Ok(curve
        .with_meta("kind", "stuck_limit")
        .with_meta("w", w)
        .with_meta("variable", "v/nu"))
}

/// Grid covering forty decay lengths on each side of the stuck law.
pub fn stuck_grid(w: f64) -> Result<Vec<f64>> {
    check_tilt(w)?;
    Ok(resolved_grid(
        -40.0 / (1.0 + w),
        40.0 / (1.0 - w),
        1.0 / (1.0 + w.abs()),
    ))
}

/// Which half-line of the balanced (`|a| = delta`) case is described, in
/// terms of the sign of `a v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `a v < 0`: velocity opposes the force; law of `v / nu`.
    Opposing,
    /// `a v > 0`: velocity follows the force; law of `v / sqrt(nu)`.
    Driven,
}

impl Side {
    pub fn from_sign(s: f64) -> Result<Side> {
        if s < 0.0 {
            Ok(Side::Opposing)
        } else if s > 0.0 {
            Ok(Side::Driven)
        } else {
            Err(Error::invalid("side", "sign of a*v must be nonzero"))
        }
    }
}

/// Partly-stuck limit density in the oriented variable `s = sgn(a) u`, so
/// the opposing side is `s < 0` and the driven side `s > 0`. The density is
/// zero off its half-line and integrates to one on it.
pub fn partly_stuck_limit_density(side: Side, tau: f64, s: f64) -> Result<f64> {
    Ok(match side {
        Side::Opposing => {
            if s < 0.0 {
                2.0 * (2.0 * s).exp()
            } else {
                0.0
            }
        }
        Side::Driven => {
            check_tau(tau)?;
            if s > 0.0 {
                2.0 / (2.0 * PI * tau).sqrt() * (-s * s / (2.0 * tau)).exp()
            } else {
                0.0
            }
        }
    })
}

pub fn limit_pdf_partly_stuck(side: Side, tau: f64, grid: &[f64]) -> Result<DensityCurve> {
    if side == Side::Driven {
        check_tau(tau)?;
    }
    let values = grid
        .iter()
        .map(|&s| partly_stuck_limit_density(side, tau, s))
        .collect::<Result<Vec<_>>>()?;
    let (label, variable) = match side {
        Side::Opposing => ("opposing", "sgn(a) v/nu"),
        Side::Driven => ("driven", "sgn(a) v/sqrt(nu)"),
    };
    Ok(DensityCurve::new(grid.to_vec(), values)?
        .with_meta("kind", "partly_stuck_limit")
        .with_meta("side", label)
        .with_meta("tau", tau)
        .with_meta("variable", variable))
}

/// Centered Gaussian of variance `tau`.
pub fn viscous_limit_density(tau: f64, z: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok((-z * z / (2.0 * tau)).exp() / (2.0 * PI * tau).sqrt())
}

pub fn viscous_limit_cdf(tau: f64, z: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(gaussian_cdf(z / tau.sqrt()))
}

pub fn limit_pdf_viscous(tau: f64, grid: &[f64]) -> Result<DensityCurve> {
    check_tau(tau)?;
    let curve = DensityCurve::from_fn(grid, |z| (-z * z / (2.0 * tau)).exp() / (2.0 * PI * tau).sqrt())?;
    Ok(curve
        .with_meta("kind", "viscous_limit")
        .with_meta("tau", tau)
        .with_meta("variable", "(v - (y - sgn(y) tau))/sqrt(nu)"))
}

pub fn viscous_grid(tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let s = 12.0 * tau.sqrt();
    Ok(linspace(-s, s, DEFAULT_GRID_POINTS))
}
