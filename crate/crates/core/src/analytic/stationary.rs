//! Stationary density `exp(-U(v)/nu) / N` of the velocity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::curve::{resolved_grid, DensityCurve};
use super::special::{ln_gaussian_tail, log_add_exp};
use crate::error::{Error, Result};
use crate::model::{sgn, ReducedParams};
use crate::stats::{integrate, integrate_pieces, QuadOptions};

/// `U(v) = (v - y)^2 / (2 tau) + |v|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub tau: f64,
    pub y: f64,
}

impl Potential {
    pub fn new(tau: f64, y: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid("tau", format!("must be finite and > 0, got {tau}")));
        }
        if !y.is_finite() {
            return Err(Error::invalid("y", format!("must be finite, got {y}")));
        }
        Ok(Potential { tau, y })
    }

    pub fn from_reduced(r: &ReducedParams) -> Result<Self> {
        Potential::new(r.tau()?, r.y()?)
    }
}

pub fn potential_value(p: &Potential, v: f64) -> f64 {
    let d = v - p.y;
    d * d / (2.0 * p.tau) + v.abs()
}

/// Global minimizer of `U`: 0 while `|y| <= tau`, otherwise `y - sgn(y) tau`.
pub fn potential_minimizer(p: &Potential) -> f64 {
    if p.y.abs() <= p.tau {
        0.0
    } else {
        p.y - sgn(p.y) * p.tau
    }
}

pub fn stationary_log_unnormalized(r: &ReducedParams, v: f64) -> Result<f64> {
    let p = Potential::from_reduced(r)?;
    Ok(-potential_value(&p, v) / r.nu)
}

/// `ln` of `int_x^inf exp(-U(v)/nu) dv` for `x >= 0`.
///
/// On `v > 0`, `U(v) = (v - (y - tau))^2 / (2 tau) + y - tau/2`, so the
/// integral is a shifted Gaussian tail.
fn ln_upper_mass(nu: f64, tau: f64, y: f64, x: f64) -> f64 {
    let s = (tau * nu).sqrt();
    (tau - 2.0 * y) / (2.0 * nu) + 0.5 * (2.0 * PI * tau * nu).ln() + ln_gaussian_tail((x - y + tau) / s)
}

/// `ln N` with `N = int exp(-U/nu) dv`
/// `  = sqrt(2 pi tau nu) [ e^{(tau-2y)/(2nu)} G((tau-y)/sqrt(tau nu)) + e^{(tau+2y)/(2nu)} G((tau+y)/sqrt(tau nu)) ]`.
pub fn log_stationary_normalizer(r: &ReducedParams) -> Result<f64> {
    let (tau, y) = (r.tau()?, r.y()?);
    if !(r.nu > 0.0) {
        return Err(Error::invalid("nu", format!("must be > 0, got {}", r.nu)));
    }
    let ln_n = log_add_exp(ln_upper_mass(r.nu, tau, y, 0.0), ln_upper_mass(r.nu, tau, -y, 0.0));
    if !ln_n.is_finite() {
        return Err(Error::NonConvergence {
            context: "stationary normalizer",
            detail: format!("log-domain value not finite at nu={}, tau={tau}, y={y}", r.nu),
        });
    }
    Ok(ln_n)
}

/// The partition function itself; fails when it is not representable as an
/// `f64` (use [`log_stationary_normalizer`] there).
pub fn stationary_normalizer(r: &ReducedParams) -> Result<f64> {
    let ln_n = log_stationary_normalizer(r)?;
    let n = ln_n.exp();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::NonConvergence {
            context: "stationary normalizer",
            detail: format!("ln N = {ln_n} is outside the f64 range"),
        });
    }
    Ok(n)
}

/// Stationary density at a single point, evaluated in log domain.
pub fn stationary_density(r: &ReducedParams, v: f64) -> Result<f64> {
    let ln_n = log_stationary_normalizer(r)?;
    Ok((stationary_log_unnormalized(r, v)? - ln_n).exp())
}

pub fn stationary_pdf(r: &ReducedParams, grid: &[f64]) -> Result<DensityCurve> {
    let p = Potential::from_reduced(r)?;
    let ln_n = log_stationary_normalizer(r)?;
    let curve = DensityCurve::from_fn(grid, |v| (-potential_value(&p, v) / r.nu - ln_n).exp())?;
    Ok(curve
        .with_meta("kind", "stationary")
        .with_meta("nu", r.nu)
        .with_meta("tau", p.tau)
        .with_meta("y", p.y)
        .with_meta("ln_normalizer", ln_n))
}

/// Stationary CDF in closed form.
pub fn stationary_cdf(r: &ReducedParams, v: f64) -> Result<f64> {
    let (tau, y) = (r.tau()?, r.y()?);
    let ln_n = log_stationary_normalizer(r)?;
    Ok(if v <= 0.0 {
        // mirror: mass on (-inf, v] equals the upper mass from -v with y -> -y
        (ln_upper_mass(r.nu, tau, -y, -v) - ln_n).exp()
    } else {
        1.0 - (ln_upper_mass(r.nu, tau, y, v) - ln_n).exp()
    })
}

/// Stationary probability of `{v > 0}`.
pub fn stationary_positive_mass(r: &ReducedParams) -> Result<f64> {
    let (tau, y) = (r.tau()?, r.y()?);
    let ln_n = log_stationary_normalizer(r)?;
    Ok((ln_upper_mass(r.nu, tau, y, 0.0) - ln_n).exp())
}

/// Closed-form normalizer next to a direct quadrature of `exp(-U/nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizerCheck {
    pub ln_closed_form: f64,
    pub ln_quadrature: f64,
    /// `|N_closed / N_quadrature - 1|`.
    pub relative_error: f64,
    pub quadrature_error_estimate: f64,
}

/// Integrates `exp(-(U(v) - U_min)/nu)` over the line (so nothing
/// underflows) and compares with [`log_stationary_normalizer`].
pub fn normalizer_residual(r: &ReducedParams) -> Result<NormalizerCheck> {
    let p = Potential::from_reduced(r)?;
    let nu = r.nu;
    let m = potential_minimizer(&p);
    let u_min = potential_value(&p, m);
    let f = |v: f64| (-(potential_value(&p, v) - u_min) / nu).exp();
    let s = (p.tau * nu).sqrt();
    let mut breaks = vec![0.0, m, m - 10.0 * s, m + 10.0 * s, -10.0 * nu.min(s), 10.0 * nu.min(s)];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let opts = QuadOptions::rel(1e-13).with_tail_scale(s.max(nu));
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    let mut total = integrate(f, f64::NEG_INFINITY, lo, &opts);
    let mid = integrate_pieces(f, &breaks, &opts);
    let upper = integrate(f, hi, f64::INFINITY, &opts);
    total.value += mid.value + upper.value;
    total.error_estimate += mid.error_estimate + upper.error_estimate;
    if !(total.converged && mid.converged && upper.converged) {
        return Err(Error::NonConvergence {
            context: "normalizer quadrature",
            detail: format!("error estimate {:e}", total.error_estimate),
        });
    }
    let ln_closed_form = log_stationary_normalizer(r)?;
    let ln_quadrature = total.value.ln() - u_min / nu;
    Ok(NormalizerCheck {
        ln_closed_form,
        ln_quadrature,
        relative_error: (ln_closed_form - ln_quadrature).exp_m1().abs(),
        quadrature_error_estimate: total.error_estimate / total.value,
    })
}

/// Default grid: both the origin and the minimizer, padded by twelve
/// standard deviations of the local Gaussian / exponential pieces.
pub fn stationary_grid(r: &ReducedParams) -> Result<Vec<f64>> {
    let p = Potential::from_reduced(r)?;
    let m = potential_minimizer(&p);
    let spread = 12.0 * ((p.tau * r.nu).sqrt() + r.nu);
    let scale = (p.tau * r.nu).sqrt().min(r.nu);
    Ok(resolved_grid(m.min(0.0) - spread, m.max(0.0) + spread, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reduced(nu: f64, tau: f64, y: f64) -> ReducedParams {
        ReducedParams::new(nu, tau, y).unwrap()
    }

    #[test]
    fn potential_examples() {
        let p = Potential::new(1.0, 0.0).unwrap();
        assert_eq!(potential_value(&p, 0.0), 0.0);
        assert_eq!(potential_value(&Potential::new(1.0, 3.0).unwrap(), 2.0), 2.5);
        assert_eq!(potential_value(&Potential::new(2.0, 1.0).unwrap(), 0.0), 0.25);
        assert!(Potential::new(0.0, 1.0).is_err());
    }

    #[test]
    fn minimizer_examples() {
        assert_eq!(potential_minimizer(&Potential::new(1.0, 3.0).unwrap()), 2.0);
        assert_eq!(potential_minimizer(&Potential::new(1.0, 0.4).unwrap()), 0.0);
        assert_eq!(potential_minimizer(&Potential::new(1.0, -3.0).unwrap()), -2.0);
    }

    #[test]
    fn log_unnormalized_examples() {
        assert_eq!(stationary_log_unnormalized(&reduced(1.0, 1.0, 0.0), 0.0).unwrap(), 0.0);
        assert_eq!(stationary_log_unnormalized(&reduced(1.0, 1.0, 0.0), 1.0).unwrap(), -1.5);
        // -(1/0.5) * ((-2)^2/4 + 1)
        let expected = -(1.0 / 0.5) * ((-1.0f64 - 1.0).powi(2) / (2.0 * 2.0) + 1.0);
        assert_eq!(
            stationary_log_unnormalized(&reduced(0.5, 2.0, 1.0), -1.0).unwrap(),
            expected
        );
        assert_eq!(expected, -4.0);
    }

    #[test]
    fn log_unnormalized_rejects_missing_tau() {
        let r = ReducedParams {
            nu: 1.0,
            tau: None,
            y: None,
            w: 0.0,
        };
        assert!(stationary_log_unnormalized(&r, 0.0).is_err());
        assert!(log_stationary_normalizer(&r).is_err());
    }

    #[test]
    fn normalizer_closed_form_specialization() {
        // (nu, tau, y) = (1, 1, 0): 2 sqrt(2 pi) e^{1/2} G(1)
        let g1 = 0.158_655_253_931_457_05;
        let expected = 2.0 * (2.0 * PI).sqrt() * 0.5f64.exp() * g1;
        let n = stationary_normalizer(&reduced(1.0, 1.0, 0.0)).unwrap();
        assert!((n - expected).abs() < 1e-14);
        // 40-digit quadrature of exp(-(v^2/2 + |v|)) over the line
        assert!((n - 1.311_359_084_837_597).abs() < 1e-13);
        let peak = stationary_density(&reduced(1.0, 1.0, 0.0), 0.0).unwrap();
        assert!((peak - 0.762_567_638_080_490_6).abs() < 1e-13);
    }

    #[test]
    fn normalizer_matches_quadrature_on_a_few_points() {
        for &(nu, tau, y) in &[(1.0, 1.0, 0.0), (0.01, 0.5, 3.0), (0.1, 2.0, -2.0), (0.001, 1.0, 0.9)] {
            let c = normalizer_residual(&reduced(nu, tau, y)).unwrap();
            assert!(c.relative_error <= 1e-10, "({nu},{tau},{y}): {c:?}");
        }
    }

    #[test]
    fn normalizer_survives_tiny_nu() {
        let r = reduced(1e-3, 1.0, 3.0);
        let ln_n = log_stationary_normalizer(&r).unwrap();
        // dominated by the Gaussian around v = 2 with U = 2.5
        let approx = -2.5 / 1e-3 + 0.5 * (2.0 * PI * 1e-3).ln();
        assert!((ln_n - approx).abs() < 1e-9, "{ln_n} vs {approx}");
        assert!(stationary_normalizer(&r).is_err());
    }

    #[test]
    fn cdf_limits_and_continuity() {
        for &(nu, tau, y) in &[(1.0, 1.0, 0.0), (0.1, 2.0, 0.5), (0.01, 0.5, -2.0)] {
            let r = reduced(nu, tau, y);
            let below = stationary_cdf(&r, -1e-300).unwrap();
            let above = stationary_cdf(&r, 1e-300).unwrap();
            assert!((below - above).abs() < 1e-12);
            assert!(stationary_cdf(&r, -50.0).unwrap() < 1e-12);
            assert!((stationary_cdf(&r, 50.0).unwrap() - 1.0).abs() < 1e-12);
            let neg = stationary_cdf(&r, 0.0).unwrap();
            assert!((neg + stationary_positive_mass(&r).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pdf_symmetry_and_reflection() {
        let grid = crate::analytic::linspace(-4.0, 4.0, 81);
        let mirrored: Vec<f64> = grid.iter().rev().map(|x| -x).collect();
        let even = stationary_pdf(&reduced(0.7, 1.3, 0.0), &grid).unwrap();
        let even_m = stationary_pdf(&reduced(0.7, 1.3, 0.0), &mirrored).unwrap();
        for i in 0..grid.len() {
            let j = grid.len() - 1 - i;
            assert!((even.values[i] - even_m.values[j]).abs() < 1e-15);
        }
        let plus = stationary_pdf(&reduced(0.3, 1.0, 0.8), &grid).unwrap();
        let minus = stationary_pdf(&reduced(0.3, 1.0, -0.8), &mirrored).unwrap();
        for i in 0..grid.len() {
            let j = grid.len() - 1 - i;
            assert!((plus.values[i] - minus.values[j]).abs() <= 1e-15 * plus.values[i].max(1e-300));
        }
    }

    #[test]
    fn pdf_integrates_to_one_on_default_grid() {
        for &(nu, tau, y) in &[(1.0, 1.0, 0.0), (0.01, 1.0, 0.4), (0.001, 1.0, 3.0), (0.1, 0.5, -2.0)] {
            let r = reduced(nu, tau, y);
            let curve = stationary_pdf(&r, &stationary_grid(&r).unwrap()).unwrap();
            let mass = curve.trapezoid_integral();
            assert!((mass - 1.0).abs() < 1e-4, "({nu},{tau},{y}) mass {mass}");
        }
    }
}
