//! Exact transition density of `dv = -delta sgn(v) dt + dB`.

use serde::{Deserialize, Serialize};

use crate::analytic::special::{gaussian_cdf, gaussian_kernel_unchecked, ln_gaussian_cdf, ln_gaussian_kernel};
use crate::error::{Error, Result};
use crate::stats::{integrate_pieces, QuadOptions, QuadratureResult};

/// Transition query in the unit-diffusion, `c = 1` convention. `a` is the
/// canonical constant force (positive pushes the velocity up).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorQuery {
    pub v0: f64,
    pub v: f64,
    pub t: f64,
    pub delta: f64,
    #[serde(default)]
    pub a: f64,
}

impl PropagatorQuery {
    pub fn new(v0: f64, v: f64, t: f64, delta: f64, a: f64) -> Result<Self> {
        let q = PropagatorQuery { v0, v, t, delta, a };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.v0.is_finite() {
            return Err(Error::invalid("v0", "must be finite"));
        }
        if !self.v.is_finite() {
            return Err(Error::invalid("v", "must be finite"));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::invalid("t", format!("must be finite and > 0, got {}", self.t)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(
                "delta",
                format!("must be finite and > 0, got {}", self.delta),
            ));
        }
        if !self.a.is_finite() {
            return Err(Error::invalid("a", "must be finite"));
        }
        Ok(())
    }
}

/// `p(v, t | v0) = exp(delta(|v0| - |v|) - delta^2 t / 2) gamma_t(v - v0)
///               + delta exp(-2 delta |v|) F((delta t - |v| - |v0|) / sqrt t)`.
///
/// Detailed balance with the speed measure `exp(-2 delta |v|)` is built in:
/// both terms are symmetric once multiplied by `exp(-2 delta |v0|)`.
pub fn propagator_free(q: &PropagatorQuery) -> Result<f64> {
    q.validate()?;
    if q.a != 0.0 {
        return Err(Error::invalid(
            "a",
            "closed form requires a = 0; use the forced propagator",
        ));
    }
    Ok(free_density(q.v, q.t, q.v0, q.delta))
}

#[inline]
pub(crate) fn free_density(v: f64, t: f64, v0: f64, delta: f64) -> f64 {
    let (av, av0) = (v.abs(), v0.abs());
    let gauss = (delta * (av0 - av) - 0.5 * delta * delta * t + ln_gaussian_kernel(t, v - v0)).exp();
    let tail = if av + av0 > delta * t {
        // both factors can be tiny; stay in log domain
        (delta.ln() - 2.0 * delta * av + ln_gaussian_cdf((delta * t - av - av0) / t.sqrt())).exp()
    } else {
        delta * (-2.0 * delta * av).exp() * gaussian_cdf((delta * t - av - av0) / t.sqrt())
    };
    gauss + tail
}

/// Speed measure `m(v) = exp(-2 delta |v|)`.
pub fn speed_measure(v: f64, delta: f64) -> f64 {
    (-2.0 * delta * v.abs()).exp()
}

/// `m(v0) p(v, t | v0) - m(v) p(v0, t | v)`.
pub fn detailed_balance_gap(v0: f64, v: f64, t: f64, delta: f64) -> f64 {
    speed_measure(v0, delta) * free_density(v, t, v0, delta) - speed_measure(v, delta) * free_density(v0, t, v, delta)
}

/// Stationary limit `delta exp(-2 delta |v|)`.
pub fn free_stationary_density(v: f64, delta: f64) -> f64 {
    delta * speed_measure(v, delta)
}

fn sorted_breaks(mut pts: Vec<f64>) -> Vec<f64> {
    pts.retain(|x| x.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Breakpoints for integrating the free density in `v`: the kink at 0 and
/// the Gaussian bump around `v0`.
pub(crate) fn velocity_breaks(v0: f64, t: f64, delta: f64) -> Vec<f64> {
    let s = t.sqrt();
    let reach = 12.0 * s + delta * t + v0.abs() + 2.0 + 20.0 / delta;
    sorted_breaks(vec![-reach, 0.0, v0 - 6.0 * s, v0, v0 + 6.0 * s, reach])
}

/// `int p(v, t | v0) dv` over the real line.
pub fn free_total_mass(v0: f64, t: f64, delta: f64, abs_tol: f64) -> QuadratureResult {
    let breaks = velocity_breaks(v0, t, delta);
    integrate_pieces(|v| free_density(v, t, v0, delta), &breaks, &QuadOptions::abs(abs_tol))
}

/// Mean and variance of `p(., t | v0)` by quadrature.
pub fn free_moments(v0: f64, t: f64, delta: f64) -> (f64, f64) {
    let breaks = velocity_breaks(v0, t, delta);
    let opts = QuadOptions::abs(1e-13);
    let mass = integrate_pieces(|v| free_density(v, t, v0, delta), &breaks, &opts).value;
    let mean = integrate_pieces(|v| v * free_density(v, t, v0, delta), &breaks, &opts).value / mass;
    let var = integrate_pieces(
        |v| (v - mean) * (v - mean) * free_density(v, t, v0, delta),
        &breaks,
        &opts,
    )
    .value
        / mass;
    (mean, var)
}

/// `|p(v, s + t | v0) - int p(v, t | u) p(u, s | v0) du|`.
pub fn chapman_kolmogorov_residual(v0: f64, v: f64, s: f64, t: f64, delta: f64) -> Result<f64> {
    PropagatorQuery::new(v0, v, s, delta, 0.0)?;
    PropagatorQuery::new(v0, v, t, delta, 0.0)?;
    let (rs, rt) = (s.sqrt(), t.sqrt());
    let reach = (v0.abs() + v.abs() + 10.0).max(10.0);
    let breaks = sorted_breaks(vec![
        -reach,
        0.0,
        v0 - 8.0 * rs,
        v0 - rs,
        v0,
        v0 + rs,
        v0 + 8.0 * rs,
        v - 8.0 * rt,
        v,
        v + 8.0 * rt,
        reach,
    ]);
    let composed = integrate_pieces(
        |u| free_density(v, t, u, delta) * free_density(u, s, v0, delta),
        &breaks,
        &QuadOptions::abs(1e-12).with_max_panels(20_000),
    );
    if !composed.converged {
        return Err(Error::NonConvergence {
            context: "Chapman-Kolmogorov integral",
            detail: format!("error estimate {:e}", composed.error_estimate),
        });
    }
    Ok((free_density(v, s + t, v0, delta) - composed.value).abs())
}

/// Density with a Gaussian term carrying an extra factor `delta`; kept only
/// to show that it fails normalization whenever `delta != 1`.
pub fn free_density_extra_delta(v: f64, t: f64, v0: f64, delta: f64) -> f64 {
    let (av, av0) = (v.abs(), v0.abs());
    delta
        * ((delta * (av0 + av) - 0.5 * delta * delta * t).exp() * gaussian_kernel_unchecked(t, v - v0)
            + gaussian_cdf((delta * t - av - av0) / t.sqrt()))
        * (-2.0 * delta * av).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn origin_value() {
        let p = propagator_free(&PropagatorQuery::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap()).unwrap();
        assert!((p - 1.083_315_470_587_686_3).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(PropagatorQuery::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(PropagatorQuery::new(0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        let forced = PropagatorQuery::new(0.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        assert!(propagator_free(&forced).is_err());
    }

    #[test]
    fn long_time_speed_measure() {
        for &v in &[0.0, 0.5, -0.5] {
            let p = free_density(v, 200.0, 0.3, 1.0);
            assert!((p - free_stationary_density(v, 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn normalization_rejects_extra_delta() {
        for &delta in &[0.5, 1.0, 2.0] {
            let m = free_total_mass(0.7, 1.0, delta, 1e-12);
            assert!((m.value - 1.0).abs() < 1e-8, "delta={delta}: {}", m.value);
            let wrong = integrate_pieces(
                |v| free_density_extra_delta(v, 1.0, 0.7, delta),
                &velocity_breaks(0.7, 1.0, delta),
                &QuadOptions::abs(1e-12),
            )
            .value;
            if delta == 1.0 {
                assert!((wrong - 1.0).abs() < 1e-8);
            } else {
                assert!((wrong - 1.0).abs() > 1e-2, "delta={delta}: {wrong}");
            }
        }
    }

    #[test]
    fn chapman_kolmogorov_examples() {
        assert!(chapman_kolmogorov_residual(0.0, 0.2, 0.5, 0.5, 1.0).unwrap() <= 1e-4);
        assert!(chapman_kolmogorov_residual(1.0, -1.0, 0.25, 0.75, 2.0).unwrap() <= 1e-4);
        assert!(chapman_kolmogorov_residual(0.3, 0.1, 1e-6, 1.0, 1.0).unwrap() <= 1e-2);
    }

    #[test]
    fn short_time_concentration() {
        let (t, delta) = (1e-3, 1.0);
        for &v0 in &[-1.0, 0.0, 0.7] {
            let (mean, var) = free_moments(v0, t, delta);
            assert!((mean - v0).abs() <= 2e-3 + delta * t, "v0={v0}: mean {mean}");
            assert!(var <= 2.0 * t, "v0={v0}: var {var}");
        }
    }

    proptest! {
        #[test]
        fn detailed_balance_holds(v0 in -3.0f64..3.0, v in -3.0f64..3.0, t in 0.05f64..10.0, delta in 0.2f64..3.0) {
            let lhs = speed_measure(v0, delta) * free_density(v, t, v0, delta);
            let gap = detailed_balance_gap(v0, v, t, delta);
            prop_assert!(gap.abs() <= 1e-12 * lhs.abs().max(1e-300));
        }

        #[test]
        fn mirror_symmetry_is_exact(v0 in -3.0f64..3.0, v in -3.0f64..3.0, t in 0.05f64..10.0, delta in 0.2f64..3.0) {
            prop_assert_eq!(free_density(v, t, v0, delta), free_density(-v, t, -v0, delta));
        }
    }
}
