//! Transition density of `dv = -(delta sgn(v) - a) dt + dB` by integrating
//! the tilted trivariate Brownian density over local time and occupation
//! time.
//!
//! With the push `k = -a` (the force as it appears inside the drift
//! bracket) the change of measure gives, for a start `v0 >= 0`,
//!
//! ```text
//! p(v) = exp[delta(v0 - |v|) + k(v0 - v) - (delta - k)^2 t / 2]
//!        * ( int int e^{2 delta l - 2 k delta occ} p_t(v, l, occ) dl docc
//!            + 1[v > 0] e^{-2 k delta t} omega(v0, v, t) ).
//! ```
//!
//! Starts below zero use the mirror `(v, v0, a) -> (-v, -v0, -a)`.

use std::cell::Cell;
use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::free::{free_density, PropagatorQuery};
use super::kernels::{ln_atom, ln_h, passage_levels};
use crate::analytic::special::gaussian_kernel_unchecked;
use crate::analytic::DensityCurve;
use crate::error::{Error, Result};
use crate::simulate::girsanov::{girsanov_propagator_estimate, GirsanovRequest};
use crate::stats::{integrate, integrate_pieces, CdfTable, QuadOptions};

/// Relative tolerance of the inner (local time) integral.
const INNER_RTOL: f64 = 1e-10;
/// Relative tolerance of the outer (occupation time) integral.
const OUTER_RTOL: f64 = 1e-9;
/// Tolerance of the marginalization gate.
pub const TRIVARIATE_GATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedEvaluation {
    pub density: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
}

/// Exponential tilts applied to the trivariate density.
#[derive(Debug, Clone, Copy)]
struct Tilt {
    per_local_time: f64,
    per_occupation: f64,
    log_prefactor: f64,
}

/// `int_0^t docc int_0^inf dl exp(tilt) p_t(b, l, occ | v0)`, plus the atom.
fn tilted_marginal(v0: f64, b: f64, t: f64, tilt: Tilt) -> Result<ForcedEvaluation> {
    debug_assert!(v0 >= 0.0);
    let (x_pos, x_neg) = passage_levels(v0, b);
    let panels = Cell::new(0usize);
    let inner_failures = Cell::new(0usize);
    let kappa = tilt.per_local_time;

    let inner = |occ: f64| -> f64 {
        let (s_pos, s_neg) = (occ, t - occ);
        if !(s_pos > 0.0 && s_neg > 0.0) {
            return 0.0;
        }
        let base = tilt.log_prefactor + LN_2 + tilt.per_occupation * occ;
        let log_integrand = |l: f64| base + kappa * l + ln_h(s_pos, l + x_pos) + ln_h(s_neg, l + x_neg);
        // Gaussian part of the log-integrand in l is centred at `centre`
        // with width `width`; the linear factors only shift it by O(width).
        let precision = 1.0 / s_pos + 1.0 / s_neg;
        let centre = (kappa - x_pos / s_pos - x_neg / s_neg) / precision;
        let width = precision.sqrt().recip();
        let peak = centre.max(0.0);
        let lo = (centre - 15.0 * width).max(0.0);
        let hi = peak + 15.0 * width;
        let breaks: Vec<f64> = if peak > lo { vec![lo, peak, hi] } else { vec![lo, hi] };
        let r = integrate_pieces(|l| log_integrand(l).exp(), &breaks, &QuadOptions::rel(INNER_RTOL));
        panels.set(panels.get() + r.panels);
        if !r.converged {
            inner_failures.set(inner_failures.get() + 1);
        }
        r.value
    };

    // occ = t (1 - cos phi) / 2 removes the inverse square-root endpoint
    // behaviour at occ -> 0 and occ -> t.
    let outer = integrate(
        |phi: f64| {
            let occ = 0.5 * t * (1.0 - phi.cos());
            inner(occ) * 0.5 * t * phi.sin()
        },
        0.0,
        PI,
        &QuadOptions::rel(OUTER_RTOL),
    );
    let panels_used = panels.get() + outer.panels;
    if !outer.converged || inner_failures.get() > 0 {
        return Err(Error::NonConvergence {
            context: "trivariate quadrature",
            detail: format!(
                "b={b}, v0={v0}, t={t}: outer error estimate {:e} after {panels_used} panels, {} inner failures",
                outer.error_estimate,
                inner_failures.get()
            ),
        });
    }
    let atom = if b > 0.0 {
        (tilt.log_prefactor + tilt.per_occupation * t + ln_atom(v0, b, t)).exp()
    } else {
        0.0
    };
    Ok(ForcedEvaluation {
        density: outer.value + atom,
        error_estimate: outer.error_estimate,
        panels_used,
    })
}

/// Forced propagator at one point; `q.a` is the canonical force.
pub fn propagator_forced(q: &PropagatorQuery) -> Result<ForcedEvaluation> {
    q.validate()?;
    let (mut v, mut v0, mut push) = (q.v, q.v0, -q.a);
    if v0 < 0.0 {
        v = -v;
        v0 = -v0;
        push = -push;
    }
    let (delta, t) = (q.delta, q.t);
    let tilt = Tilt {
        per_local_time: 2.0 * delta,
        per_occupation: -2.0 * push * delta,
        log_prefactor: delta * (v0 - v.abs()) + push * (v0 - v) - 0.5 * (delta - push) * (delta - push) * t,
    };
    tilted_marginal(v0, v, t, tilt)
}

/// `int p_t(b, l, occ | v0) dl docc + omega(v0, b, t)`; equals
/// `gamma_t(b - v0)` when the trivariate density is right.
pub fn trivariate_marginal(v0: f64, b: f64, t: f64) -> Result<f64> {
    let tilt = Tilt {
        per_local_time: 0.0,
        per_occupation: 0.0,
        log_prefactor: 0.0,
    };
    Ok(tilted_marginal(v0, b, t, tilt)?.density)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub points: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Test points `(v0, b, t)` of the marginalization gate.
pub fn trivariate_gate_points() -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::with_capacity(20);
    for &(v0, t) in &[(0.0, 1.0), (0.5, 1.0), (1.2, 0.5), (0.3, 2.0)] {
        for &b in &[-1.1, -0.4, 0.2, 0.9, 1.7] {
            pts.push((v0, b, t));
        }
    }
    pts
}

pub fn run_trivariate_gate() -> GateReport {
    let pts = trivariate_gate_points();
    let max_abs_error = pts
        .iter()
        .map(|&(v0, b, t)| match trivariate_marginal(v0, b, t) {
            Ok(m) => (m - gaussian_kernel_unchecked(t, b - v0)).abs(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    GateReport {
        points: pts.len(),
        max_abs_error,
        tolerance: TRIVARIATE_GATE_TOL,
        passed: max_abs_error <= TRIVARIATE_GATE_TOL,
    }
}

/// Gate result, computed once per process.
pub fn trivariate_gate() -> &'static GateReport {
    static GATE: OnceLock<GateReport> = OnceLock::new();
    GATE.get_or_init(run_trivariate_gate)
}

/// Monte Carlo settings used when the quadrature route is unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallbackConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub bandwidth: Option<f64>,
}

impl Default for FallbackConfig {
    fn default() -> Self {
        FallbackConfig {
            n_paths: 100_000,
            dt: 1e-3,
            seed: 0x5eed,
            bandwidth: None,
        }
    }
}

/// Forced propagator on a grid. Falls back to the weighted-path estimator
/// when the marginalization gate fails (or when `force_fallback` is set);
/// `meta` records which route produced the curve.
pub fn propagator_forced_curve(
    v0: f64,
    t: f64,
    delta: f64,
    a: f64,
    grid: &[f64],
    fallback: &FallbackConfig,
    force_fallback: bool,
) -> Result<DensityCurve> {
    PropagatorQuery::new(v0, 0.0, t, delta, a)?;
    let gate = trivariate_gate();
    if force_fallback || !gate.passed {
        let req = GirsanovRequest {
            v0,
            t,
            delta,
            a,
            alpha: 0.0,
            n_paths: fallback.n_paths,
            dt: fallback.dt,
            seed: fallback.seed,
            bandwidth: fallback.bandwidth,
        };
        let est = girsanov_propagator_estimate(&req, grid)?;
        return Ok(est
            .curve
            .with_meta("kind", "propagator_forced")
            .with_meta("fallback_used", true)
            .with_meta("gate_max_abs_error", gate.max_abs_error)
            .with_meta("panels_used", 0)
            .with_meta("error_estimate", serde_json::Value::Null));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut panels = 0usize;
    let mut err = 0.0f64;
    for &v in grid {
        let e = propagator_forced(&PropagatorQuery { v0, v, t, delta, a })?;
        panels += e.panels_used;
        err = err.max(e.error_estimate);
        values.push(e.density.max(0.0));
    }
    Ok(DensityCurve::new(grid.to_vec(), values)?
        .with_meta("kind", "propagator_forced")
        .with_meta("v0", v0)
        .with_meta("t", t)
        .with_meta("delta", delta)
        .with_meta("a", a)
        .with_meta("fallback_used", false)
        .with_meta("panels_used", panels)
        .with_meta("error_estimate", err))
}

/// CDF of the forced propagator tabulated on `grid` (which should contain
/// 0, where the density has a kink), with no mass below `grid[0]`.
pub fn forced_cdf_table(v0: f64, t: f64, delta: f64, a: f64, grid: &[f64]) -> Result<CdfTable> {
    PropagatorQuery::new(v0, 0.0, t, delta, a)?;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let table = CdfTable::from_density(grid, |v| {
        match propagator_forced(&PropagatorQuery { v0, v, t, delta, a }) {
            Ok(e) => e.density,
            Err(err) => {
                failure.set(Some(err));
                0.0
            }
        }
    })?;
    match failure.take() {
        Some(err) => Err(err),
        None => Ok(table),
    }
}

/// `int p(v) dv` and `int v p(v) dv` of the forced propagator.
pub fn forced_mass_and_mean(v0: f64, t: f64, delta: f64, a: f64) -> Result<(f64, f64)> {
    let s = t.sqrt();
    let reach = 12.0 * s + (delta + a.abs()) * t + v0.abs() + 2.0;
    let mut breaks = vec![-reach, 0.0, v0 - 3.0 * s, v0, v0 + 3.0 * s, reach];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let failure: Cell<Option<Error>> = Cell::new(None);
    let dens = |v: f64| match propagator_forced(&PropagatorQuery { v0, v, t, delta, a }) {
        Ok(e) => e.density,
        Err(err) => {
            failure.set(Some(err));
            0.0
        }
    };
    let opts = QuadOptions::abs(1e-9);
    let mass = integrate_pieces(dens, &breaks, &opts);
    let first = integrate_pieces(|v| v * dens(v), &breaks, &opts);
    if let Some(err) = failure.take() {
        return Err(err);
    }
    if !mass.converged || !first.converged {
        return Err(Error::NonConvergence {
            context: "forced propagator moments",
            detail: format!("error estimates {:e}, {:e}", mass.error_estimate, first.error_estimate),
        });
    }
    Ok((mass.value, first.value / mass.value))
}

/// Difference between the forced propagator at `a = 0` and the closed form.
pub fn zero_force_reduction_gap(v0: f64, v: f64, t: f64, delta: f64) -> Result<f64> {
    let forced = propagator_forced(&PropagatorQuery::new(v0, v, t, delta, 0.0)?)?.density;
    Ok((forced - free_density(v, t, v0, delta)).abs())
}
