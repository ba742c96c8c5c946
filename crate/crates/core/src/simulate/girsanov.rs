//! Weighted Brownian paths as an estimator of the transition density of
//!
//! ```text
//! dv = -(alpha v - a + delta sgn v) dt + dB
//! ```
//!
//! Writing the drift as `mu(x) = -alpha x + a - delta sgn x`, the weight is
//! `exp(int mu dB - 1/2 int mu^2 ds)`. The stochastic integrals are removed
//! with `int sgn(B) dB = |B_t| - |v0| - 2 L_t` and
//! `int B dB = (B_t^2 - v0^2 - t) / 2`, which leaves only the recorded
//! functionals.

use serde::{Deserialize, Serialize};

use super::ensemble::{brownian_ensemble_with_functionals, BrownianFunctionals};
use crate::analytic::DensityCurve;
use crate::error::{Error, Result};
use crate::stats::{pairwise_sum, silverman_bandwidth, KernelSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirsanovWeight {
    pub log_weight: f64,
}

/// Log weight of one driftless path; `a` is the canonical force.
pub fn girsanov_log_weight(f: &BrownianFunctionals, v0: f64, t: f64, delta: f64, a: f64, alpha: f64) -> GirsanovWeight {
    let b = f.b_t;
    let log_weight = delta * (v0.abs() - b.abs()) + 2.0 * delta * f.l_t + a * (b - v0)
        - 0.5 * (delta * delta + a * a) * t
        - a * delta * t
        + 2.0 * a * delta * f.occupation
        + 0.5 * alpha * t
        - 0.5 * alpha * (b * b - v0 * v0)
        - 0.5 * alpha * alpha * f.int_b2
        - alpha * delta * f.int_abs_b
        + alpha * a * f.int_b;
    GirsanovWeight { log_weight }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirsanovRequest {
    pub v0: f64,
    pub t: f64,
    pub delta: f64,
    pub a: f64,
    pub alpha: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Kernel bandwidth; Silverman's rule on the unweighted terminal sample
    /// when absent.
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirsanovEstimate {
    pub curve: DensityCurve,
    pub ess: f64,
    pub bandwidth: f64,
    /// `ess < 0.01 n_paths`.
    pub degenerate: bool,
}

/// `sum_i w_i K_h(b_i - v) / n` on `grid`.
pub fn girsanov_propagator_estimate(req: &GirsanovRequest, grid: &[f64]) -> Result<GirsanovEstimate> {
    if !(req.delta > 0.0) || !req.delta.is_finite() {
        return Err(Error::invalid(
            "delta",
            format!("must be finite and > 0, got {}", req.delta),
        ));
    }
    if !(req.alpha >= 0.0) || !req.alpha.is_finite() {
        return Err(Error::invalid(
            "alpha",
            format!("must be finite and >= 0, got {}", req.alpha),
        ));
    }
    if !req.a.is_finite() {
        return Err(Error::invalid("a", "must be finite"));
    }
    if let Some(h) = req.bandwidth {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid("bandwidth", format!("must be finite and > 0, got {h}")));
        }
    }
    let ens = brownian_ensemble_with_functionals(req.v0, req.t, req.dt, req.n_paths, req.seed)?;
    let fs = ens.functionals.as_deref().unwrap_or_default();
    let weights: Vec<f64> = fs
        .iter()
        .map(|f| {
            girsanov_log_weight(f, req.v0, req.t, req.delta, req.a, req.alpha)
                .log_weight
                .exp()
        })
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonConvergence {
            context: "path weights",
            detail: "a weight overflowed; shorten t".into(),
        });
    }
    let sum_w = pairwise_sum(&weights);
    let sq: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let sum_w2 = pairwise_sum(&sq);
    let ess = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
    let bandwidth = match req.bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(&ens.terminal)?,
    };
    let kernel = KernelSum::new(&ens.terminal, Some(&weights), bandwidth)?;
    let n = req.n_paths as f64;
    let degenerate = ess < 0.01 * n;
    let mut curve = DensityCurve::from_fn(grid, |v| kernel.eval(v) / n)?
        .with_meta("kind", "propagator_girsanov")
        .with_meta("v0", req.v0)
        .with_meta("t", req.t)
        .with_meta("delta", req.delta)
        .with_meta("a", req.a)
        .with_meta("alpha", req.alpha)
        .with_meta("n_paths", req.n_paths)
        .with_meta("dt", req.dt)
        .with_meta("seed", req.seed)
        .with_meta("bandwidth", bandwidth)
        .with_meta("ess", ess)
        .with_meta("mean_weight", sum_w / n);
    if degenerate {
        curve = curve.with_meta(
            "warning",
            format!(
                "weight degeneracy: ESS {ess:.1} < 1% of {} paths; use a shorter t or more paths",
                req.n_paths
            ),
        );
    }
    Ok(GirsanovEstimate {
        curve,
        ess,
        bandwidth,
        degenerate,
    })
}
