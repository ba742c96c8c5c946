//! Time-dependent transition densities in the unit-diffusion, `c = 1`
//! convention (use [`crate::model::scale_to_unit_diffusion`] first).

pub mod forced;
pub mod free;
pub mod kernels;

pub use forced::{
    forced_cdf_table, forced_mass_and_mean, propagator_forced, propagator_forced_curve, run_trivariate_gate,
    trivariate_gate, trivariate_gate_points, trivariate_marginal, FallbackConfig, ForcedEvaluation, GateReport,
};
pub use free::{
    chapman_kolmogorov_residual, detailed_balance_gap, free_moments, free_stationary_density, free_total_mass,
    propagator_free, speed_measure, PropagatorQuery,
};
pub use kernels::{atom_weight, h_kernel, joint_density_bl, trivariate_density, AtomWeight, JointDensityPoint};

use crate::analytic::DensityCurve;
use crate::error::Result;

/// Closed-form driftless propagator on a grid.
pub fn propagator_free_curve(v0: f64, t: f64, delta: f64, grid: &[f64]) -> Result<DensityCurve> {
    PropagatorQuery::new(v0, 0.0, t, delta, 0.0)?;
    Ok(DensityCurve::from_fn(grid, |v| free::free_density(v, t, v0, delta))?
        .with_meta("kind", "propagator_free")
        .with_meta("v0", v0)
        .with_meta("t", t)
        .with_meta("delta", delta))
}

/// CDF of the driftless propagator, by quadrature from `-inf`.
pub fn propagator_free_cdf(v0: f64, t: f64, delta: f64, v: f64) -> f64 {
    use crate::stats::{integrate, QuadOptions};
    let mut breaks: Vec<f64> = [0.0, v0].into_iter().filter(|&b| b < v).collect();
    breaks.sort_by(f64::total_cmp);
    let f = |u: f64| free::free_density(u, t, v0, delta);
    let opts = QuadOptions::abs(1e-12);
    let mut lo = f64::NEG_INFINITY;
    let mut total = 0.0;
    for b in breaks.into_iter().chain(std::iter::once(v)) {
        if b > lo {
            total += integrate(f, lo, b, &opts).value;
            lo = b;
        }
    }
    total
}
