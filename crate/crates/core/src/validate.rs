//! Numerical gates: every closed form against an independent oracle
//! (quadrature, simulation or a second closed form), with fixed tolerances.
//!
//! `Level::Fast` runs every gate except the million-path joint-density
//! chi-square and the other heavy simulation invariants, which
//! `Level::Full` adds.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    gaussian_kernel, linspace, normalizer_residual, potential_minimizer, resolved_grid, stationary_cdf,
    stationary_positive_mass, stuck_limit_cdf, viscous_limit_cdf, Potential,
};
use crate::error::Result;
use crate::model::{DriftScale, ModelParams, ReducedParams};
use crate::propagator::free::free_density;
use crate::propagator::{
    chapman_kolmogorov_residual, detailed_balance_gap, forced_cdf_table, forced_mass_and_mean, free_total_mass,
    propagator_forced, propagator_forced_curve, speed_measure, trivariate_gate, FallbackConfig, PropagatorQuery,
};
use crate::simulate::{
    brownian_ensemble_with_functionals, euler_maruyama_coupled, euler_maruyama_ensemble, girsanov_propagator_estimate,
    local_time_estimators, GirsanovRequest, SimConfig,
};
use crate::stats::{
    chi_square_test, integrate_pieces, ks_distance, ks_two_sample, pairwise_sum, CdfTable, Ecdf, QuadOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

/// One measured quantity against its gate. Informational checks are
/// reported but do not affect the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Non-finite values are written as JSON `null` and read back as NaN.
    #[serde(deserialize_with = "nullable_f64")]
    pub measured: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub threshold: f64,
    /// `"<="`, `">="` or `"=="`.
    pub comparison: String,
    pub passed: bool,
    #[serde(default)]
    pub informational: bool,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            threshold,
            comparison: "<=".into(),
            passed: measured <= threshold,
            informational: false,
        }
    }

    fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            threshold,
            comparison: ">=".into(),
            passed: measured >= threshold,
            informational: false,
        }
    }

    /// A yes/no property encoded as 1 (holds) or 0.
    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            measured: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            comparison: "==".into(),
            passed: ok,
            informational: false,
        }
    }

    fn info(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub skipped: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GateResult {
    /// One line for terminal output.
    pub fn summary_line(&self) -> String {
        let verdict = if self.skipped {
            "SKIP"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let worst = self
            .checks
            .iter()
            .filter(|c| !c.informational)
            .find(|c| !c.passed)
            .or_else(|| self.checks.iter().find(|c| !c.informational));
        let detail = match (&self.error, worst) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(c)) => format!(
                "{} = {:.6e} (gate {} {:.3e})",
                c.name, c.measured, c.comparison, c.threshold
            ),
            (None, None) => String::new(),
        };
        format!("{verdict} {} {} [{:.1}s] {detail}", self.id, self.title, self.seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub gates: Vec<GateResult>,
}

fn gate(id: &str, title: &str, body: impl FnOnce() -> Result<Vec<Check>>) -> GateResult {
    let start = Instant::now();
    let outcome = body();
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(checks) => GateResult {
            id: id.into(),
            title: title.into(),
            passed: checks.iter().all(|c| c.passed || c.informational),
            skipped: false,
            seconds,
            checks,
            error: None,
        },
        Err(e) => GateResult {
            id: id.into(),
            title: title.into(),
            passed: false,
            skipped: false,
            seconds,
            checks: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

fn skipped(id: &str, title: &str) -> GateResult {
    GateResult {
        id: id.into(),
        title: title.into(),
        passed: true,
        skipped: true,
        seconds: 0.0,
        checks: Vec::new(),
        error: None,
    }
}

fn runtime_check(start: Instant, budget: f64) -> Check {
    Check::at_most("runtime_seconds", start.elapsed().as_secs_f64(), budget)
}

/// Non-increasing up to `slack`.
fn non_increasing(xs: &[f64], slack: f64) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + slack)
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// Per-gate seed so gates do not share random streams.
fn sub_seed(seed: u64, gate: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(gate)
}

pub const NU_LADDER: [f64; 3] = [0.1, 0.01, 0.001];

/// The `(nu, tau, y)` lattice of the normalizer gate.
pub fn normalizer_lattice() -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::with_capacity(45);
    for &nu in &[1.0, 0.1, 0.01] {
        for &tau in &[0.5, 1.0, 2.0] {
            for &y in &[-2.0, 0.0, 0.5, 1.0, 3.0] {
                pts.push((nu, tau, y));
            }
        }
    }
    pts
}

pub fn criterion_normalizer() -> GateResult {
    gate("C1", "partition function vs quadrature", || {
        let start = Instant::now();
        let mut worst = 0.0f64;
        for (nu, tau, y) in normalizer_lattice() {
            let c = normalizer_residual(&ReducedParams::new(nu, tau, y)?)?;
            worst = worst.max(c.relative_error);
        }
        Ok(vec![
            Check::at_most("max_relative_error_45_points", worst, 1e-8),
            runtime_check(start, 5.0),
        ])
    })
}

/// `sup_u |P(v / nu <= u) - F_stuck(u)|` on a fine grid of `u`.
pub fn stuck_ks(nu: f64, tau: f64, y: f64) -> Result<f64> {
    let r = ReducedParams::new(nu, tau, y)?;
    let w = y / tau;
    let grid = resolved_grid(-60.0 / (1.0 + w), 60.0 / (1.0 - w), 0.25 / (1.0 + w.abs()));
    let mut d = 0.0f64;
    for &u in &grid {
        d = d.max((stationary_cdf(&r, nu * u)? - stuck_limit_cdf(w, u)?).abs());
    }
    Ok(d)
}

pub fn criterion_stuck() -> GateResult {
    gate("C2", "stuck-regime convergence", || {
        let start = Instant::now();
        let mut checks = Vec::new();
        for &(tau, y) in &[(1.0, 0.0), (1.0, 0.4), (1.0, 0.9)] {
            let ks = NU_LADDER
                .iter()
                .map(|&nu| stuck_ks(nu, tau, y))
                .collect::<Result<Vec<_>>>()?;
            for (nu, d) in NU_LADDER.iter().zip(&ks) {
                checks.push(Check::at_most(format!("ks_tau{tau}_y{y}_nu{nu}"), *d, f64::INFINITY).info());
            }
            checks.push(Check::holds(
                format!("ks_decreasing_tau{tau}_y{y}"),
                ks.windows(2).all(|w| w[1] < w[0]),
            ));
            checks.push(Check::at_most(format!("ks_at_nu0.001_tau{tau}_y{y}"), ks[2], 0.02));
        }
        checks.push(runtime_check(start, 10.0));
        Ok(checks)
    })
}

pub fn criterion_partly_stuck() -> GateResult {
    gate("C3", "partly-stuck mass", || {
        let mut checks = Vec::new();
        for &y in &[1.0, -1.0] {
            let masses = NU_LADDER
                .iter()
                .map(|&nu| {
                    let r = ReducedParams::new(nu, 1.0, y)?;
                    let pos = stationary_positive_mass(&r)?;
                    Ok(if y > 0.0 { pos } else { 1.0 - pos })
                })
                .collect::<Result<Vec<_>>>()?;
            for (nu, m) in NU_LADDER.iter().zip(&masses) {
                checks.push(Check::at_least(format!("driven_mass_y{y}_nu{nu}"), *m, 0.0).info());
            }
            checks.push(Check::holds(
                format!("mass_increases_as_nu_shrinks_y{y}"),
                masses.windows(2).all(|w| w[1] > w[0]),
            ));
            checks.push(Check::at_least(format!("driven_mass_at_nu0.001_y{y}"), masses[2], 0.95));
        }
        Ok(checks)
    })
}

/// `sup_z |P((v - m) / sqrt(nu) <= z) - Phi(z / sqrt(tau))|` with `m` the
/// potential minimizer.
pub fn viscous_ks(nu: f64, tau: f64, y: f64) -> Result<f64> {
    let r = ReducedParams::new(nu, tau, y)?;
    let m = potential_minimizer(&Potential::new(tau, y)?);
    let s = tau.sqrt();
    let mut d = 0.0f64;
    for z in linspace(-12.0 * s, 12.0 * s, 24_001) {
        d = d.max((stationary_cdf(&r, m + nu.sqrt() * z)? - viscous_limit_cdf(tau, z)?).abs());
    }
    Ok(d)
}

pub fn criterion_viscous() -> GateResult {
    gate("C4", "viscous regime", || {
        let (tau, y) = (1.0, 3.0);
        let ks = NU_LADDER
            .iter()
            .map(|&nu| viscous_ks(nu, tau, y))
            .collect::<Result<Vec<_>>>()?;
        let mean = potential_minimizer(&Potential::new(tau, y)?);
        let mut checks: Vec<Check> = NU_LADDER
            .iter()
            .zip(&ks)
            .map(|(nu, d)| Check::at_most(format!("ks_nu{nu}"), *d, f64::INFINITY).info())
            .collect();
        // already at roundoff for these parameters, so the trend is only reported
        checks.push(Check::holds("ks_non_increasing", non_increasing(&ks, 1e-14)).info());
        checks.push(Check::at_most("ks_at_nu0.001", ks[2], 0.02));
        checks.push(Check::at_most("annotated_mean_minus_2", (mean - 2.0).abs(), 0.0));
        Ok(checks)
    })
}

pub fn criterion_free_propagator(seed: u64) -> GateResult {
    gate("C5", "driftless propagator identities", || {
        let start = Instant::now();
        let mut norm = 0.0f64;
        for &v0 in &[-1.0, 0.0, 0.7] {
            for &t in &[0.1, 1.0, 10.0] {
                for &delta in &[0.5, 1.0, 2.0] {
                    let m = free_total_mass(v0, t, delta, 1e-12);
                    norm = norm.max((m.value - 1.0).abs());
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 5));
        let mut balance = 0.0f64;
        for _ in 0..100 {
            let v0 = rng.random_range(-3.0..3.0);
            let v = rng.random_range(-3.0..3.0);
            let t = rng.random_range(0.05..10.0);
            let delta = rng.random_range(0.2..3.0);
            let scale = speed_measure(v0, delta) * free_density(v, t, v0, delta);
            balance = balance.max(detailed_balance_gap(v0, v, t, delta).abs() / scale);
        }
        let mut ck_queries = vec![(0.0, 0.2, 0.5, 0.5, 1.0), (1.0, -1.0, 0.25, 0.75, 2.0)];
        while ck_queries.len() < 10 {
            ck_queries.push((
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.5..2.0),
            ));
        }
        let mut ck = 0.0f64;
        for (v0, v, s, t, delta) in ck_queries {
            ck = ck.max(chapman_kolmogorov_residual(v0, v, s, t, delta)?);
        }
        let long = max_of(
            linspace(-3.0, 3.0, 601)
                .into_iter()
                .map(|v| (free_density(v, 200.0, 0.3, 1.0) - (-2.0 * v.abs()).exp()).abs()),
        );
        Ok(vec![
            Check::at_most("normalization_max_abs_error_27_points", norm, 1e-8),
            Check::at_most("detailed_balance_max_relative_gap_100_queries", balance, 1e-12),
            Check::at_most("chapman_kolmogorov_max_residual_10_queries", ck, 1e-4),
            Check::at_most("t200_sup_distance_to_speed_measure", long, 1e-4),
            runtime_check(start, 30.0),
        ])
    })
}

/// CDF of the driftless propagator on `[-10, 10]` (step 1e-3).
pub fn free_cdf_table(v0: f64, t: f64, delta: f64) -> Result<CdfTable> {
    PropagatorQuery::new(v0, 0.0, t, delta, 0.0)?;
    let lo = v0.min(0.0) - 10.0 - 10.0 * t.sqrt();
    let hi = v0.max(0.0) + 10.0 + 10.0 * t.sqrt();
    let n = ((hi - lo) / 1e-3).ceil() as usize + 1;
    CdfTable::from_density(&linspace(lo, hi, n), |v| free_density(v, t, v0, delta))
}

fn unit_params(alpha: f64, a: f64, delta: f64, diffusion: f64) -> Result<ModelParams> {
    ModelParams::new(alpha, a, delta, diffusion, DriftScale::Unit)
}

/// KS between an Euler–Maruyama ensemble of the driftless problem and the
/// closed-form CDF.
pub fn em_vs_closed_form_ks(n_paths: usize, dt: f64, seed: u64) -> Result<f64> {
    let table = free_cdf_table(0.0, 1.0, 1.0)?;
    let cfg = SimConfig {
        params: unit_params(0.0, 0.0, 1.0, 1.0)?,
        v0: 0.0,
        t_final: 1.0,
        dt,
        n_paths,
        seed,
        record_functionals: false,
    };
    let ens = euler_maruyama_ensemble(&cfg)?;
    Ok(ks_distance(&Ecdf::new(ens.terminal)?, |x| table.eval(x)))
}

pub fn criterion_em_vs_closed_form(seed: u64) -> GateResult {
    gate("C6", "simulator vs closed form", || {
        let start = Instant::now();
        let ks = em_vs_closed_form_ks(200_000, 1e-3, sub_seed(seed, 6))?;
        Ok(vec![Check::at_most("ks", ks, 0.01), runtime_check(start, 20.0)])
    })
}

pub fn criterion_forced(seed: u64) -> GateResult {
    gate("C7", "forced propagator", || {
        let mut reduction = 0.0f64;
        for &(v0, v) in &[
            (0.0, 0.5),
            (0.0, -0.5),
            (0.7, 0.0),
            (-0.4, 1.1),
            (1.0, 1.2),
            (0.3, -2.0),
        ] {
            let q = propagator_forced(&PropagatorQuery::new(v0, v, 1.0, 1.0, 0.0)?)?.density;
            reduction = reduction.max((q - free_density(v, 1.0, v0, 1.0)).abs());
        }
        let (mass, _) = forced_mass_and_mean(0.0, 1.0, 1.0, 0.5)?;
        let means = [-0.5, 0.0, 0.5]
            .iter()
            .map(|&a| Ok(forced_mass_and_mean(0.3, 1.0, 1.0, a)?.1))
            .collect::<Result<Vec<_>>>()?;
        let table = forced_cdf_table(0.0, 1.0, 1.0, 0.5, &linspace(-7.0, 8.0, 1501))?;
        let cfg = SimConfig {
            params: unit_params(0.0, 0.5, 1.0, 1.0)?,
            v0: 0.0,
            t_final: 1.0,
            dt: 1e-3,
            n_paths: 100_000,
            seed: sub_seed(seed, 7),
            record_functionals: false,
        };
        let ens = euler_maruyama_ensemble(&cfg)?;
        let ks = ks_distance(&Ecdf::new(ens.terminal)?, |x| table.eval(x));
        Ok(vec![
            Check::at_most("zero_force_reduction_max_abs_gap", reduction, 1e-6),
            Check::at_most("normalization_abs_error", (mass - 1.0).abs(), 1e-5),
            Check::holds("mean_strictly_increasing_in_a", means.windows(2).all(|w| w[1] > w[0])),
            Check::at_most("ks_vs_euler_maruyama", ks, 0.02),
        ])
    })
}

/// Max relative error of the weighted-path estimate of the driftless
/// propagator at five points.
pub fn girsanov_driftless_error(seed: u64) -> Result<f64> {
    let points = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let req = GirsanovRequest {
        v0: 0.0,
        t: 1.0,
        delta: 1.0,
        a: 0.0,
        alpha: 0.0,
        n_paths: 100_000,
        dt: 1e-4,
        seed,
        bandwidth: Some(0.05),
    };
    let est = girsanov_propagator_estimate(&req, &points)?;
    Ok(max_of(
        points
            .iter()
            .zip(&est.curve.values)
            .map(|(&v, &p)| (p / free_density(v, 1.0, 0.0, 1.0) - 1.0).abs()),
    ))
}

/// KS between the normalized weighted-path curve with `alpha = 1`,
/// `delta = 1`, `a = 0` and the stationary law with matching reduced
/// parameters (`nu = 1/2`, `tau = 1`, `y = 0` for unit drift scale).
pub fn girsanov_long_time_ks(t: f64, n_paths: usize, dt: f64, seed: u64) -> Result<(f64, f64)> {
    let grid = linspace(-5.0, 5.0, 1001);
    let req = GirsanovRequest {
        v0: 0.0,
        t,
        delta: 1.0,
        a: 0.0,
        alpha: 1.0,
        n_paths,
        dt,
        seed,
        bandwidth: None,
    };
    let est = girsanov_propagator_estimate(&req, &grid)?;
    let r = crate::model::reduce(&unit_params(1.0, 0.0, 1.0, 1.0)?)?;
    let cdf = est.curve.normalized_cdf();
    let mut d = 0.0f64;
    for (&x, c) in grid.iter().zip(&cdf) {
        d = d.max((c - stationary_cdf(&r, x)?).abs());
    }
    Ok((d, est.ess))
}

pub fn criterion_girsanov(seed: u64) -> GateResult {
    gate("C8", "weighted-path estimator", || {
        let rel = girsanov_driftless_error(sub_seed(seed, 8))?;
        let (ks10, ess10) = girsanov_long_time_ks(10.0, 100_000, 1e-2, sub_seed(seed, 81))?;
        let (ks3, ess3) = girsanov_long_time_ks(3.0, 200_000, 1e-2, sub_seed(seed, 82))?;
        Ok(vec![
            Check::at_most("driftless_max_relative_error_5_points", rel, 0.10),
            Check::at_most("alpha1_t10_ks_vs_stationary", ks10, 0.05),
            Check::at_least("alpha1_t10_effective_sample_size", ess10, 0.0).info(),
            Check::at_most("alpha1_t3_ks_vs_stationary", ks3, 0.05).info(),
            Check::at_least("alpha1_t3_effective_sample_size", ess3, 0.0).info(),
        ])
    })
}

/// Expected counts of `(B_1, L_1)` from 0 on a rectangular grid; the last
/// `l` bin and both outer `b` bins are open.
fn joint_expected_counts(b_edges: &[f64], l_edges: &[f64], n: f64) -> Vec<f64> {
    // int_{l1}^{l2} 2 h(1, 2l + |b|) dl = gamma_1(2 l1 + |b|) - gamma_1(2 l2 + |b|)
    let g = |x: f64| gaussian_kernel(1.0, x).unwrap_or(0.0);
    let (nb, nl) = (b_edges.len() + 1, l_edges.len());
    let mut out = vec![0.0; nb * nl];
    for ib in 0..nb {
        let lo = if ib == 0 { f64::NEG_INFINITY } else { b_edges[ib - 1] };
        let hi = if ib == nb - 1 { f64::INFINITY } else { b_edges[ib] };
        let breaks: Vec<f64> = if lo < 0.0 && hi > 0.0 {
            vec![lo, 0.0, hi]
        } else {
            vec![lo, hi]
        };
        for il in 0..nl {
            let l1 = l_edges[il];
            let l2 = l_edges.get(il + 1).copied();
            let f = |b: f64| g(2.0 * l1 + b.abs()) - l2.map_or(0.0, |l2| g(2.0 * l2 + b.abs()));
            out[ib * nl + il] = n * integrate_pieces(f, &breaks, &QuadOptions::abs(1e-13)).value;
        }
    }
    out
}

/// Chi-square p-value of simulated `(B_1, L_1)` against the joint density.
pub fn joint_density_chi_square(n_paths: usize, dt: f64, seed: u64) -> Result<crate::stats::ChiSquareTest> {
    let ens = brownian_ensemble_with_functionals(0.0, 1.0, dt, n_paths, seed)?;
    let b_edges = linspace(-2.5, 2.5, 19);
    let l_edges = linspace(0.0, 1.5, 20);
    let (nb, nl) = (b_edges.len() + 1, l_edges.len());
    let mut observed = vec![0.0; nb * nl];
    for f in ens.functionals.as_deref().unwrap_or_default() {
        let ib = b_edges.partition_point(|&x| x <= f.b_t);
        let il = l_edges.partition_point(|&x| x <= f.l_t).saturating_sub(1);
        observed[ib * nl + il] += 1.0;
    }
    let expected = joint_expected_counts(&b_edges, &l_edges, n_paths as f64);
    chi_square_test(&observed, &expected, 5.0)
}

pub fn criterion_joint_densities(level: Level, seed: u64) -> GateResult {
    gate("C9", "joint-density gates", || {
        let report = trivariate_gate();
        let mut checks = vec![Check::at_most(
            "trivariate_marginal_max_abs_error_20_points",
            report.max_abs_error,
            1e-6,
        )];
        if !report.passed {
            let curve = propagator_forced_curve(
                0.0,
                1.0,
                1.0,
                0.5,
                &[0.0],
                &FallbackConfig {
                    n_paths: 2_000,
                    ..Default::default()
                },
                false,
            )?;
            let reported = curve.meta.get("fallback_used").and_then(|v| v.as_bool()) == Some(true);
            // the criterion accepts a reported fallback in place of the gate
            checks[0].informational = true;
            checks.push(Check::holds("fallback_activated_and_reported", reported));
        }
        match level {
            // the million-path chi-square runs at the full level only
            Level::Fast => {}
            Level::Full => {
                let start = Instant::now();
                let chi = joint_density_chi_square(1_000_000, 1e-3, sub_seed(seed, 9))?;
                checks.push(Check::at_least(
                    "joint_chi_square_p_value_1e6_paths",
                    chi.p_value,
                    0.001,
                ));
                checks.push(runtime_check(start, 120.0));
            }
        }
        Ok(checks)
    })
}

pub fn scaling_ks(seed: u64) -> Result<f64> {
    let make = |alpha, a, delta, diffusion, t, dt, seed| -> Result<SimConfig> {
        Ok(SimConfig {
            params: unit_params(alpha, a, delta, diffusion)?,
            v0: 0.0,
            t_final: t,
            dt,
            n_paths: 100_000,
            seed,
            record_functionals: false,
        })
    };
    let slow = euler_maruyama_ensemble(&make(1.0, 0.5, 1.0, 0.5, 2.0, 2e-3, sub_seed(seed, 10))?)?;
    let fast = euler_maruyama_ensemble(&make(2.0, 1.0, 2.0, 1.0, 1.0, 1e-3, sub_seed(seed, 11))?)?;
    Ok(ks_two_sample(&Ecdf::new(slow.terminal)?, &Ecdf::new(fast.terminal)?))
}

pub fn criterion_scaling(seed: u64) -> GateResult {
    gate("C10", "time-rescaling relation", || {
        Ok(vec![Check::at_most("two_sample_ks", scaling_ks(seed)?, 0.015)])
    })
}

pub fn criterion_reproducibility(seed: u64) -> GateResult {
    gate("C11", "bit-reproducible simulation", || {
        let args = crate::cli::SimulateArgs {
            alpha: 0.5,
            a: 0.2,
            delta: 1.0,
            diffusion: 1.0,
            drift_scale: 1.0,
            v0: 0.1,
            t: 1.0,
            dt: 1e-2,
            n_paths: 1000,
            record_functionals: true,
            out: std::path::PathBuf::from("."),
        };
        let seed = sub_seed(seed, 11);
        let first = crate::cli::simulate_outputs(&args, seed)?;
        // round-trip the parameters through the manifest encoding
        let manifest = crate::cli::RunManifest::new("simulate", &args, seed, Vec::new());
        let replayed: crate::cli::SimulateArgs =
            serde_json::from_value(manifest.parameters.clone()).map_err(|e| crate::Error::Parse {
                what: "manifest parameters",
                detail: e.to_string(),
            })?;
        let mut differing = 0usize;
        for threads in [1, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool");
            let again = pool.install(|| crate::cli::simulate_outputs(&replayed, manifest.seed))?;
            differing += first.iter().zip(&again).filter(|(x, y)| x != y).count();
            differing += first.len().abs_diff(again.len());
        }
        Ok(vec![Check::at_most(
            "differing_files_across_thread_counts",
            differing as f64,
            0.0,
        )])
    })
}

pub fn criterion_figure1() -> GateResult {
    gate("C12", "figure data", || {
        let fig = crate::cli::figure1_curves()?;
        let at0 = |name: &str| -> f64 {
            fig.iter()
                .find(|(n, _)| n == name)
                .map_or(f64::NAN, |(_, c)| c.value_at(0.0))
        };
        let mean = fig
            .iter()
            .find(|(n, _)| n == crate::cli::FIGURE1_VISCOUS)
            .and_then(|(_, c)| c.meta.get("asymptotic_mean"))
            .and_then(|v| v.as_f64())
            .unwrap_or(f64::NAN);
        let err = |x: f64, e: f64| if x.is_nan() { f64::INFINITY } else { (x - e).abs() };
        Ok(vec![
            Check::at_most(
                "stuck_w0_at_0_minus_0.5",
                err(at0(crate::cli::FIGURE1_STUCK[0]), 0.5),
                1e-12,
            ),
            Check::at_most(
                "stuck_w0.4_at_0_minus_0.42",
                err(at0(crate::cli::FIGURE1_STUCK[1]), 0.42),
                1e-12,
            ),
            Check::at_most(
                "stuck_w0.9_at_0_minus_0.095",
                err(at0(crate::cli::FIGURE1_STUCK[2]), 0.095),
                1e-12,
            ),
            Check::at_most(
                "half_exponential_height_minus_2",
                err(at0(crate::cli::FIGURE1_PARTLY), 2.0),
                1e-12,
            ),
            Check::at_most("viscous_mean_minus_2", err(mean, 2.0), 1e-12),
            Check::holds("five_curves", fig.len() == 5),
        ])
    })
}

/// Simulation invariants that are too slow for the fast level.
pub fn simulation_invariants(seed: u64) -> GateResult {
    gate("S1", "simulation invariants", || {
        let n = 100_000;
        let pairs = local_time_estimators(0.0, 1.0, 1e-4, n, sub_seed(seed, 13))?;
        let tanaka: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let band: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (mean_l, se_l) = mean_and_se(&tanaka);
        let exact = 0.5 * (2.0 / std::f64::consts::PI).sqrt();
        let occ = brownian_ensemble_with_functionals(0.0, 1.0, 1e-3, n, sub_seed(seed, 14))?;
        let fractions: Vec<f64> = occ
            .functionals
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|f| f.occupation)
            .collect();
        let (mean_occ, se_occ) = mean_and_se(&fractions);
        let weak = weak_order_ladder(400_000, sub_seed(seed, 15))?;
        let mut checks = vec![
            Check::at_most(
                "local_time_mean_error_in_standard_errors",
                (mean_l - exact).abs() / se_l,
                3.0,
            ),
            Check::at_most("band_local_time_mean", pairwise_sum(&band) / n as f64, f64::INFINITY).info(),
            Check::at_most(
                "occupation_fraction_error_in_standard_errors",
                (mean_occ - 0.5).abs() / se_occ,
                3.0,
            ),
        ];
        for (dt, ks) in [4e-3, 1e-3, 2.5e-4].iter().zip(&weak) {
            checks.push(Check::at_most(format!("em_ks_dt{dt}"), *ks, f64::INFINITY).info());
        }
        checks.push(Check::holds(
            "em_ks_decreases_with_dt",
            weak.windows(2).all(|w| w[1] < w[0]),
        ));
        Ok(checks)
    })
}

/// KS to the closed form at `dt` = 4e-3, 1e-3, 2.5e-4, all three levels
/// driven by the same Brownian increments.
pub fn weak_order_ladder(n_paths: usize, seed: u64) -> Result<Vec<f64>> {
    let table = free_cdf_table(0.0, 1.0, 1.0)?;
    let cfg = SimConfig {
        params: unit_params(0.0, 0.0, 1.0, 1.0)?,
        v0: 0.0,
        t_final: 1.0,
        dt: 2.5e-4,
        n_paths,
        seed,
        record_functionals: false,
    };
    euler_maruyama_coupled(&cfg, &[16, 4, 1])?
        .into_iter()
        .map(|sample| Ok(ks_distance(&Ecdf::new(sample)?, |x| table.eval(x))))
        .collect()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1.0) / n).sqrt())
}

pub fn run_validation(level: Level, seed: u64) -> ValidationReport {
    let mut gates = vec![
        criterion_normalizer(),
        criterion_stuck(),
        criterion_partly_stuck(),
        criterion_viscous(),
        criterion_free_propagator(seed),
        criterion_em_vs_closed_form(seed),
        criterion_forced(seed),
        criterion_girsanov(seed),
        criterion_joint_densities(level, seed),
        criterion_scaling(seed),
        criterion_reproducibility(seed),
        criterion_figure1(),
    ];
    gates.push(match level {
        Level::Fast => skipped("S1", "simulation invariants"),
        Level::Full => simulation_invariants(seed),
    });
    ValidationReport {
        level,
        seed,
        passed: gates.iter().all(|g| g.passed),
        gates,
    }
}
