//! Closed forms against frozen reference values. The constants were
//! computed once with 30-digit arithmetic (erfc, adaptive quadrature), not
//! with this crate, and are kept at full printed precision.

#![allow(clippy::excessive_precision)]

use dryfriction::analytic::{
    gaussian_cdf, gaussian_kernel, gaussian_tail, limit_pdf_stuck, stationary_normalizer, stationary_pdf,
};
use dryfriction::model::{reduce, DriftScale, ModelParams, ReducedParams};
use dryfriction::propagator::{
    atom_weight, h_kernel, joint_density_bl, propagator_forced, propagator_free, trivariate_density,
    trivariate_marginal, PropagatorQuery,
};
use dryfriction::simulate::{euler_maruyama_ensemble, girsanov_propagator_estimate, GirsanovRequest, SimConfig};
use dryfriction::stats::{integrate_pieces, QuadOptions};

const G_TAIL_1: f64 = 0.158655253931457051414767454368;
const GAMMA_1_2: f64 = 0.0539909665131880519505642004107;
const N_UNIT: f64 = 1.31135908483759694308774246146;
const FREE_AT_ORIGIN: f64 = 1.08331547058768629838306273857;

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

#[test]
fn special_functions() {
    assert!(rel(gaussian_tail(1.0), G_TAIL_1) < 1e-14);
    assert!(rel(gaussian_cdf(1.0), 0.841344746068542948585232545632) < 1e-15);
    assert!(rel(gaussian_kernel(1.0, 2.0).unwrap(), GAMMA_1_2) < 1e-14);
    assert!((gaussian_tail(-20.0) - 1.0).abs() <= 1e-15);
}

#[test]
fn stationary_normalizers() {
    let cases = [
        ((1.0, 1.0, 0.0), N_UNIT),
        ((0.01, 1.0, 0.5), 0.0000000965882691514821345914951321326),
        ((0.1, 2.0, -2.0), 0.0000276892450855467356954959690166),
        ((1.0, 0.5, 3.0), 0.113303112401506133500763253261),
    ];
    for ((nu, tau, y), n) in cases {
        let got = stationary_normalizer(&ReducedParams::new(nu, tau, y).unwrap()).unwrap();
        assert!(rel(got, n) < 1e-10, "({nu}, {tau}, {y}): {got} vs {n}");
    }
    let r = ReducedParams::new(1.0, 1.0, 0.0).unwrap();
    let c = stationary_pdf(&r, &[0.0, 1.0]).unwrap();
    assert!(rel(c.values[0], 0.762567638080490604544545268195) < 1e-12);
}

#[test]
fn stuck_law_value() {
    let c = limit_pdf_stuck(0.4, &[0.0, 1.0]).unwrap();
    assert!(rel(c.values[0], 0.42) < 1e-15);
    assert!(rel(c.values[1], 0.230500887159491106822100587658) < 1e-14);
}

#[test]
fn brownian_kernels() {
    assert!(rel(h_kernel(0.25, 1.0).unwrap(), 0.431927732105504415604513603286) < 1e-13);
    assert!(rel(h_kernel(1.0, 1.0).unwrap(), 0.241970724519143349797830192936) < 1e-13);
    assert!(
        rel(
            atom_weight(1.0, 1.0, 1.0).unwrap().weight,
            0.344951313888244625989381859524
        ) < 1e-13
    );
    assert!(
        rel(
            joint_density_bl(0.0, -0.5, 0.5, 1.0).unwrap(),
            0.388552786997675182842298673864
        ) < 1e-13
    );
    assert!(
        rel(
            trivariate_density(0.0, -1.0, 0.5, 0.3, 1.0).unwrap(),
            0.327833356316886807937763109526
        ) < 1e-12
    );
    assert!((trivariate_marginal(0.5, -0.4, 1.0).unwrap() - 0.266085249898754814730426219808).abs() < 1e-6);
}

#[test]
fn driftless_propagator_at_origin() {
    let q = PropagatorQuery::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
    assert!(rel(propagator_free(&q).unwrap(), FREE_AT_ORIGIN) < 1e-13);
    let forced = propagator_forced(&PropagatorQuery::new(0.0, 0.5, 1.0, 1.0, 0.0).unwrap()).unwrap();
    let free = propagator_free(&PropagatorQuery::new(0.0, 0.5, 1.0, 1.0, 0.0).unwrap()).unwrap();
    assert!((forced.density - free).abs() < 1e-6);
}

/// Window-average estimates of the terminal density at 0 with half-widths
/// `h` and `2h`, combined to cancel the linear bias of the cusp.
fn density_at_origin(samples: &[f64], h: f64) -> f64 {
    let n = samples.len() as f64;
    let count = |w: f64| samples.iter().filter(|x| x.abs() < w).count() as f64;
    let narrow = count(h) / (2.0 * h * n);
    let wide = count(2.0 * h) / (4.0 * h * n);
    2.0 * narrow - wide
}

#[test]
fn simulated_density_at_origin_matches_closed_form() {
    let cfg = SimConfig {
        params: ModelParams::new(0.0, 0.0, 1.0, 1.0, DriftScale::Unit).unwrap(),
        v0: 0.0,
        t_final: 1.0,
        dt: 1e-3,
        n_paths: 200_000,
        seed: 17,
        record_functionals: false,
    };
    let ens = euler_maruyama_ensemble(&cfg).unwrap();
    let p = density_at_origin(&ens.terminal, 0.05);
    assert!(rel(p, FREE_AT_ORIGIN) < 0.02, "{p}");
}

#[test]
fn weighted_paths_at_origin() {
    let req = GirsanovRequest {
        v0: 0.0,
        t: 1.0,
        delta: 1.0,
        a: 0.0,
        alpha: 0.0,
        n_paths: 100_000,
        dt: 1e-4,
        seed: 29,
        bandwidth: Some(0.05),
    };
    let est = girsanov_propagator_estimate(&req, &[0.0]).unwrap();
    assert!(
        rel(est.curve.values[0], FREE_AT_ORIGIN) < 0.10,
        "{}",
        est.curve.values[0]
    );
    assert!(!est.degenerate);
}

/// Unit drift scale: the stationary density of the SDE, normalized by
/// quadrature, is the reduced-coordinate density.
#[test]
fn unit_drift_scale_reduction() {
    let (alpha, a, delta, d) = (1.0, 1.0, 1.0, 0.02);
    let p = ModelParams::new(alpha, a, delta, d, DriftScale::Unit).unwrap();
    let r = reduce(&p).unwrap();
    assert!(rel(r.nu, 0.01) < 1e-15);
    assert_eq!((r.tau, r.y, r.w), (Some(1.0), Some(1.0), 1.0));
    // log of the unnormalized density relative to its value at the mode v = 0
    let log_f = |v: f64| -(2.0 / d) * (0.5 * alpha * v * v - a * v + delta * v.abs());
    let z = integrate_pieces(|v| log_f(v).exp(), &[-3.0, 0.0, 3.0], &QuadOptions::rel(1e-14)).value;
    let grid: Vec<f64> = (-200..=400).map(|i| i as f64 * 0.005).collect();
    let curve = stationary_pdf(&r, &grid).unwrap();
    for (&v, &got) in grid.iter().zip(&curve.values) {
        assert!((got - log_f(v).exp() / z).abs() <= 1e-10, "v={v}");
    }
}
