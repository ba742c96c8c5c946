//! Numerical plumbing shared by the analytic, propagator and simulation
//! code: quadrature, empirical CDFs, KS distances, KDE and chi-square.

pub mod cdf;
pub mod chi2;
pub mod ecdf;
pub mod kde;
pub mod quadrature;

pub use cdf::CdfTable;
pub use chi2::{chi_square_test, ChiSquareTest};
pub use ecdf::{ks_between_cdfs, ks_critical, ks_critical_two_sample, ks_distance, ks_two_sample, Ecdf};
pub use kde::{kernel_density, silverman_bandwidth, KernelSum};
pub use quadrature::{integrate, integrate_adaptive, integrate_pieces, QuadOptions, QuadratureResult};

/// Pairwise summation over fixed blocks; the result depends only on the
/// order of `xs`, never on how it was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 256;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}
