//! Langevin dynamics with Coulombic (dry) friction.
//!
//! ```text
//! dv = -c [ alpha v - a + delta sgn(v) ] dt + sqrt(D) dB
//! ```
//!
//! * [`model`]: parameters, reduced coordinates, regimes, rescaling.
//! * [`analytic`]: stationary density and its small-noise limit laws.
//! * [`propagator`]: transition densities with and without a constant force.
//! * [`simulate`]: Euler–Maruyama ensembles and weighted Brownian paths.
//! * [`stats`]: quadrature, empirical CDFs, KDE, chi-square.
//! * [`validate`]: the numerical gates, runnable from the command line.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod error;
pub mod model;
pub mod propagator;
pub mod simulate;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
