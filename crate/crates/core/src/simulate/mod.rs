//! Euler–Maruyama ensembles, discrete Brownian path functionals and the
//! weighted-path (Girsanov) density estimator.
//!
//! Every path owns a ChaCha8 stream selected by its index under the master
//! seed, and ensembles are collected in index order, so results do not
//! depend on how many worker threads ran them.

pub mod ensemble;
pub mod girsanov;

pub use ensemble::{
    brownian_ensemble_with_functionals, euler_maruyama_coupled, euler_maruyama_ensemble, local_time_estimators,
    BrownianFunctionals, EnsembleSummary, PathEnsemble, SimConfig,
};
pub use girsanov::{
    girsanov_log_weight, girsanov_propagator_estimate, GirsanovEstimate, GirsanovRequest, GirsanovWeight,
};
