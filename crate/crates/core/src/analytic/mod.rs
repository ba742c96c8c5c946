//! Closed-form densities: special functions, the potential, the stationary
//! law and the regime limits.

pub mod curve;
pub mod limits;
pub mod special;
pub mod stationary;

pub use curve::{linspace, resolved_grid, DensityCurve};
pub use limits::{
    limit_pdf_partly_stuck, limit_pdf_stuck, limit_pdf_viscous, partly_stuck_limit_density, stuck_grid,
    stuck_limit_cdf, stuck_limit_density, viscous_grid, viscous_limit_cdf, viscous_limit_density, Side,
};
pub use special::{gaussian_cdf, gaussian_kernel, gaussian_tail};
pub use stationary::{
    log_stationary_normalizer, normalizer_residual, potential_minimizer, potential_value, stationary_cdf,
    stationary_density, stationary_grid, stationary_log_unnormalized, stationary_normalizer, stationary_pdf,
    stationary_positive_mass, NormalizerCheck, Potential,
};
