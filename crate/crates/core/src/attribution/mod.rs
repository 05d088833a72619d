//! Two-world estimation: exceedances, common-shape margin fits, the
//! two-term tail estimator, PN, weight optimization and bootstrap intervals.
//!
//! For a weight vector `w` and level `v > wᵀu` the tail probability in each
//! world is estimated by
//!
//! ```text
//! p̂(v; w) = p̂emp(wᵀu) · H̄(v − wᵀu; wᵀσ̂, γ̂)
//! ```
//!
//! where `p̂emp` is the empirical exceedance proportion and `σ̂`, `γ̂` come
//! from per-site PWM fits with the shape averaged across sites.

mod baseline;
mod bootstrap;
mod estimate;
mod fit;
mod optimal;
mod sample;

pub use baseline::{pool_world, pooled_baseline_pn, project_world, univariate_baseline_pn};
pub use bootstrap::{bootstrap_pn_ci, bootstrap_pn_curve, BootstrapCi, BootstrapConfig, MIN_REPLICATES, UNRELIABLE_SHARE};
pub use estimate::{estimate_log_tail_prob, estimate_pn, estimate_tail_prob, pn_ratio_approx, return_level, CausationEstimate};
pub use fit::{fit_world, fit_world_projected, fit_world_with, FitMethod, FittedWorld, TailFit, MIN_FIT_ROWS};
pub use optimal::{
    optimal_weights_bivariate, optimal_weights_numeric, BivariateOptimum, BivariateRoute, NumericOptimum, OptimizerConfig,
    BIVARIATE_GRID_STEP,
};
pub use sample::{empirical_exceedance_prob, extract_exceedances, ExceedanceSet, Site, World, WorldSample};
