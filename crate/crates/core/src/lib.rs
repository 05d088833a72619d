//! Multivariate peaks-over-thresholds extreme event attribution.
//!
//! Joint threshold exceedances are modelled with multivariate generalized
//! Pareto distributions (MGPDs). A linear index `wᵀX` of an MGPD vector is
//! again generalized Pareto above zero, which gives a two-term estimator of
//! `P[wᵀX > v]` in a factual and a counterfactual world and hence of the
//! probability of necessary causation (PN). The weights `w` can be chosen to
//! maximize PN, and a full pipeline clusters grid points by tail dependence
//! before attributing each cluster separately.
//!
//! Module map:
//!
//! - [`gpd`], [`causation`]: univariate tails, PWM fitting, PN/PS/PNS.
//! - [`mgpd`], [`return_period`]: MGPD simulation, projections, tail
//!   dependence, dependence-dependent return periods.
//! - [`attribution`]: two-world estimation, optimal weights, bootstrap.
//! - [`clustering`]: χ-based dissimilarity and PAM.
//! - [`data`]: CSV ingestion, weekly block maxima, synthetic worlds, results.
//! - [`pipeline`]: the clustered end-to-end run behind the command line.
//! - [`experiments`]: desk-scale reproductions of the reference experiments.

pub mod attribution;
pub mod causation;
pub mod clustering;
pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod gpd;
pub mod matrix;
pub mod mgpd;
pub mod optim;
pub mod pipeline;
pub mod return_period;
pub mod rng;
pub mod stats;
pub mod weights;

pub use causation::{causation_probabilities, pn_limit, CausationTriple};
pub use error::{Error, Result};
pub use gpd::{gpd_quantile, gpd_survival, pwm_fit, tail_prob, GpdParams, TailModel};
pub use matrix::RowMatrix;
pub use mgpd::{GaussianGenerator, MgpdModel, MgpdSample};
pub use weights::WeightVector;
