//! Bayesian variable selection in linear regression with mixtures of
//! g-priors, including scaled inverse chi-square mixing densities.
//!
//! The library scores models by their marginal likelihood (one-dimensional
//! quadrature over `g`), searches the model space by enumeration or Gibbs
//! sampling, and runs replicated simulation studies.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod lab;
pub mod marginal;
pub mod prior;
pub mod quadrature;
pub mod regression;
pub mod search;
pub mod seed;
pub mod symbolic;
pub mod special;

pub use error::{Error, Result};
pub use marginal::{
    log_bayes_factor_vs_null, log_marginal, log_marginal_approx, log_marginal_null,
    log_marginal_quadrature, posterior_probs, MarginalEvaluation, ModelPrior,
};
pub use prior::{make_proposed, GMixturePrior, ProposedVariant, RhoRule};
pub use regression::{fit_stats, residual_quadratic, Dataset, ModelIndex, RegressionStats};
pub use search::{enumerate_all, enumerate_nested, gibbs_search, SearchResult};
