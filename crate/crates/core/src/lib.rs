//! Extended plug-in predictive densities for multivariate normal models
//! under shrinkage priors, and a Monte Carlo Kullback–Leibler risk engine.
//!
//! An observation `x ~ N_d(mu, u I)` is used to predict `y ~ N_d(mu, v I)`.
//! The crate builds predictive densities for `y`:
//!
//! * the flat-prior Bayesian predictive `N_d(x, (u + v) I)`;
//! * extended plug-ins `N_d(mu_hat, xi_hat I)` and `N_d(mu_hat, sigma_hat)`
//!   from Bayes extended estimators ([`estimators`]);
//! * an empirical-Bayes conjugate predictive;
//! * the exact Bayesian predictive under Stein's prior, by quadrature over
//!   its normal scale-mixture representation ([`predictive`]);
//!
//! and estimates their KL risk by Monte Carlo with common random numbers
//! ([`risk`]).

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod gaussian;
pub mod predictive;
pub mod risk;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use estimators::{ExtendedEstimateE1, ExtendedEstimateE2, ExtendedEstimates, PriorSpec};
pub use gaussian::{FullNormal, Gaussian, ProblemConfig, SphericalNormal};
pub use predictive::{PredictiveDensity, SteinMixture, TauPosterior};
pub use risk::{Method, RiskCurve, RiskEstimate};
pub use rng::StreamFactory;
