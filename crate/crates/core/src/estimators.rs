//! Bayes extended estimators.
//!
//! For a prior `pi` and observation `x ~ N_d(mu, u I)` the estimators are
//! posterior means of the expectation parameters of the two extended models:
//!
//! * spherical model: `mu_hat = E[mu | x]`,
//!   `xi_hat = v + (E[mu^T mu | x] - mu_hat^T mu_hat) / d`;
//! * full-covariance model: `mu_hat` as above,
//!   `sigma_hat = v I + E[mu mu^T | x] - mu_hat mu_hat^T`.
//!
//! Under Stein's prior `pi(mu) = |mu|^{-(d-2)}` the posterior is a scale
//! mixture: given the shrinkage weight `rho`, `mu | x ~ N(rho x, rho u I)`.
//! The two moments `E[rho | x]` and `Var[rho | x]` come in closed form from
//! ratios of `phi_d`, which is all the estimators need.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::ProblemConfig;
use crate::special::{ln_gamma, ln_phi};

/// Estimate in the spherical extended model `N_d(mu, xi I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedEstimateE1 {
    pub mu_hat: DVector<f64>,
    pub xi_hat: f64,
}

/// Estimate in the full-covariance extended model `N_d(mu, Sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedEstimateE2 {
    pub mu_hat: DVector<f64>,
    pub sigma_hat: DMatrix<f64>,
}

/// Both extended estimates computed from one posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedEstimates {
    pub e1: ExtendedEstimateE1,
    pub e2: ExtendedEstimateE2,
}

impl ExtendedEstimates {
    /// Estimates from a posterior of the form `N(w x, q I)` mixed over `w`,
    /// summarized by `E[w]`, `Var[w]` and the mean conditional variance `q`.
    fn from_scale_mixture(x: &DVector<f64>, mean_w: f64, var_w: f64, cond_var: f64, v: f64) -> Self {
        let d = x.len();
        let mu_hat = x * mean_w;
        let iso = v + cond_var;
        let xi_hat = iso + var_w * x.norm_squared() / d as f64;
        let sigma_hat = DMatrix::identity(d, d) * iso + x * x.transpose() * var_w;
        ExtendedEstimates {
            e1: ExtendedEstimateE1 { mu_hat: mu_hat.clone(), xi_hat },
            e2: ExtendedEstimateE2 { mu_hat, sigma_hat },
        }
    }
}

/// The priors this crate knows how to build estimators for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    Uniform,
    /// `pi(mu) = |mu|^{-(d-2)}`, requires `d >= 3`.
    Stein,
    /// `N(0, tau I)`.
    ConjugateNormal { tau: f64 },
    /// Conjugate prior with `tau` replaced by [`eb_tau_hat`] using constant `c`.
    EmpiricalBayes { c: f64 },
}

impl PriorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PriorSpec::Uniform => "uniform",
            PriorSpec::Stein => "stein",
            PriorSpec::ConjugateNormal { .. } => "conjugate-normal",
            PriorSpec::EmpiricalBayes { .. } => "empirical-bayes",
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            PriorSpec::Stein => check_stein_dim("PriorSpec::Stein", d),
            PriorSpec::ConjugateNormal { tau } if !(tau > 0.0) => Err(Error::domain(
                "PriorSpec::ConjugateNormal",
                format!("tau must be positive, got {tau}"),
            )),
            PriorSpec::EmpiricalBayes { c } if !(c > 0.0) => Err(Error::domain(
                "PriorSpec::EmpiricalBayes",
                format!("c must be positive, got {c}"),
            )),
            _ => Ok(()),
        }
    }

    /// Bayes extended estimates at `x`.
    pub fn estimate(&self, x: &DVector<f64>, cfg: &ProblemConfig) -> Result<ExtendedEstimates> {
        self.validate(cfg.d())?;
        match *self {
            PriorSpec::Uniform => estimate_uniform(x, cfg),
            PriorSpec::Stein => estimate_stein(x, cfg),
            PriorSpec::ConjugateNormal { tau } => estimate_conjugate(x, tau, cfg),
            PriorSpec::EmpiricalBayes { c } => {
                let tau = eb_tau_hat(x, cfg.u(), c)?;
                Ok(conjugate_from_weight(x, shrinkage_weight(tau, cfg.u()), cfg))
            }
        }
    }
}

fn check_stein_dim(function: &'static str, d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::domain(
            function,
            format!("Stein's prior requires dimension d >= 3, got d = {d}"),
        ));
    }
    Ok(())
}

/// Flat prior: `mu_hat = x`, `xi_hat = u + v`, `sigma_hat = (u + v) I`.
pub fn estimate_uniform(x: &DVector<f64>, cfg: &ProblemConfig) -> Result<ExtendedEstimates> {
    cfg.check_dim(x)?;
    Ok(ExtendedEstimates::from_scale_mixture(x, 1.0, 0.0, cfg.u(), cfg.v()))
}

/// Posterior moments of the shrinkage weight `rho = tau / (u + tau)` under
/// Stein's prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinMoments {
    /// `E[rho | x]`, the factor `F1`.
    pub mean: f64,
    /// `Var[rho | x] = F2 - F1^2`.
    pub variance: f64,
}

impl SteinMoments {
    /// `E[rho^2 | x]`, the factor `F2`.
    pub fn second_moment(&self) -> f64 {
        self.variance + self.mean * self.mean
    }
}

/// Posterior moments of `rho` at `a = |x| / sqrt(u)`.
///
/// With `w = 1 - rho`, `E[w] = 2 phi_{d+2}(a) / phi_d(a)` and
/// `E[w^2] = 4 phi_{d+4}(a) / phi_d(a)`; working with `w` avoids the
/// cancellation in `F2 - F1^2` far from the origin.
pub fn stein_moments(x_norm: f64, u: f64, d: usize) -> Result<SteinMoments> {
    check_stein_dim("stein_shrinkage_factors", d)?;
    if !(u > 0.0) {
        return Err(Error::domain("stein_shrinkage_factors", format!("u must be positive, got {u}")));
    }
    if !(x_norm >= 0.0) {
        return Err(Error::domain("stein_shrinkage_factors", format!("|x| must be nonnegative, got {x_norm}")));
    }
    let a = x_norm / u.sqrt();
    let base = ln_phi(d, a)?;
    let mean_w = 2.0 * (ln_phi(d + 2, a)? - base).exp();
    let second_w = 4.0 * (ln_phi(d + 4, a)? - base).exp();
    Ok(SteinMoments {
        mean: 1.0 - mean_w,
        variance: (second_w - mean_w * mean_w).max(0.0),
    })
}

/// `(F1, F2)` with `F1 = 1 - 2 phi_{d+2}/phi_d` and
/// `F2 = 1 + 4 (phi_{d+4} - phi_{d+2}) / phi_d`, all at `|x| / sqrt(u)`.
pub fn stein_shrinkage_factors(x_norm: f64, u: f64, d: usize) -> Result<(f64, f64)> {
    let m = stein_moments(x_norm, u, d)?;
    Ok((m.mean, m.second_moment()))
}

/// Stein's prior: `mu_hat = F1 x`,
/// `xi_hat = v + F1 u + |x|^2 (F2 - F1^2) / d` and
/// `sigma_hat = (v + F1 u) I + (F2 - F1^2) x x^T`.
pub fn estimate_stein(x: &DVector<f64>, cfg: &ProblemConfig) -> Result<ExtendedEstimates> {
    check_stein_dim("estimate_stein", cfg.d())?;
    cfg.check_dim(x)?;
    let m = stein_moments(x.norm(), cfg.u(), cfg.d())?;
    Ok(ExtendedEstimates::from_scale_mixture(x, m.mean, m.variance, m.mean * cfg.u(), cfg.v()))
}

fn shrinkage_weight(tau: f64, u: f64) -> f64 {
    if tau.is_infinite() {
        1.0
    } else {
        tau / (u + tau)
    }
}

fn conjugate_from_weight(x: &DVector<f64>, w: f64, cfg: &ProblemConfig) -> ExtendedEstimates {
    ExtendedEstimates::from_scale_mixture(x, w, 0.0, w * cfg.u(), cfg.v())
}

/// Conjugate prior `N(0, tau I)`: the posterior is `N(w x, w u I)` with
/// `w = tau / (u + tau)`.
pub fn estimate_conjugate(x: &DVector<f64>, tau: f64, cfg: &ProblemConfig) -> Result<ExtendedEstimates> {
    if !(tau > 0.0) {
        return Err(Error::domain("estimate_conjugate", format!("tau must be positive, got {tau}")));
    }
    cfg.check_dim(x)?;
    Ok(conjugate_from_weight(x, shrinkage_weight(tau, cfg.u()), cfg))
}

/// Positive-part moment estimate of the prior scale,
/// `tau_hat = max(0, |x|^2 / c - u)`.
///
/// The implied weight is `max(0, 1 - c u / |x|^2)`; `c = d - 2` gives the
/// positive-part James–Stein estimator and the default is `c = d - 3`.
pub fn eb_tau_hat(x: &DVector<f64>, u: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain("eb_tau_hat", format!("c must be positive, got {c}")));
    }
    Ok((x.norm_squared() / c - u).max(0.0))
}

/// Default empirical-Bayes constant `c = d - 3`.
pub fn default_eb_c(d: usize) -> Result<f64> {
    if d <= 3 {
        return Err(Error::domain("default_eb_c", format!("default c = d - 3 needs d > 3, got d = {d}")));
    }
    Ok(d as f64 - 3.0)
}

/// Marginal density `m(x)` of the observation and the derivative terms that
/// generate the estimators:
/// `mu_hat = x + u grad log m`, `xi_hat = u + v + h`, `sigma_hat = (u + v) I + H`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDerivatives {
    pub log_m: f64,
    pub grad_log_m: DVector<f64>,
    /// `h = (u^2 / d) (Lap m / m - |grad m|^2 / m^2)`.
    pub h: f64,
    /// `H = u^2 (Hess m / m - grad m grad m^T / m^2)`.
    pub big_h: DMatrix<f64>,
}

/// Marginal log-density and its derivatives for priors with a tractable
/// marginal (Stein's prior and conjugate normal priors).
///
/// For Stein's prior the normalization is `pi(mu) = |mu|^{-(d-2)}`, giving
/// `m(x) = u^{1-d/2} phi_d(|x| / sqrt u) / Gamma(d/2 - 1)`.
pub fn marginal_log_density_and_derivatives(
    x: &DVector<f64>,
    prior: PriorSpec,
    cfg: &ProblemConfig,
) -> Result<MarginalDerivatives> {
    cfg.check_dim(x)?;
    prior.validate(cfg.d())?;
    let d = cfg.d();
    let df = d as f64;
    let u = cfg.u();
    let (log_m, grad_log_m, big_h) = match prior {
        PriorSpec::Stein => {
            let a = x.norm() / u.sqrt();
            let m = stein_moments(x.norm(), u, d)?;
            let log_m = (1.0 - df / 2.0) * u.ln() + ln_phi(d, a)? - ln_gamma(df / 2.0 - 1.0);
            // d/da ln phi_d(a) = -2 a phi_{d+2}(a) / phi_d(a), i.e. grad = -E[1 - rho] x / u;
            // the radial curvature picks up Var[rho].
            let shrink = 1.0 - m.mean;
            let grad = x * (-shrink / u);
            let big_h = DMatrix::identity(d, d) * (-u * shrink) + x * x.transpose() * m.variance;
            (log_m, grad, big_h)
        }
        PriorSpec::ConjugateNormal { tau } => {
            let total = u + tau;
            let log_m = -0.5 * df * (2.0 * std::f64::consts::PI * total).ln() - 0.5 * x.norm_squared() / total;
            let grad = x * (-1.0 / total);
            let big_h = DMatrix::identity(d, d) * (-u * u / total);
            (log_m, grad, big_h)
        }
        other => return Err(Error::UnsupportedPrior(other.name())),
    };
    let h = big_h.trace() / df;
    Ok(MarginalDerivatives { log_m, grad_log_m, h, big_h })
}
