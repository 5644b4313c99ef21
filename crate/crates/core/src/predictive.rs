//! Predictive densities for `y` given `x`.
//!
//! The Stein-prior Bayesian predictive density is a scale mixture over the
//! shrinkage weight `rho = tau / (u + tau)`:
//!
//! ```text
//! p_S(y | x) = int_0^1 N(y; rho x, (v + u rho) I) dPi(rho | x),
//! dPi(rho | x) ∝ (1 - rho)^{d/2 - 2} exp(-|x|^2 (1 - rho) / (2u)) drho.
//! ```
//!
//! Quadrature runs in `r = sqrt(1 - rho)`, where the posterior becomes
//! `∝ r^{d-3} exp(-|x|^2 r^2 / (2u))`; this removes the integrable endpoint
//! singularity at `d = 3` and keeps the integrand smooth for every `d`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::{eb_tau_hat, ExtendedEstimateE1, ExtendedEstimateE2};
use crate::gaussian::{check_dim, spherical_log_density, FullNormal, Gaussian, ProblemConfig, SphericalNormal};
use crate::special::{build_quadrature, ln_phi, QuadratureRule};

/// Gauss–Legendre order of each adaptive panel.
pub const PANEL_ORDER: usize = 16;
/// Relative tolerance of the adaptive mixture quadrature.
pub const MIXTURE_TOLERANCE: f64 = 1e-13;

/// Maximize `f` over a fixed scan of `(0, 1)`, returning the shift used to
/// keep `exp(f - shift)` in range.
fn scan_max<F: Fn(f64) -> f64>(f: &F, extra: &[f64]) -> f64 {
    let n = 512;
    (0..n)
        .map(|i| (i as f64 + 0.5) / n as f64)
        .chain(extra.iter().copied())
        .map(f)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `ln int_0^1 exp(f(r)) dr` by adaptive quadrature with max-subtraction.
fn log_integral<F: Fn(f64) -> f64>(f: F, hints: &[f64]) -> Result<(f64, QuadratureRule)> {
    let mut shift = scan_max(&f, hints);
    for _ in 0..4 {
        let rule = build_quadrature(PANEL_ORDER, MIXTURE_TOLERANCE, |r| (f(r) - shift).exp())?;
        let peak = rule.nodes().iter().map(|&r| f(r)).fold(f64::NEG_INFINITY, f64::max);
        if peak > shift + 30.0 {
            // The scan missed a narrow peak; rebuild around the true scale.
            shift = peak;
            continue;
        }
        let total = rule.integrate(|r| (f(r) - shift).exp());
        if !(total > 0.0 && total.is_finite()) {
            break;
        }
        return Ok((shift + total.ln(), rule));
    }
    Err(Error::Quadrature { nodes: 0, last: f64::NAN, previous: f64::NAN })
}

/// Posterior of the shrinkage weight under Stein's prior, discretized on an
/// adaptive rule in `r = sqrt(1 - rho)`.
#[derive(Debug, Clone)]
pub struct TauPosterior {
    x_norm_sq: f64,
    u: f64,
    d: usize,
    rule: QuadratureRule,
    /// Log posterior density (w.r.t. `dr`) at each node, self-normalized.
    log_weights: Vec<f64>,
    /// Log normalizer of the unnormalized density `r^{d-3} e^{-A r^2 / 2}`.
    log_norm: f64,
}

impl TauPosterior {
    pub fn new(x_norm_sq: f64, u: f64, d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::domain("TauPosterior", format!("Stein's prior requires d >= 3, got d = {d}")));
        }
        if !(u > 0.0) || !(x_norm_sq >= 0.0) {
            return Err(Error::domain("TauPosterior", format!("need u > 0 and |x|^2 >= 0, got {u}, {x_norm_sq}")));
        }
        let post = |r: f64| Self::log_unnormalized(r, x_norm_sq / u, d);
        let mode = if x_norm_sq > 0.0 { ((d as f64 - 3.0) * u / x_norm_sq).sqrt().min(1.0) } else { 1.0 };
        let (log_norm, rule) = log_integral(post, &[mode.clamp(1e-9, 1.0 - 1e-9)])?;
        let log_weights = rule.nodes().iter().map(|&r| post(r) - log_norm).collect();
        Ok(Self { x_norm_sq, u, d, rule, log_weights, log_norm })
    }

    fn log_unnormalized(r: f64, a_sq: f64, d: usize) -> f64 {
        let power = if d == 3 { 0.0 } else { (d as f64 - 3.0) * r.ln() };
        power - 0.5 * a_sq * r * r
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn x_norm_sq(&self) -> f64 {
        self.x_norm_sq
    }

    /// Shrinkage weight `rho` at each node.
    pub fn rho_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.rule.nodes().iter().map(|&r| 1.0 - r * r)
    }

    /// Posterior expectation of `g(rho)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.rule
            .nodes()
            .iter()
            .zip(self.rule.weights())
            .zip(&self.log_weights)
            .map(|((&r, &w), &lw)| w * lw.exp() * g(1.0 - r * r))
            .sum()
    }

    /// `(E[rho | x], Var[rho | x])`, with the variance taken around the mean.
    pub fn moments(&self) -> (f64, f64) {
        // Center on 1 - rho = r^2 so that small shrinkage does not cancel.
        let mean_w = self.expect(|rho| 1.0 - rho);
        let var = self.expect(|rho| (1.0 - rho - mean_w).powi(2));
        (1.0 - mean_w, var)
    }
}

/// The exact Bayesian predictive density under Stein's prior.
#[derive(Debug, Clone)]
pub struct SteinMixture {
    posterior: TauPosterior,
    x: DVector<f64>,
    v: f64,
}

impl SteinMixture {
    pub fn posterior(&self) -> &TauPosterior {
        &self.posterior
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Mixture mean `E[rho | x] x`.
    pub fn mean(&self) -> DVector<f64> {
        &self.x * self.posterior.moments().0
    }

    /// Mixture covariance `E[v + u rho] I + Var[rho] x x^T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let (m, var) = self.posterior.moments();
        let d = self.x.len();
        DMatrix::identity(d, d) * (self.v + self.posterior.u * m) + &self.x * self.x.transpose() * var
    }

    /// `ln p_S(y | x)` by adaptive quadrature over the mixture.
    pub fn log_density(&self, y: &DVector<f64>) -> Result<f64> {
        check_dim(self.x.len(), y)?;
        let d = self.x.len() as f64;
        let (u, v) = (self.posterior.u, self.v);
        let a_sq = self.posterior.x_norm_sq / u;
        let yy = y.norm_squared();
        let xy = y.dot(&self.x);
        let xx = self.posterior.x_norm_sq;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let dd = self.posterior.d;
        let joint = |r: f64| {
            let rho = 1.0 - r * r;
            let var = v + u * rho;
            let dist = (yy - 2.0 * rho * xy + rho * rho * xx).max(0.0);
            TauPosterior::log_unnormalized(r, a_sq, dd) - 0.5 * d * (ln_2pi + var.ln()) - 0.5 * dist / var
        };
        let (log_joint, _) = log_integral(joint, &[])?;
        Ok(log_joint - self.posterior.log_norm)
    }

    /// `ln p_S(y | x)` through the closed-form ratio to the flat-prior
    /// predictive, see [`stein_log_ratio`].
    pub fn log_density_closed_form(&self, y: &DVector<f64>) -> Result<f64> {
        check_dim(self.x.len(), y)?;
        let u = self.posterior.u;
        let log_u = spherical_log_density(y, &self.x, u + self.v);
        Ok(log_u + stein_log_ratio(&self.x, y, u, self.v)?)
    }
}

/// `ln p_S(y | x) - ln p_U(y | x)` in closed form.
///
/// With `z = (v x + u y) / (u + v)` and `w = u v / (u + v)`,
/// `p_S / p_U = ((u + v) / v)^{d/2 - 1} phi_d(|z| / sqrt w) / phi_d(|x| / sqrt u)`.
/// The prefactor is the ratio of the `u^{1-d/2}` terms in the Stein marginals
/// of `(x, y)` and of `x` alone.
pub fn stein_log_ratio(x: &DVector<f64>, y: &DVector<f64>, u: f64, v: f64) -> Result<f64> {
    let d = x.len();
    check_dim(d, y)?;
    let w = u * v / (u + v);
    let z = (x * v + y * u) / (u + v);
    let prefactor = (d as f64 / 2.0 - 1.0) * ((u + v) / v).ln();
    Ok(prefactor + ln_phi(d, z.norm() / w.sqrt())? - ln_phi(d, x.norm() / u.sqrt())?)
}

/// A predictive density over the future outcome `y`.
#[derive(Debug, Clone)]
pub enum PredictiveDensity {
    Spherical(SphericalNormal),
    Full(FullNormal),
    SteinMixture(SteinMixture),
}

impl PredictiveDensity {
    pub fn dim(&self) -> usize {
        match self {
            PredictiveDensity::Spherical(p) => p.dim(),
            PredictiveDensity::Full(p) => p.dim(),
            PredictiveDensity::SteinMixture(p) => p.x.len(),
        }
    }

    pub fn log_density(&self, y: &DVector<f64>) -> Result<f64> {
        match self {
            PredictiveDensity::Spherical(p) => p.log_density(y),
            PredictiveDensity::Full(p) => p.log_density(y),
            PredictiveDensity::SteinMixture(p) => p.log_density(y),
        }
    }

    pub fn mean(&self) -> DVector<f64> {
        match self {
            PredictiveDensity::Spherical(p) => p.mean().clone(),
            PredictiveDensity::Full(p) => p.mean().clone(),
            PredictiveDensity::SteinMixture(p) => p.mean(),
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        match self {
            PredictiveDensity::Spherical(p) => p.covariance_matrix(),
            PredictiveDensity::Full(p) => p.covariance_matrix(),
            PredictiveDensity::SteinMixture(p) => p.covariance(),
        }
    }
}

/// Flat-prior Bayesian predictive density `N_d(x, (u + v) I)`.
pub fn predictive_uniform(x: &DVector<f64>, cfg: &ProblemConfig) -> Result<PredictiveDensity> {
    cfg.check_dim(x)?;
    Ok(PredictiveDensity::Spherical(SphericalNormal::new(x.clone(), cfg.u() + cfg.v())?))
}

/// Extended estimates that define a plug-in density in their own model.
pub trait ExtendedEstimate {
    fn plugin(&self) -> Result<PredictiveDensity>;
    fn dim(&self) -> usize;
}

impl ExtendedEstimate for ExtendedEstimateE1 {
    fn plugin(&self) -> Result<PredictiveDensity> {
        Ok(PredictiveDensity::Spherical(SphericalNormal::new(self.mu_hat.clone(), self.xi_hat)?))
    }

    fn dim(&self) -> usize {
        self.mu_hat.len()
    }
}

impl ExtendedEstimate for ExtendedEstimateE2 {
    fn plugin(&self) -> Result<PredictiveDensity> {
        Ok(PredictiveDensity::Full(FullNormal::new(self.mu_hat.clone(), self.sigma_hat.clone())?))
    }

    fn dim(&self) -> usize {
        self.mu_hat.len()
    }
}

/// Extended plug-in density `N(mu_hat, xi_hat I)` or `N(mu_hat, sigma_hat)`.
pub fn predictive_plugin<E: ExtendedEstimate>(est: &E, cfg: &ProblemConfig) -> Result<PredictiveDensity> {
    if est.dim() != cfg.d() {
        return Err(Error::DimensionMismatch { expected: cfg.d(), found: est.dim() });
    }
    est.plugin()
}

/// Empirical-Bayes predictive density: the conjugate Bayesian predictive
/// with `tau` replaced by [`eb_tau_hat`], i.e. `N(w x, (v + u w) I)`.
pub fn predictive_eb(x: &DVector<f64>, cfg: &ProblemConfig, c: f64) -> Result<PredictiveDensity> {
    cfg.check_dim(x)?;
    let tau = eb_tau_hat(x, cfg.u(), c)?;
    let w = if tau.is_infinite() { 1.0 } else { tau / (cfg.u() + tau) };
    Ok(PredictiveDensity::Spherical(SphericalNormal::new(x * w, cfg.v() + cfg.u() * w)?))
}

/// Bayesian predictive density under Stein's prior.
pub fn predictive_stein_bayes(x: &DVector<f64>, cfg: &ProblemConfig) -> Result<PredictiveDensity> {
    cfg.check_dim(x)?;
    let posterior = TauPosterior::new(x.norm_squared(), cfg.u(), cfg.d())?;
    Ok(PredictiveDensity::SteinMixture(SteinMixture { posterior, x: x.clone(), v: cfg.v() }))
}
