//! Monte Carlo Kullback–Leibler risk.
//!
//! Every estimator here draws trial `i` from substream `i` of one seeded
//! [`StreamFactory`], so all methods, grid points and `t` values see the same
//! observation noise (common random numbers), and results do not depend on
//! how trials are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{default_eb_c, estimate_stein, PriorSpec};
use crate::gaussian::{kl_divergence, ProblemConfig, SphericalNormal};
use crate::predictive::{
    predictive_eb, predictive_plugin, predictive_stein_bayes, predictive_uniform, stein_log_ratio,
    PredictiveDensity,
};
use crate::rng::{Stream, StreamFactory};
use crate::special::QuadratureRule;

/// Default number of trials per risk estimate.
pub const DEFAULT_TRIALS: usize = 5000;
/// Default number of `y` draws per observation for the Stein mixture.
pub const DEFAULT_Y_DRAWS: usize = 64;
/// Nodes of the Gauss–Legendre rule over `[s, s + t]`.
pub const DEFAULT_INTEGRATION_NODES: usize = 16;
/// Probe pairs used to cross-check the closed-form Stein density.
const RATIO_PROBES: usize = 8;
/// Largest accepted |log p_quadrature - log p_closed_form| on the probes.
const RATIO_TOLERANCE: f64 = 1e-6;

/// A predictive-density constructor compared by the risk engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Flat-prior Bayesian predictive `N(x, (u + v) I)`.
    Uniform,
    /// Spherical extended plug-in under Stein's prior.
    PluginE1,
    /// Full-covariance extended plug-in under Stein's prior.
    PluginE2,
    /// Empirical-Bayes conjugate predictive with constant `c`.
    EmpiricalBayes { c: f64 },
    /// Exact Bayesian predictive under Stein's prior.
    SteinBayes,
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::Uniform => "pu",
            Method::PluginE1 => "e1",
            Method::PluginE2 => "e2",
            Method::EmpiricalBayes { .. } => "eb",
            Method::SteinBayes => "ps",
        }
    }

    /// Parse a method id; `eb` takes `eb_c`, defaulting to `d - 3`.
    pub fn from_id(id: &str, d: usize, eb_c: Option<f64>) -> Result<Self> {
        match id {
            "pu" => Ok(Method::Uniform),
            "e1" => Ok(Method::PluginE1),
            "e2" => Ok(Method::PluginE2),
            "ps" => Ok(Method::SteinBayes),
            "eb" => {
                let c = match eb_c {
                    Some(c) => c,
                    None => default_eb_c(d)?,
                };
                if !(c > 0.0) {
                    return Err(Error::InvalidArgument(format!("eb constant must be positive, got {c}")));
                }
                Ok(Method::EmpiricalBayes { c })
            }
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }

    pub fn needs_stein(&self) -> bool {
        matches!(self, Method::PluginE1 | Method::PluginE2 | Method::SteinBayes)
    }

    /// The predictive density this method produces for observation `x`.
    pub fn build(&self, x: &DVector<f64>, cfg: &ProblemConfig) -> Result<PredictiveDensity> {
        match *self {
            Method::Uniform => predictive_uniform(x, cfg),
            Method::PluginE1 => predictive_plugin(&estimate_stein(x, cfg)?.e1, cfg),
            Method::PluginE2 => predictive_plugin(&estimate_stein(x, cfg)?.e2, cfg),
            Method::EmpiricalBayes { c } => predictive_eb(x, cfg, c),
            Method::SteinBayes => predictive_stein_bayes(x, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Which extended model a plug-in lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendedModel {
    E1,
    E2,
}

impl ExtendedModel {
    pub fn id(&self) -> &'static str {
        match self {
            ExtendedModel::E1 => "e1",
            ExtendedModel::E2 => "e2",
        }
    }
}

impl FromStr for ExtendedModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e1" => Ok(ExtendedModel::E1),
            "e2" => Ok(ExtendedModel::E2),
            other => Err(Error::InvalidArgument(format!("unknown extended model '{other}'"))),
        }
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_err: f64,
    pub trials: usize,
    pub method_id: String,
}

impl RiskEstimate {
    fn from_samples(method_id: &str, samples: &[f64]) -> Self {
        let (value, std_err) = mean_and_se(samples);
        RiskEstimate { value, std_err, trials: samples.len(), method_id: method_id.to_string() }
    }
}

/// Neumaier-compensated sum in slice order.
fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and `sd / sqrt(n)`.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = compensated_sum(samples.iter().map(|x| (x - mean).powi(2)));
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trials, got {trials}")));
    }
    Ok(())
}

fn standard_normal(rng: &mut Stream, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Runs `f` on every trial index in parallel and returns the results in
/// trial order.
fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

/// Compares quadrature and closed-form evaluations of the Stein predictive
/// density on a few probe pairs drawn from the experiment distribution.
pub fn validate_stein_density(cfg: &ProblemConfig, seed: u64) -> Result<f64> {
    let streams = StreamFactory::new(seed).derive(0x5eed_0f7a_7105);
    let d = cfg.d();
    let mut worst: f64 = 0.0;
    for i in 0..RATIO_PROBES as u64 {
        let mut rng = streams.stream(i);
        let x = cfg.mu() + standard_normal(&mut rng, d) * cfg.u().sqrt();
        let y = cfg.mu() + standard_normal(&mut rng, d) * cfg.v().sqrt();
        let PredictiveDensity::SteinMixture(p) = predictive_stein_bayes(&x, cfg)? else {
            unreachable!("predictive_stein_bayes returns a mixture")
        };
        let diff = (p.log_density(&y)? - p.log_density_closed_form(&y)?).abs();
        worst = worst.max(diff);
    }
    if !(worst <= RATIO_TOLERANCE) {
        return Err(Error::DensityMismatch(worst));
    }
    Ok(worst)
}

/// Per-observation KL loss of one method.
fn method_loss(
    method: Method,
    x: &DVector<f64>,
    cfg: &ProblemConfig,
    truth: &SphericalNormal,
    ys: &[DVector<f64>],
) -> Result<f64> {
    match method {
        Method::SteinBayes => {
            // KL(truth, p_S) = KL(truth, p_U) - E_y[ln p_S(y|x) - ln p_U(y|x)].
            let pu = SphericalNormal::new(x.clone(), cfg.u() + cfg.v())?;
            let base = kl_divergence(truth, &pu)?;
            let ratios = ys
                .iter()
                .map(|y| stein_log_ratio(x, y, cfg.u(), cfg.v()))
                .collect::<Result<Vec<_>>>()?;
            Ok(base - compensated_sum(ratios) / ys.len() as f64)
        }
        other => match other.build(x, cfg)? {
            PredictiveDensity::Spherical(p) => kl_divergence(truth, &p),
            PredictiveDensity::Full(p) => kl_divergence(truth, &p),
            PredictiveDensity::SteinMixture(_) => unreachable!("handled above"),
        },
    }
}

/// Risk of several methods at one true mean, sharing every random draw.
pub fn estimate_risks(
    methods: &[Method],
    cfg: &ProblemConfig,
    trials: usize,
    seed: u64,
    y_draws: usize,
) -> Result<Vec<RiskEstimate>> {
    check_trials(trials)?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods given".into()));
    }
    let needs_y = methods.contains(&Method::SteinBayes);
    if needs_y {
        if y_draws == 0 {
            return Err(Error::InvalidArgument("Stein mixture needs at least one y draw".into()));
        }
        validate_stein_density(cfg, seed)?;
    }
    let streams = StreamFactory::new(seed);
    let d = cfg.d();
    let truth = cfg.truth();
    let losses = run_trials(trials, |i| {
        let mut rng = streams.stream(i);
        let x = cfg.mu() + standard_normal(&mut rng, d) * cfg.u().sqrt();
        let ys: Vec<DVector<f64>> = if needs_y {
            (0..y_draws).map(|_| cfg.mu() + standard_normal(&mut rng, d) * cfg.v().sqrt()).collect()
        } else {
            Vec::new()
        };
        methods.iter().map(|&m| method_loss(m, &x, cfg, &truth, &ys)).collect::<Result<Vec<f64>>>()
    })?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let column: Vec<f64> = losses.iter().map(|row| row[k]).collect();
            RiskEstimate::from_samples(m.id(), &column)
        })
        .collect())
}

/// KL risk `E_x[KL(N(mu, vI) || p(. | x))]` of one method at `cfg.mu()`.
pub fn estimate_risk(method: Method, cfg: &ProblemConfig, trials: usize, seed: u64) -> Result<RiskEstimate> {
    let mut out = estimate_risks(&[method], cfg, trials, seed, DEFAULT_Y_DRAWS)?;
    Ok(out.remove(0))
}

/// Risk of every method along a grid of `|mu|`, with `mu = |mu| e_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub d: usize,
    pub u: f64,
    pub v: f64,
    pub trials: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
    /// `estimates[k][g]` is method `k` at grid point `g`.
    pub methods: Vec<Method>,
    pub estimates: Vec<Vec<RiskEstimate>>,
}

impl RiskCurve {
    pub fn series(&self, method: Method) -> Option<&[RiskEstimate]> {
        self.methods.iter().position(|&m| m == method).map(|k| self.estimates[k].as_slice())
    }
}

#[allow(clippy::too_many_arguments)]
pub fn risk_curve(
    methods: &[Method],
    grid: &[f64],
    d: usize,
    u: f64,
    v: f64,
    trials: usize,
    seed: u64,
    y_draws: usize,
) -> Result<RiskCurve> {
    if methods.is_empty() || grid.is_empty() {
        return Err(Error::InvalidArgument("risk curve needs at least one method and one grid point".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::InvalidArgument("grid must be nonnegative and strictly increasing".into()));
    }
    let mut estimates = vec![Vec::with_capacity(grid.len()); methods.len()];
    for &norm in grid {
        let cfg = ProblemConfig::on_axis(d, u, v, norm)?;
        for (k, est) in estimate_risks(methods, &cfg, trials, seed, y_draws)?.into_iter().enumerate() {
            estimates[k].push(est);
        }
    }
    Ok(RiskCurve { d, u, v, trials, seed, grid: grid.to_vec(), methods: methods.to_vec(), estimates })
}

/// One row of the small-`t` derivative check.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeRow {
    pub t: f64,
    pub model: ExtendedModel,
    /// `Delta(t) / t` with `Delta(t) = R_t(p_U) - R_t(plug-in)`.
    pub estimate: f64,
    pub estimate_se: f64,
    /// `(E|x - mu|^2 - E|mu_hat - mu|^2) / 2` under `x ~ N(mu, I / s)`.
    pub target: f64,
    pub target_se: f64,
    /// Standard error of the per-trial difference `Delta_i / t - target_i`.
    pub paired_se: f64,
}

impl DerivativeRow {
    pub fn combined_se(&self) -> f64 {
        self.estimate_se.hypot(self.target_se)
    }
}

/// Derivative of the risk gap between the flat-prior predictive and an
/// extended plug-in with respect to the prediction precision `t = 1/v`,
/// estimated by `Delta(t) / t` on a decreasing sequence of `t`.
///
/// `Delta(0) = 0` because both risks vanish with the prediction horizon, so
/// the quotient is a one-sided difference quotient at zero.
pub fn theorem1_derivative_check(
    prior: PriorSpec,
    mu: &DVector<f64>,
    s: f64,
    t_values: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<DerivativeRow>> {
    check_trials(trials)?;
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    if t_values.is_empty()
        || t_values.iter().any(|t| !(*t > 0.0))
        || t_values.windows(2).any(|w| !(w[0] > w[1]))
    {
        return Err(Error::InvalidArgument("t values must be positive and strictly decreasing".into()));
    }
    let d = mu.len();
    prior.validate(d)?;
    let u = 1.0 / s;
    let base_cfg = ProblemConfig::new(u, 1.0, mu.clone())?;
    let streams = StreamFactory::new(seed);
    let models = [ExtendedModel::E1, ExtendedModel::E2];

    // Per trial: the target term, then Delta_i(t) / t per (t, model).
    let per_trial = run_trials(trials, |i| {
        let mut rng = streams.stream(i);
        let x = mu + standard_normal(&mut rng, d) * u.sqrt();
        let mu_hat = prior.estimate(&x, &base_cfg)?.e1.mu_hat;
        let target = 0.5 * ((&x - mu).norm_squared() - (&mu_hat - mu).norm_squared());
        let mut quotients = Vec::with_capacity(t_values.len() * models.len());
        for &t in t_values {
            let cfg = base_cfg.with_variances(u, 1.0 / t)?;
            let truth = cfg.truth();
            let est = prior.estimate(&x, &cfg)?;
            let pu = SphericalNormal::new(x.clone(), cfg.u() + cfg.v())?;
            let risk_u = kl_divergence(&truth, &pu)?;
            for model in models {
                let risk_plugin = match model {
                    ExtendedModel::E1 => match predictive_plugin(&est.e1, &cfg)? {
                        PredictiveDensity::Spherical(p) => kl_divergence(&truth, &p)?,
                        _ => unreachable!("E1 plug-in is spherical"),
                    },
                    ExtendedModel::E2 => match predictive_plugin(&est.e2, &cfg)? {
                        PredictiveDensity::Full(p) => kl_divergence(&truth, &p)?,
                        _ => unreachable!("E2 plug-in is full"),
                    },
                };
                quotients.push((risk_u - risk_plugin) / t);
            }
        }
        Ok((target, quotients))
    })?;

    let targets: Vec<f64> = per_trial.iter().map(|(t, _)| *t).collect();
    let (target, target_se) = mean_and_se(&targets);
    let mut rows = Vec::with_capacity(t_values.len() * models.len());
    for (ti, &t) in t_values.iter().enumerate() {
        for (mi, &model) in models.iter().enumerate() {
            let col: Vec<f64> = per_trial.iter().map(|(_, q)| q[ti * models.len() + mi]).collect();
            let diffs: Vec<f64> = per_trial
                .iter()
                .map(|(tg, q)| q[ti * models.len() + mi] - tg)
                .collect();
            let (estimate, estimate_se) = mean_and_se(&col);
            let (_, paired_se) = mean_and_se(&diffs);
            rows.push(DerivativeRow { t, model, estimate, estimate_se, target, target_se, paired_se });
        }
    }
    Ok(rows)
}

/// Both sides of the identity expressing the predictive risk gap
/// `R(mu; p_U) - R(mu; p_S)` as an integral over precision `tau in [s, s + t]`
/// of half the quadratic estimation-risk gap under `N(mu, I / tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationCheck {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// `(tau, mean integrand, se)` at each quadrature node.
    pub nodes: Vec<(f64, f64, f64)>,
}

impl IntegrationCheck {
    pub fn diff(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn combined_se(&self) -> f64 {
        self.lhs_se.hypot(self.rhs_se)
    }
}

/// Estimates both sides of the risk-integration identity for Stein's prior
/// with independent draws.
#[allow(clippy::too_many_arguments)]
pub fn risk_integration_check(
    mu: &DVector<f64>,
    s: f64,
    t: f64,
    n_nodes: usize,
    trials: usize,
    seed: u64,
    y_draws: usize,
) -> Result<IntegrationCheck> {
    check_trials(trials)?;
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::InvalidArgument(format!("s and t must be positive, got {s}, {t}")));
    }
    if n_nodes == 0 || y_draws == 0 {
        return Err(Error::InvalidArgument("need at least one node and one y draw".into()));
    }
    let d = mu.len();
    PriorSpec::Stein.validate(d)?;
    let (u, v) = (1.0 / s, 1.0 / t);
    let lhs_streams = StreamFactory::new(seed).derive(1);
    let rhs_streams = StreamFactory::new(seed).derive(2);

    let lhs_samples = run_trials(trials, |i| {
        let mut rng = lhs_streams.stream(i);
        let x = mu + standard_normal(&mut rng, d) * u.sqrt();
        let ratios = (0..y_draws)
            .map(|_| {
                let y = mu + standard_normal(&mut rng, d) * v.sqrt();
                stein_log_ratio(&x, &y, u, v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(compensated_sum(ratios) / y_draws as f64)
    })?;

    let rule = QuadratureRule::gauss_legendre(n_nodes);
    let taus: Vec<f64> = rule.nodes().iter().map(|&r| s + t * r).collect();
    let node_samples = run_trials(trials, |i| {
        let mut rng = rhs_streams.stream(i);
        let z = standard_normal(&mut rng, d);
        taus.iter()
            .map(|&tau| {
                let cfg = ProblemConfig::new(1.0 / tau, 1.0, mu.clone())?;
                let x = mu + &z / tau.sqrt();
                let mu_hat = estimate_stein(&x, &cfg)?.e1.mu_hat;
                Ok(0.5 * ((&x - mu).norm_squared() - (&mu_hat - mu).norm_squared()))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let rhs_samples: Vec<f64> = node_samples
        .iter()
        .map(|g| t * compensated_sum(g.iter().zip(rule.weights()).map(|(gk, w)| gk * w)))
        .collect();
    let nodes = taus
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let col: Vec<f64> = node_samples.iter().map(|g| g[k]).collect();
            let (m, se) = mean_and_se(&col);
            (tau, m, se)
        })
        .collect();

    let (lhs, lhs_se) = mean_and_se(&lhs_samples);
    let (rhs, rhs_se) = mean_and_se(&rhs_samples);
    Ok(IntegrationCheck { lhs, lhs_se, rhs, rhs_se, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_ids_round_trip() {
        for id in ["pu", "e1", "e2", "eb", "ps"] {
            assert_eq!(Method::from_id(id, 10, None).unwrap().id(), id);
        }
        assert_eq!(Method::from_id("eb", 10, None).unwrap(), Method::EmpiricalBayes { c: 7.0 });
        assert_eq!(Method::from_id("eb", 10, Some(2.5)).unwrap(), Method::EmpiricalBayes { c: 2.5 });
        assert!(Method::from_id("eb", 10, Some(0.0)).is_err());
        assert!(Method::from_id("xx", 10, None).is_err());
    }

    #[test]
    fn mean_and_se_small_sample() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_too_few_trials() {
        let cfg = ProblemConfig::centered(3, 1.0, 1.0).unwrap();
        assert!(estimate_risk(Method::Uniform, &cfg, 1, 0).is_err());
        assert!(estimate_risk(Method::Uniform, &cfg, 2, 0).is_ok());
    }

    #[test]
    fn uniform_risk_matches_closed_form() {
        for &(d, u, v) in &[(10usize, 1.0, 1.0), (10, 1.0, 0.1), (4, 2.0, 0.5)] {
            let cfg = ProblemConfig::on_axis(d, u, v, 1.5).unwrap();
            let est = estimate_risk(Method::Uniform, &cfg, 4000, 7).unwrap();
            let exact = 0.5 * d as f64 * (1.0 + u / v).ln();
            assert!((est.value - exact).abs() < 3.0 * est.std_err, "{est:?} vs {exact}");
            assert_eq!(est.trials, 4000);
            assert_eq!(est.method_id, "pu");
        }
    }

    #[test]
    fn single_method_matches_joint_run() {
        let cfg = ProblemConfig::on_axis(5, 1.0, 0.2, 2.0).unwrap();
        let joint = estimate_risks(&[Method::Uniform, Method::PluginE2, Method::SteinBayes], &cfg, 200, 3, 16)
            .unwrap();
        let alone = estimate_risks(&[Method::PluginE2], &cfg, 200, 3, 16).unwrap();
        assert_eq!(joint[1], alone[0]);
        let again = estimate_risks(&[Method::Uniform, Method::PluginE2, Method::SteinBayes], &cfg, 200, 3, 16)
            .unwrap();
        assert_eq!(joint, again);
    }

    #[test]
    fn stein_risk_below_uniform_at_origin() {
        let cfg = ProblemConfig::centered(10, 1.0, 0.1).unwrap();
        let out = estimate_risks(&[Method::Uniform, Method::PluginE2], &cfg, 2000, 11, 0).unwrap();
        let margin = out[0].value - out[1].value;
        assert!(margin > 5.0 * out[0].std_err.hypot(out[1].std_err), "{out:?}");
    }

    #[test]
    fn uniform_prior_derivative_is_zero() {
        let mu = DVector::from_element(4, 0.5);
        let rows = theorem1_derivative_check(PriorSpec::Uniform, &mu, 1.0, &[1e-2, 1e-3], 50, 1).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!(r.estimate.abs() < 1e-9, "{r:?}");
            assert_eq!(r.target, 0.0);
        }
    }

    #[test]
    fn derivative_check_validates_t_values() {
        let mu = DVector::zeros(4);
        assert!(theorem1_derivative_check(PriorSpec::Stein, &mu, 1.0, &[1e-3, 1e-2], 10, 1).is_err());
        assert!(theorem1_derivative_check(PriorSpec::Stein, &mu, 1.0, &[], 10, 1).is_err());
        assert!(theorem1_derivative_check(PriorSpec::Stein, &mu, 1.0, &[0.0], 10, 1).is_err());
        assert!(theorem1_derivative_check(PriorSpec::Stein, &DVector::zeros(2), 1.0, &[0.1], 10, 1).is_err());
    }

    #[test]
    fn integration_check_vanishes_for_tiny_horizon() {
        let mu = DVector::zeros(5);
        let chk = risk_integration_check(&mu, 1.0, 1e-6, 16, 500, 5, 8).unwrap();
        assert!(chk.lhs.abs() < 1e-4 && chk.rhs.abs() < 1e-5, "{chk:?}");
        assert!(chk.diff().abs() <= 3.0 * chk.combined_se() + 1e-9);
    }

    #[test]
    fn risk_curve_validates_grid() {
        assert!(risk_curve(&[Method::Uniform], &[1.0, 1.0], 3, 1.0, 1.0, 10, 0, 4).is_err());
        assert!(risk_curve(&[], &[1.0], 3, 1.0, 1.0, 10, 0, 4).is_err());
        assert!(risk_curve(&[Method::Uniform], &[], 3, 1.0, 1.0, 10, 0, 4).is_err());
        let curve = risk_curve(&[Method::Uniform], &[0.0], 3, 1.0, 1.0, 10, 0, 4).unwrap();
        let cfg = ProblemConfig::centered(3, 1.0, 1.0).unwrap();
        assert_eq!(curve.estimates[0][0], estimate_risk(Method::Uniform, &cfg, 10, 0).unwrap());
    }
}
