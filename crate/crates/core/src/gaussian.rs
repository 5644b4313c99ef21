//! Multivariate normal densities, sampling and closed-form KL divergences.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative floor on the Cholesky diagonal below which a covariance is
/// treated as singular.
pub const SINGULARITY_RATIO: f64 = 1e-10;

/// The experiment frame: `x ~ N_d(mu, u I)` is observed, `y ~ N_d(mu, v I)`
/// is predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    d: usize,
    u: f64,
    v: f64,
    mu: DVector<f64>,
}

impl ProblemConfig {
    pub fn new(u: f64, v: f64, mu: DVector<f64>) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::InvalidArgument(format!("observation variance u must be positive, got {u}")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("prediction variance v must be positive, got {v}")));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("true mean must be finite".into()));
        }
        Ok(Self { d, u, v, mu })
    }

    /// Config with the true mean at the origin.
    pub fn centered(d: usize, u: f64, v: f64) -> Result<Self> {
        Self::new(u, v, DVector::zeros(d))
    }

    /// Config with the true mean `norm * e_1`.
    pub fn on_axis(d: usize, u: f64, v: f64, norm: f64) -> Result<Self> {
        let mut mu = DVector::zeros(d);
        if d > 0 {
            mu[0] = norm;
        }
        Self::new(u, v, mu)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    /// Observation precision `1 / u`.
    pub fn s(&self) -> f64 {
        1.0 / self.u
    }

    /// Prediction precision `1 / v`.
    pub fn t(&self) -> f64 {
        1.0 / self.v
    }

    pub fn with_mu(&self, mu: DVector<f64>) -> Result<Self> {
        Self::new(self.u, self.v, mu)
    }

    pub fn with_variances(&self, u: f64, v: f64) -> Result<Self> {
        Self::new(u, v, self.mu.clone())
    }

    /// Density of the observation `x`.
    pub fn observation(&self) -> SphericalNormal {
        SphericalNormal { mean: self.mu.clone(), variance: self.u }
    }

    /// Density of the future outcome `y`.
    pub fn truth(&self) -> SphericalNormal {
        SphericalNormal { mean: self.mu.clone(), variance: self.v }
    }

    pub(crate) fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.d, x)
    }
}

pub(crate) fn check_dim(expected: usize, x: &DVector<f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: x.len() });
    }
    Ok(())
}

/// How a Gaussian stores its covariance.
#[derive(Debug, Clone, Copy)]
pub enum CovarianceView<'a> {
    /// `variance * I`.
    Scaled(f64),
    Dense(&'a FullNormal),
}

/// Common surface of [`SphericalNormal`] and [`FullNormal`].
pub trait Gaussian {
    fn mean(&self) -> &DVector<f64>;
    fn log_det_covariance(&self) -> f64;
    fn covariance_view(&self) -> CovarianceView<'_>;
    fn log_density(&self, y: &DVector<f64>) -> Result<f64>;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<DVector<f64>>;

    fn dim(&self) -> usize {
        self.mean().len()
    }

    fn covariance_matrix(&self) -> DMatrix<f64> {
        match self.covariance_view() {
            CovarianceView::Scaled(s) => DMatrix::identity(self.dim(), self.dim()) * s,
            CovarianceView::Dense(f) => f.covariance.clone(),
        }
    }
}

/// `N_d(mean, variance * I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalNormal {
    mean: DVector<f64>,
    variance: f64,
}

impl SphericalNormal {
    pub fn new(mean: DVector<f64>, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::NotPositiveDefinite(format!("spherical variance {variance}")));
        }
        if mean.is_empty() {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self { mean, variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// The same density with an explicit dense covariance.
    pub fn to_full(&self) -> Result<FullNormal> {
        FullNormal::new(self.mean.clone(), self.covariance_matrix())
    }
}

impl Gaussian for SphericalNormal {
    fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    fn log_det_covariance(&self) -> f64 {
        self.dim() as f64 * self.variance.ln()
    }

    fn covariance_view(&self) -> CovarianceView<'_> {
        CovarianceView::Scaled(self.variance)
    }

    fn log_density(&self, y: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), y)?;
        let d = self.dim() as f64;
        let q = (y - &self.mean).norm_squared();
        Ok(-0.5 * d * (LN_2PI + self.variance.ln()) - 0.5 * q / self.variance)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<DVector<f64>> {
        let sd = self.variance.sqrt();
        (0..n)
            .map(|_| {
                DVector::from_fn(self.dim(), |i, _| self.mean[i] + sd * rng.sample::<f64, _>(StandardNormal))
            })
            .collect()
    }
}

/// `N_d(mean, covariance)` with its Cholesky factor cached.
#[derive(Debug, Clone)]
pub struct FullNormal {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    precision: DMatrix<f64>,
    log_det: f64,
}

impl FullNormal {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: covariance.nrows() });
        }
        let scale = covariance.amax().max(1.0);
        let asym = (&covariance - covariance.transpose()).amax();
        if !(asym <= 1e-12 * scale) {
            return Err(Error::NotPositiveDefinite(format!("covariance asymmetric by {asym:e}")));
        }
        let chol = Cholesky::new(covariance.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = (diag.min(), diag.max());
        if !(lo > SINGULARITY_RATIO * hi) {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest Cholesky pivot {lo:e} below {SINGULARITY_RATIO:e} x largest {hi:e}"
            )));
        }
        let log_det = 2.0 * diag.iter().map(|x| x.ln()).sum::<f64>();
        let precision = chol.inverse();
        Ok(Self { mean, covariance, chol, precision, log_det })
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Lower-triangular factor `L` with `L L^T = covariance`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `r^T covariance^{-1} r`.
    pub fn mahalanobis_sq(&self, r: &DVector<f64>) -> f64 {
        let z = self.chol.l_dirty().solve_lower_triangular(r).expect("factor is nonsingular");
        z.norm_squared()
    }
}

impl PartialEq for FullNormal {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.covariance == other.covariance
    }
}

impl Gaussian for FullNormal {
    fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    fn log_det_covariance(&self) -> f64 {
        self.log_det
    }

    fn covariance_view(&self) -> CovarianceView<'_> {
        CovarianceView::Dense(self)
    }

    fn log_density(&self, y: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), y)?;
        let d = self.dim() as f64;
        let q = self.mahalanobis_sq(&(y - &self.mean));
        Ok(-0.5 * (d * LN_2PI + self.log_det) - 0.5 * q)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<DVector<f64>> {
        let l = self.chol.l();
        (0..n)
            .map(|_| {
                let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
                &self.mean + &l * z
            })
            .collect()
    }
}

/// `KL(p || q)` between two Gaussians, in closed form.
pub fn kl_divergence<P: Gaussian + ?Sized, Q: Gaussian + ?Sized>(p: &P, q: &Q) -> Result<f64> {
    let d = p.dim();
    check_dim(d, q.mean())?;
    let df = d as f64;
    let diff = p.mean() - q.mean();
    let kl = match (p.covariance_view(), q.covariance_view()) {
        (CovarianceView::Scaled(sp), CovarianceView::Scaled(sq)) => {
            // d (r - 1 - ln r) with r = sp / sq, kept accurate for r near 1.
            let rm1 = (sp - sq) / sq;
            0.5 * (df * (rm1 - rm1.ln_1p()) + diff.norm_squared() / sq)
        }
        (_, CovarianceView::Scaled(sq)) => {
            let trace = p.covariance_matrix().trace() / sq;
            0.5 * (df * sq.ln() - p.log_det_covariance() + trace + diff.norm_squared() / sq - df)
        }
        (pv, CovarianceView::Dense(qf)) => {
            let trace = match pv {
                CovarianceView::Scaled(sp) => sp * qf.precision.trace(),
                CovarianceView::Dense(pf) => qf.precision.component_mul(&pf.covariance).sum(),
            };
            let maha = qf.mahalanobis_sq(&diff);
            0.5 * (qf.log_det - p.log_det_covariance() + trace + maha - df)
        }
    };
    Ok(kl.max(0.0))
}

/// Log density of `N_d(mean, variance * I)` at `y` without constructing the type.
pub(crate) fn spherical_log_density(y: &DVector<f64>, mean: &DVector<f64>, variance: f64) -> f64 {
    let d = y.len() as f64;
    -0.5 * d * (2.0 * PI * variance).ln() - 0.5 * (y - mean).norm_squared() / variance
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn problem_config_validation() {
        assert!(ProblemConfig::centered(3, 1.0, 0.1).is_ok());
        assert!(ProblemConfig::centered(0, 1.0, 0.1).is_err());
        assert!(ProblemConfig::centered(3, 0.0, 0.1).is_err());
        assert!(ProblemConfig::centered(3, 1.0, -0.1).is_err());
        let cfg = ProblemConfig::on_axis(4, 2.0, 0.5, 3.0).unwrap();
        assert_eq!(cfg.mu(), &dvector![3.0, 0.0, 0.0, 0.0]);
        assert_eq!(cfg.s(), 0.5);
        assert_eq!(cfg.t(), 2.0);
    }

    #[test]
    fn log_density_examples() {
        let p = SphericalNormal::new(DVector::zeros(2), 1.0).unwrap();
        assert_relative_eq!(p.log_density(&DVector::zeros(2)).unwrap(), -(2.0 * PI).ln(), max_relative = 1e-15);

        let f = FullNormal::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(f.log_density(&dvector![1.0, 0.0]).unwrap(), -(2.0 * PI).ln() - 0.5, max_relative = 1e-15);

        let p = SphericalNormal::new(dvector![1.0, 1.0], 2.0).unwrap();
        assert_relative_eq!(p.log_density(&dvector![0.0, 0.0]).unwrap(), -(4.0 * PI).ln() - 0.5, max_relative = 1e-15);

        assert!(matches!(
            p.log_density(&dvector![0.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn slice_of_density_normalizes() {
        // Integrate exp(log p) along the first coordinate with the rest at the mean.
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let p = FullNormal::new(dvector![0.3, -1.0], cov).unwrap();
        let rule = crate::special::QuadratureRule::gauss_legendre(200);
        let half = 20.0;
        let slice = rule.integrate_on(-half, half, |t| {
            p.log_density(&dvector![0.3 + t, -1.0]).unwrap().exp()
        });
        // Conditional normalizer: the slice integrates to the marginal of y_2 at its mean.
        assert_relative_eq!(slice, 1.0 / (2.0 * PI * 0.5_f64).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn full_normal_rejects_bad_covariance() {
        let m = DVector::zeros(2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(FullNormal::new(m.clone(), asym), Err(Error::NotPositiveDefinite(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(FullNormal::new(m.clone(), indef), Err(Error::NotPositiveDefinite(_))));
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-22]);
        assert!(matches!(FullNormal::new(m.clone(), near), Err(Error::NotPositiveDefinite(_))));
        assert!(matches!(
            FullNormal::new(m, DMatrix::identity(3, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kl_examples() {
        let p = SphericalNormal::new(DVector::zeros(2), 1.0).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let q = SphericalNormal::new(dvector![1.0, 0.0], 1.0).unwrap();
        assert_relative_eq!(kl_divergence(&p, &q).unwrap(), 0.5, max_relative = 1e-15);
        let qf = q.to_full().unwrap();
        assert_relative_eq!(kl_divergence(&p.to_full().unwrap(), &qf).unwrap(), 0.5, max_relative = 1e-14);

        // Truth against the flat-prior predictive.
        let (d, u, v) = (5usize, 1.3, 0.4);
        let mu = dvector![0.1, -0.2, 0.3, 0.0, 1.0];
        let x = dvector![0.5, 0.5, -0.5, 0.2, 0.0];
        let truth = SphericalNormal::new(mu.clone(), v).unwrap();
        let pred = SphericalNormal::new(x.clone(), u + v).unwrap();
        let df = d as f64;
        let expected = 0.5 * (df * ((u + v) / v).ln() + (df * v + (&mu - &x).norm_squared()) / (u + v) - df);
        assert_relative_eq!(kl_divergence(&truth, &pred).unwrap(), expected, max_relative = 1e-13);
        assert_relative_eq!(
            kl_divergence(&truth, &pred.to_full().unwrap()).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn kl_spherical_vs_same_density_as_full_is_zero() {
        let p = SphericalNormal::new(dvector![1.0, -2.0, 0.5], 0.7).unwrap();
        let kl = kl_divergence(&p, &p.to_full().unwrap()).unwrap();
        assert!(kl.abs() < 1e-14, "{kl}");
        let kl = kl_divergence(&p.to_full().unwrap(), &p).unwrap();
        assert!(kl.abs() < 1e-14, "{kl}");
    }

    #[test]
    fn sampling_is_deterministic_and_consistent() {
        let streams = StreamFactory::new(17);
        let p = SphericalNormal::new(dvector![0.0], 1.0).unwrap();
        let a = p.sample(&mut streams.stream(3), 100_000);
        let b = p.sample(&mut streams.stream(3), 100_000);
        assert_eq!(a, b);
        let mean = a.iter().map(|s| s[0]).sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 4.0 / (1e5f64).sqrt(), "{mean}");

        let f = FullNormal::new(dvector![0.0, 0.0], DMatrix::from_diagonal(&dvector![1.0, 4.0])).unwrap();
        let s = f.sample(&mut streams.stream(4), 100_000);
        for (k, target) in [(0usize, 1.0), (1, 4.0)] {
            let m = s.iter().map(|z| z[k]).sum::<f64>() / s.len() as f64;
            let var = s.iter().map(|z| (z[k] - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
            assert!((var / target - 1.0).abs() < 0.05, "component {k}: {var}");
        }
    }

    fn random_spd(d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = StreamFactory::new(seed).stream(0);
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = &a * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.3;
        (&m + m.transpose()) * 0.5
    }

    #[test]
    fn monte_carlo_log_ratio_matches_closed_form() {
        for (case, d) in [3usize, 10].into_iter().enumerate() {
            let mut rng = StreamFactory::new(99).stream(case as u64);
            let m1 = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let m2 = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let pairs: Vec<(FullNormal, FullNormal)> = vec![
                (
                    SphericalNormal::new(m1.clone(), 0.8).unwrap().to_full().unwrap(),
                    SphericalNormal::new(m2.clone(), 1.7).unwrap().to_full().unwrap(),
                ),
                (
                    FullNormal::new(m1.clone(), random_spd(d, 1 + case as u64)).unwrap(),
                    FullNormal::new(m2.clone(), random_spd(d, 50 + case as u64)).unwrap(),
                ),
            ];
            for (p, q) in pairs {
                let exact = kl_divergence(&p, &q).unwrap();
                let draws = p.sample(&mut rng, 100_000);
                let vals: Vec<f64> = draws
                    .iter()
                    .map(|y| p.log_density(y).unwrap() - q.log_density(y).unwrap())
                    .collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let sd = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                assert!((mean - exact).abs() < 3.0 * sd / n.sqrt(), "d={d}: MC {mean} vs {exact}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn kl_is_nonnegative_and_zero_only_on_identical(
            seed in any::<u64>(),
            d in 1usize..6,
            sp in 0.05f64..5.0,
            sq in 0.05f64..5.0,
        ) {
            let mut rng = StreamFactory::new(seed).stream(0);
            let m1 = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let m2 = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let p = SphericalNormal::new(m1.clone(), sp).unwrap();
            let q = FullNormal::new(m2, random_spd(d, seed ^ 0xabc) * sq).unwrap();
            let kl = kl_divergence(&p, &q).unwrap();
            prop_assert!(kl > 0.0);
            prop_assert!(kl_divergence(&q, &p).unwrap() > 0.0);
            prop_assert!(kl_divergence(&q, &q).unwrap().abs() < 1e-10);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }
    }
}
