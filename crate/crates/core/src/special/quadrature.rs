//! Gauss–Legendre rules on the unit interval and adaptive composite
//! refinement by bisection.

use crate::error::{Error, Result};

/// Hard cap on the number of nodes an adaptive rule may use.
pub const NODE_BUDGET: usize = 100_000;

/// Smallest order accepted by [`build_quadrature`].
pub const MIN_ORDER: usize = 8;

const INITIAL_PANELS: usize = 8;

/// A positive-weight quadrature rule on the open interval `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `n`-point Gauss–Legendre rule mapped to `(0, 1)`; exact for
    /// polynomials of degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, p_prev) = legendre(n, x);
                dp = nf * (x * p - p_prev) / (x * x - 1.0);
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (p, p_prev) = legendre(n, x);
            dp = if p.is_finite() { nf * (x * p - p_prev) / (x * x - 1.0) } else { dp };
            let w = 1.0 / ((1.0 - x * x) * dp * dp);
            // x is decreasing in i; map [-1, 1] -> [0, 1] so nodes increase.
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integral of `f` over `[lo, hi]` using the rule rescaled to that interval.
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let h = hi - lo;
        h * self.integrate(|r| f(lo + h * r))
    }

    fn push_scaled(&self, lo: f64, hi: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let h = hi - lo;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(lo + h * x);
            weights.push(h * w);
        }
    }
}

/// Returns `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    halves: f64,
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(base: &QuadratureRule, lo: f64, hi: f64, f: &F) -> Self {
        let mid = 0.5 * (lo + hi);
        let whole = base.integrate_on(lo, hi, f);
        let halves = base.integrate_on(lo, mid, f) + base.integrate_on(mid, hi, f);
        Panel {
            lo,
            hi,
            halves,
            err: (whole - halves).abs(),
        }
    }
}

/// Adaptive composite Gauss–Legendre rule on `(0, 1)` tailored to `integrand`.
///
/// Panels are bisected until every local error estimate is below its share
/// of `tol * |I|` and two successive global estimates agree to within
/// `tol * |I|`. The returned rule uses the refined (half-panel) nodes, so it
/// can be reused to integrate other smooth functions against the same
/// integrand weight.
pub fn build_quadrature<F: Fn(f64) -> f64>(
    order: usize,
    tol: f64,
    integrand: F,
) -> Result<QuadratureRule> {
    if order < MIN_ORDER {
        return Err(Error::InvalidArgument(format!(
            "quadrature order must be at least {MIN_ORDER}, got {order}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    let base = QuadratureRule::gauss_legendre(order);
    let width = 1.0 / INITIAL_PANELS as f64;
    let mut panels: Vec<Panel> = (0..INITIAL_PANELS)
        .map(|i| Panel::new(&base, i as f64 * width, (i + 1) as f64 * width, &integrand))
        .collect();

    let mut previous = f64::NAN;
    loop {
        let total: f64 = panels.iter().map(|p| p.halves).sum();
        let err_total: f64 = panels.iter().map(|p| p.err).sum();
        let scale = total.abs().max(f64::MIN_POSITIVE);
        let converged = err_total <= tol * scale && (total - previous).abs() <= tol * scale;
        if converged || (total == 0.0 && err_total == 0.0) {
            break;
        }
        let used = 2 * order * panels.len();
        if used > NODE_BUDGET {
            return Err(Error::Quadrature {
                nodes: used,
                last: total,
                previous,
            });
        }
        let share = tol * scale / panels.len() as f64;
        let worst = panels.iter().map(|p| p.err).fold(0.0, f64::max);
        let mut refined = Vec::with_capacity(panels.len() * 2);
        for p in panels {
            if p.err > share || p.err == worst {
                let mid = 0.5 * (p.lo + p.hi);
                refined.push(Panel::new(&base, p.lo, mid, &integrand));
                refined.push(Panel::new(&base, mid, p.hi, &integrand));
            } else {
                refined.push(p);
            }
        }
        panels = refined;
        previous = total;
    }

    let mut nodes = Vec::with_capacity(2 * order * panels.len());
    let mut weights = Vec::with_capacity(2 * order * panels.len());
    for p in &panels {
        let mid = 0.5 * (p.lo + p.hi);
        base.push_scaled(p.lo, mid, &mut nodes, &mut weights);
        base.push_scaled(mid, p.hi, &mut nodes, &mut weights);
    }
    Ok(QuadratureRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma::{ln_gamma, lower_incomplete_gamma_regularized};
    use approx::assert_relative_eq;

    fn assert_rule_invariants(rule: &QuadratureRule) {
        assert_eq!(rule.nodes().len(), rule.weights().len());
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes().iter().all(|&x| x > 0.0 && x < 1.0));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_invariants_and_exactness() {
        for n in [1, 2, 3, 8, 16, 17, 64, 256] {
            let rule = QuadratureRule::gauss_legendre(n);
            assert_eq!(rule.order(), n);
            assert_rule_invariants(&rule);
            for k in 0..(2 * n).min(40) {
                let exact = 1.0 / (k as f64 + 1.0);
                let got = rule.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-12, "n={n} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn adaptive_examples() {
        let rule = build_quadrature(16, 1e-13, |_| 1.0).unwrap();
        assert_rule_invariants(&rule);
        assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, max_relative = 1e-13);
        let rule = build_quadrature(16, 1e-13, |r| r).unwrap();
        assert_relative_eq!(rule.integrate(|r| r), 0.5, max_relative = 1e-13);

        let f = |r: f64| (1.0 - r).powi(3) * (-2.0 * (1.0 - r)).exp();
        let rule = build_quadrature(16, 1e-13, f).unwrap();
        // Substituting t = 2(1 - r) gives gamma(4, 2) / 2^4.
        let expected = lower_incomplete_gamma_regularized(4.0, 2.0).unwrap() * ln_gamma(4.0).exp() / 16.0;
        assert_relative_eq!(rule.integrate(f), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 0.053_578_702_313_044_86, max_relative = 1e-12);
    }

    #[test]
    fn adaptive_resolves_narrow_peak() {
        let width = 1e-3;
        let f = |r: f64| (-((r - 0.3141) / width).powi(2) / 2.0).exp();
        let rule = build_quadrature(16, 1e-12, f).unwrap();
        assert_rule_invariants(&rule);
        let exact = width * (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(rule.integrate(f), exact, max_relative = 1e-10);
    }

    #[test]
    fn rejects_low_order_and_bad_tolerance() {
        assert!(matches!(build_quadrature(7, 1e-10, |_| 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_quadrature(16, 0.0, |_| 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn budget_exhaustion_reports_estimates() {
        // Hash-like noise never settles under refinement.
        let noise = |r: f64| ((r * 1e7).sin() * 43_758.545_3).rem_euclid(1.0);
        let err = build_quadrature(64, 1e-15, noise).unwrap_err();
        match err {
            Error::Quadrature { nodes, last, previous } => {
                assert!(nodes > NODE_BUDGET);
                assert!((last - 0.5).abs() < 0.05);
                assert!(previous.is_finite());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
