//! Log-gamma, the regularized lower incomplete gamma function and the
//! truncated-gamma kernel `phi_d` that drives every Stein-prior quantity.

use crate::error::{Error, Result};

const MAX_ITER: usize = 100_000;
const EPS: f64 = 1e-17;
const FPMIN: f64 = 1e-300;

/// Below this value of `a^2 / 2` the series for `phi_d` is cut to two terms.
const PHI_TWO_TERM_CUTOFF: f64 = 1e-12;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range.
        return ln_gamma(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn check_args(function: &'static str, s: f64, z: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(function, format!("shape must be positive, got {s}")));
    }
    if !(z >= 0.0) {
        return Err(Error::domain(function, format!("argument must be nonnegative, got {z}")));
    }
    Ok(())
}

/// `ln S` with `S = sum_n z^n / (s (s+1) ... (s+n))`, so that
/// `gamma(s, z) = z^s e^{-z} S`.
fn ln_series_sum(s: f64, z: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut denom = s;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= z / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum.ln()
}

/// `ln Gamma(s, z)` (upper, unregularized) by modified Lentz continued fraction.
fn ln_upper_cf(s: f64, z: f64) -> f64 {
    let mut b = z + 1.0 - s;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    -z + s * z.ln() + h.ln()
}

/// Natural log of the unregularized lower incomplete gamma `gamma(s, z)`.
///
/// Returns `-inf` at `z = 0`.
pub fn ln_lower_incomplete_gamma(s: f64, z: f64) -> Result<f64> {
    check_args("ln_lower_incomplete_gamma", s, z)?;
    if z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if z.is_infinite() {
        return Ok(ln_gamma(s));
    }
    if z < s + 1.0 {
        Ok(s * z.ln() - z + ln_series_sum(s, z))
    } else {
        let ln_g = ln_gamma(s);
        let q = (ln_upper_cf(s, z) - ln_g).exp();
        Ok(ln_g + (-q).ln_1p())
    }
}

/// Regularized lower incomplete gamma `P(s, z) = gamma(s, z) / Gamma(s)`.
pub fn lower_incomplete_gamma_regularized(s: f64, z: f64) -> Result<f64> {
    check_args("lower_incomplete_gamma_regularized", s, z)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(1.0);
    }
    if z < s + 1.0 {
        let p = (s * z.ln() - z + ln_series_sum(s, z) - ln_gamma(s)).exp();
        Ok(p.min(1.0))
    } else {
        let q = (ln_upper_cf(s, z) - ln_gamma(s)).exp();
        Ok((1.0 - q).max(0.0))
    }
}

/// `ln phi_d(a)` where `phi_d(a) = a^{-(d-2)} gamma(d/2 - 1, a^2/2)`.
///
/// On the series branch the powers of `a` cancel analytically, so the
/// function is finite and smooth down to `a = 0`.
pub fn ln_phi(d: usize, a: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::domain("phi", format!("dimension must be at least 3, got {d}")));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain("phi", format!("argument must be finite and nonnegative, got {a}")));
    }
    let s = d as f64 / 2.0 - 1.0;
    let z = a * a / 2.0;
    let ln_2 = std::f64::consts::LN_2;
    if z < PHI_TWO_TERM_CUTOFF {
        let sum = 1.0 / s + z / (s * (s + 1.0));
        Ok(-s * ln_2 - z + sum.ln())
    } else if z < s + 1.0 {
        Ok(-s * ln_2 - z + ln_series_sum(s, z))
    } else {
        let ln_g = ln_gamma(s);
        let q = (ln_upper_cf(s, z) - ln_g).exp();
        Ok(-(d as f64 - 2.0) * a.ln() + ln_g + (-q).ln_1p())
    }
}

/// `phi_d(a) = a^{-(d-2)} int_0^{a^2/2} t^{d/2-2} e^{-t} dt` for `d >= 3`, `a >= 0`.
pub fn phi(d: usize, a: f64) -> Result<f64> {
    ln_phi(d, a).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0_f64;
        for n in 1..30 {
            assert_relative_eq!(ln_gamma(n as f64), fact.ln(), max_relative = 1e-13, epsilon = 1e-14);
            fact *= n as f64;
        }
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(0.1), statrs::function::gamma::ln_gamma(0.1), max_relative = 1e-13);
    }

    #[test]
    fn regularized_lower_gamma_examples() {
        let p = lower_incomplete_gamma_regularized(1.0, 1.0).unwrap();
        assert_relative_eq!(p, 1.0 - (-1.0_f64).exp(), max_relative = 1e-14);
        assert_eq!(lower_incomplete_gamma_regularized(3.7, 0.0).unwrap(), 0.0);
        // P(1/2, 1/2) = erf(1/sqrt 2) = 2 Phi(1) - 1
        let p = lower_incomplete_gamma_regularized(0.5, 0.5).unwrap();
        assert_relative_eq!(p, 0.682_689_492_137_085_9, max_relative = 1e-13);
        assert_eq!(lower_incomplete_gamma_regularized(2.0, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn regularized_lower_gamma_domain_errors() {
        assert!(lower_incomplete_gamma_regularized(0.0, 1.0).is_err());
        assert!(lower_incomplete_gamma_regularized(-1.0, 1.0).is_err());
        assert!(lower_incomplete_gamma_regularized(1.0, -0.5).is_err());
        assert!(lower_incomplete_gamma_regularized(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn regularized_lower_gamma_agrees_with_statrs() {
        for &s in &[0.5, 1.0, 2.5, 4.0, 10.0, 49.0, 51.0, 150.0] {
            for &z in &[1e-3, 0.3, 1.0, 3.0, 9.9, 11.0, 40.0, 60.0, 200.0] {
                let ours = lower_incomplete_gamma_regularized(s, z).unwrap();
                let theirs = statrs::function::gamma::gamma_lr(s, z);
                assert!(
                    (ours - theirs).abs() <= 1e-12 * theirs.max(1e-300) + 1e-14,
                    "P({s}, {z}): {ours} vs {theirs}"
                );
            }
        }
    }

    #[test]
    fn ln_lower_gamma_is_consistent_with_regularized() {
        for &s in &[0.5, 3.0, 52.0] {
            for &z in &[0.1, 2.0, 53.5, 80.0] {
                let lhs = ln_lower_incomplete_gamma(s, z).unwrap();
                let rhs = lower_incomplete_gamma_regularized(s, z).unwrap().ln() + ln_gamma(s);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
        assert_eq!(ln_lower_incomplete_gamma(2.0, 0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn phi_examples() {
        assert_relative_eq!(
            phi(4, 2.0_f64.sqrt()).unwrap(),
            0.5 * (1.0 - (-1.0_f64).exp()),
            max_relative = 1e-13
        );
        assert_relative_eq!(phi(4, 0.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(phi(3, 1.0).unwrap(), 1.210_035_619_311_108_8, max_relative = 1e-12);
    }

    #[test]
    fn phi_domain_errors() {
        assert!(phi(2, 1.0).is_err());
        assert!(phi(1, 1.0).is_err());
        assert!(phi(5, -1e-3).is_err());
        assert!(phi(5, f64::INFINITY).is_err());
    }

    #[test]
    fn phi_is_continuous_at_zero() {
        for d in 3..40 {
            let s = d as f64 / 2.0 - 1.0;
            let limit = 2f64.powf(-s) / s;
            assert_relative_eq!(phi(d, 1e-8).unwrap(), limit, max_relative = 1e-6);
            assert_relative_eq!(phi(d, 0.0).unwrap(), limit, max_relative = 1e-14);
        }
    }

    #[test]
    fn phi_branches_join_smoothly() {
        // Straddle the series / continued-fraction switch at a^2 / 2 = s + 1.
        for d in [3usize, 10, 100] {
            let s = d as f64 / 2.0 - 1.0;
            let a0 = (2.0 * (s + 1.0)).sqrt();
            let below = phi(d, a0 * (1.0 - 1e-9)).unwrap();
            let above = phi(d, a0 * (1.0 + 1e-9)).unwrap();
            assert_relative_eq!(below, above, max_relative = 1e-7);
        }
    }
}
