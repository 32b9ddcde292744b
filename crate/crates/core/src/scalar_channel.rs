//! The binary-input scalar Gaussian channel `Y₀ = √γ·X₀ + Z₀`.
//!
//! With `X₀` uniform on `{±1}` the posterior mean is `tanh(√γ·Y₀)`, which
//! gives closed expectations
//!
//! ```text
//! mmse(γ) = 1 − E tanh(γ + √γ Z)²
//! I(γ)    = γ − E log cosh(γ + √γ Z)
//! G(γ)    = 1 − mmse(γ)
//! ```
//!
//! evaluated here by quadrature. Erasure side information that reveals `X₀`
//! with probability `ε` scales the error to `(1 − ε)·mmse(γ)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_eps, check_gamma, Error, Result};
use crate::quadrature::QuadratureRule;

/// Overshoot beyond an analytic range that is attributed to roundoff.
const CLAMP_SLACK: f64 = 1e-9;

/// All scalar-channel quantities at one SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarPoint {
    pub gamma: f64,
    /// Mutual information in nats.
    pub mi: f64,
    pub mmse: f64,
    /// `1 − mmse`.
    pub g: f64,
}

/// `log cosh(u)` without overflow: `|u| + log(1 + e^{−2|u|}) − log 2`.
pub fn log_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

fn clamp_to(value: f64, lo: f64, hi: f64, what: &str) -> Result<f64> {
    if value < lo - CLAMP_SLACK || value > hi + CLAMP_SLACK || value.is_nan() {
        return Err(Error::Consistency(format!(
            "{what} = {value} outside [{lo}, {hi}] beyond roundoff"
        )));
    }
    Ok(value.clamp(lo, hi))
}

/// `E tanh(γ + √γ Z)^power`.
pub fn tanh_moment(gamma: f64, power: i32, rule: &QuadratureRule) -> Result<f64> {
    check_gamma(gamma)?;
    let s = gamma.sqrt();
    Ok(rule.expect(|z| (gamma + s * z).tanh().powi(power)))
}

pub fn mmse_scalar(gamma: f64, rule: &QuadratureRule) -> Result<f64> {
    Ok(1.0 - g_overlap(gamma, rule)?)
}

pub fn mi_scalar(gamma: f64, rule: &QuadratureRule) -> Result<f64> {
    check_gamma(gamma)?;
    let s = gamma.sqrt();
    let lc = rule.expect(|z| log_cosh(gamma + s * z));
    clamp_to(gamma - lc, 0.0, LN_2, "mutual information")
}

/// `G(γ) = 1 − mmse(γ) = E tanh(γ + √γ Z)²`, evaluated directly so it keeps
/// full relative precision as `γ → 0`.
pub fn g_overlap(gamma: f64, rule: &QuadratureRule) -> Result<f64> {
    check_gamma(gamma)?;
    let s = gamma.sqrt();
    let g = rule.expect(|z| {
        let t = (gamma + s * z).tanh();
        t * t
    });
    clamp_to(g, 0.0, 1.0, "G")
}

/// `G'(γ) = E sech(γ + √γ Z)⁴`.
pub fn g_derivative(gamma: f64, rule: &QuadratureRule) -> Result<f64> {
    check_gamma(gamma)?;
    let s = gamma.sqrt();
    Ok(rule.expect(|z| {
        let t = (gamma + s * z).tanh();
        let sech2 = 1.0 - t * t;
        sech2 * sech2
    }))
}

/// Error with erasure side information revealing the input w.p. `eps`.
pub fn mmse_eps(gamma: f64, eps: f64, rule: &QuadratureRule) -> Result<f64> {
    check_eps(eps)?;
    Ok((1.0 - eps) * mmse_scalar(gamma, rule)?)
}

pub fn scalar_point(gamma: f64, rule: &QuadratureRule) -> Result<ScalarPoint> {
    let mmse = mmse_scalar(gamma, rule)?;
    Ok(ScalarPoint {
        gamma,
        mi: mi_scalar(gamma, rule)?,
        mmse,
        g: 1.0 - mmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_hermite;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn rule() -> QuadratureRule {
        QuadratureRule::standard()
    }

    #[test]
    fn zero_snr() {
        let r = rule();
        assert_eq!(mmse_scalar(0.0, &r).unwrap(), 1.0);
        assert_eq!(mi_scalar(0.0, &r).unwrap(), 0.0);
        assert_eq!(g_overlap(0.0, &r).unwrap(), 0.0);
    }

    #[test]
    fn linear_estimator_bound_at_one() {
        assert!(mmse_scalar(1.0, &rule()).unwrap() <= 0.5);
    }

    #[test]
    fn mmse_at_two_matches_monte_carlo() {
        // Independent oracle: 10^7 direct draws of 1 − tanh(2 + √2 Z)².
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000_000usize;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let v = 1.0 - (2.0 + 2f64.sqrt() * z).tanh().powi(2);
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let q = mmse_scalar(2.0, &rule()).unwrap();
        assert!((q - mean).abs() < 3.0 * se, "quadrature {q}, MC {mean} ± {se}");
        // Adaptive high-precision reference computed offline.
        assert_abs_diff_eq!(q, 0.231_018_221_929_295_78, epsilon = 1e-13);
    }

    #[test]
    fn information_saturates() {
        assert_abs_diff_eq!(mi_scalar(50.0, &rule()).unwrap(), LN_2, epsilon = 1e-3);
        assert_abs_diff_eq!(g_overlap(100.0, &rule()).unwrap(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn i_mmse_central_difference() {
        let r = rule();
        let d = (mi_scalar(1.001, &r).unwrap() - mi_scalar(0.999, &r).unwrap()) / 0.002;
        assert_abs_diff_eq!(d, 0.5 * mmse_scalar(1.0, &r).unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn g_is_complement() {
        let r = rule();
        for gamma in [0.0, 1e-8, 0.3, 2.0, 40.0] {
            let g = g_overlap(gamma, &r).unwrap();
            assert_abs_diff_eq!(g, 1.0 - mmse_scalar(gamma, &r).unwrap(), epsilon = 1e-15);
        }
        // Direct evaluation keeps relative precision near zero: G(γ) = γ − γ² + O(γ³).
        let g = g_overlap(1e-9, &r).unwrap();
        assert!(((g - 1e-9) / 1e-9).abs() < 1e-8);
    }

    #[test]
    fn erasure_scaling() {
        let r = rule();
        assert_abs_diff_eq!(mmse_eps(0.0, 0.3, &r).unwrap(), 0.7, epsilon = 1e-15);
        assert_eq!(mmse_eps(3.0, 1.0, &r).unwrap(), 0.0);
        assert_eq!(mmse_eps(2.0, 0.0, &r).unwrap(), mmse_scalar(2.0, &r).unwrap());
        assert!(matches!(mmse_eps(1.0, 1.5, &r), Err(Error::Parameter { .. })));
        assert!(matches!(mmse_eps(1.0, -0.1, &r), Err(Error::Parameter { .. })));
    }

    #[test]
    fn negative_gamma_rejected() {
        let r = rule();
        assert!(mmse_scalar(-1.0, &r).is_err());
        assert!(mi_scalar(-1e-9, &r).is_err());
        assert!(g_overlap(f64::NAN, &r).is_err());
    }

    #[test]
    fn log_cosh_large_arguments() {
        assert_abs_diff_eq!(log_cosh(0.3), 0.3f64.cosh().ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(log_cosh(-5.0), 5.0f64.cosh().ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(log_cosh(1000.0), 1000.0 - LN_2, epsilon = 1e-12);
    }

    #[test]
    fn monotone_on_grid() {
        let r = rule();
        let mut prev_m = mmse_scalar(0.0, &r).unwrap();
        let mut prev_g = g_overlap(0.0, &r).unwrap();
        for k in 1..=500 {
            let gamma = 50.0 * k as f64 / 500.0;
            let m = mmse_scalar(gamma, &r).unwrap();
            let g = g_overlap(gamma, &r).unwrap();
            assert!(m <= prev_m + 1e-12);
            assert!(g >= prev_g - 1e-12);
            prev_m = m;
            prev_g = g;
        }
    }

    #[test]
    fn gauss_hermite_and_panels_agree_where_smooth() {
        let gh = gauss_hermite(61).unwrap();
        for gamma in [0.0, 0.1, 0.5] {
            assert_abs_diff_eq!(
                mmse_scalar(gamma, &gh).unwrap(),
                mmse_scalar(gamma, &rule()).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    proptest! {
        #[test]
        fn scalar_point_invariants(gamma in 0.0f64..60.0) {
            let p = scalar_point(gamma, &rule()).unwrap();
            prop_assert_eq!(p.mmse + p.g, 1.0);
            prop_assert!(p.mi >= 0.0 && p.mi <= LN_2);
            prop_assert!(p.mmse <= 1.0 / (1.0 + gamma) + 1e-9);
            prop_assert!((0.0..=1.0).contains(&p.mmse));
        }
    }
}
