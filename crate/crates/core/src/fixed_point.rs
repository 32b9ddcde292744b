//! Effective-SNR fixed point, the single-letter potential Ψ and state
//! evolution.
//!
//! The effective SNR `γ*(λ, ε)` is the largest non-negative solution of
//!
//! ```text
//! γ = λ·(1 − (1 − ε)·mmse(γ))
//! ```
//!
//! and the asymptotic per-vertex mutual information is
//! `Ψ(γ*, λ, ε) = λ/4 + γ*²/(4λ) − γ*/2 + ε·log 2 + (1 − ε)·I(γ*)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_eps, check_gamma, check_lambda, Error, Result};
use crate::quadrature::QuadratureRule;
use crate::scalar_channel::{g_overlap, mi_scalar};

/// Width of the window around λ = 1 (at ε = 0) where the iteration map has
/// slope close to one.
pub const NEAR_CRITICAL_WINDOW: f64 = 1e-3;

/// Iterations after which a slowly contracting iteration hands over to
/// bisection.
const STALL_CHECK_AFTER: usize = 200;
const STALL_RATIO: f64 = 0.99;
/// Multiple of the tolerance below which an `ε = 0` solution is the zero root.
const ZERO_SNAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Iteration,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub lambda: f64,
    pub eps: f64,
    pub gamma_star: f64,
    pub psi: f64,
    /// Map evaluations spent, iteration and bisection combined.
    pub iterations: usize,
    /// `|γ* − λ(1 − (1 − ε)·mmse(γ*))|`.
    pub residual: f64,
    pub method: SolveMethod,
    /// Set when `ε = 0` and `|λ − 1| < NEAR_CRITICAL_WINDOW`.
    pub near_critical: bool,
}

/// The update map `γ ↦ λ(1 − (1 − ε)·mmse(γ)) = λ(ε + (1 − ε)·G(γ))`.
pub fn update_map(gamma: f64, lambda: f64, eps: f64, rule: &QuadratureRule) -> Result<f64> {
    Ok(lambda * (eps + (1.0 - eps) * g_overlap(gamma, rule)?))
}

/// `Ψ(γ, λ, ε)`.
pub fn psi(gamma: f64, lambda: f64, eps: f64, rule: &QuadratureRule) -> Result<f64> {
    check_gamma(gamma)?;
    check_lambda(lambda)?;
    check_eps(eps)?;
    Ok(lambda / 4.0 + gamma * gamma / (4.0 * lambda) - gamma / 2.0
        + eps * LN_2
        + (1.0 - eps) * mi_scalar(gamma, rule)?)
}

/// Iterates of the update map started from `γ⁰ = λ` (the solver path).
pub fn solver_path(
    lambda: f64,
    eps: f64,
    steps: usize,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_eps(eps)?;
    let mut path = Vec::with_capacity(steps + 1);
    let mut g = lambda;
    path.push(g);
    for _ in 0..steps {
        g = update_map(g, lambda, eps, rule)?;
        path.push(g);
    }
    Ok(path)
}

/// Largest non-negative solution of the fixed-point equation.
///
/// Iterates from `γ⁰ = λ`; the iterates decrease monotonically to `γ*`
/// because the update map is increasing and concave. When the contraction
/// stalls (near `λ = 1` the map has slope one at the fixed point) the
/// remaining budget is spent on bisection of `h(γ) = γ − map(γ)`, bracketed
/// between the last iterate and a point where `h < 0`.
pub fn solve_gamma_star(
    lambda: f64,
    eps: f64,
    opts: &SolverOptions,
    rule: &QuadratureRule,
) -> Result<FixedPointSolution> {
    check_lambda(lambda)?;
    check_eps(eps)?;
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {}", opts.tol)));
    }
    let near_critical = eps == 0.0 && (lambda - 1.0).abs() < NEAR_CRITICAL_WINDOW;

    let mut g = lambda;
    let mut prev_step = f64::INFINITY;
    let mut evals = 0usize;
    let mut method = SolveMethod::Iteration;
    let mut gamma_star = None;

    while evals < opts.max_iter {
        let next = update_map(g, lambda, eps, rule)?;
        evals += 1;
        let step = (g - next).abs();
        g = next;
        if step < opts.tol {
            gamma_star = Some(g);
            break;
        }
        if evals >= STALL_CHECK_AFTER && step > STALL_RATIO * prev_step {
            method = SolveMethod::Bisection;
            break;
        }
        prev_step = step;
    }

    if method == SolveMethod::Bisection {
        gamma_star = bisect_largest_root(lambda, eps, g, opts, rule, &mut evals)?;
    }

    // Without side information γ = 0 is always a root; an iteration that
    // decays into the tolerance band has converged to it.
    let gamma_star = gamma_star.map(|g| if eps == 0.0 && g <= ZERO_SNAP * opts.tol { 0.0 } else { g });
    let Some(gamma_star) = gamma_star else {
        let residual = (g - update_map(g, lambda, eps, rule)?).abs();
        return Err(Error::Convergence {
            iterations: evals,
            last: g,
            residual,
        });
    };
    let residual = (gamma_star - update_map(gamma_star, lambda, eps, rule)?).abs();
    Ok(FixedPointSolution {
        lambda,
        eps,
        gamma_star,
        psi: psi(gamma_star, lambda, eps, rule)?,
        iterations: evals,
        residual,
        method,
        near_critical,
    })
}

/// Bisection on `h(γ) = γ − map(γ)` below `upper`, where `h(upper) >= 0`.
/// Returns `None` when the evaluation budget runs out.
fn bisect_largest_root(
    lambda: f64,
    eps: f64,
    upper: f64,
    opts: &SolverOptions,
    rule: &QuadratureRule,
    evals: &mut usize,
) -> Result<Option<f64>> {
    let h = |g: f64| -> Result<f64> { Ok(g - update_map(g, lambda, eps, rule)?) };
    let mut hi = upper;
    let mut lo = 0.0;
    if eps == 0.0 {
        // h(0) = 0 here, so search down from `hi` for a strictly negative value.
        let mut probe = hi;
        let mut found = false;
        while probe > opts.tol * 1e-3 {
            probe *= 0.5;
            *evals += 1;
            if h(probe)? < 0.0 {
                found = true;
                break;
            }
            hi = probe;
            if *evals >= opts.max_iter {
                return Ok(None);
            }
        }
        if !found {
            return Ok(Some(0.0));
        }
        lo = probe;
    }
    while hi - lo > opts.tol {
        if *evals >= opts.max_iter {
            return Ok(None);
        }
        let mid = 0.5 * (lo + hi);
        *evals += 1;
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// State-evolution trajectory `γ_0 = 0, γ_{t+1} = map(γ_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeTrajectory {
    pub lambda: f64,
    pub eps: f64,
    pub gammas: Vec<f64>,
    /// `μ_t = γ_t/√λ`.
    pub mus: Vec<f64>,
    /// `σ_t² = γ_t/λ`.
    pub sigmas2: Vec<f64>,
    pub converged: bool,
}

impl SeTrajectory {
    /// Predicted overlap `γ_t/λ` of the AMP estimate at step `t`.
    pub fn overlap(&self, t: usize) -> f64 {
        self.gammas[t] / self.lambda
    }

    /// Predicted matrix MSE `1 − γ_t²/λ²` at step `t`.
    pub fn matrix_mse(&self, t: usize) -> f64 {
        let r = self.overlap(t);
        1.0 - r * r
    }
}

pub fn se_trajectory(
    lambda: f64,
    eps: f64,
    steps: usize,
    rule: &QuadratureRule,
) -> Result<SeTrajectory> {
    check_lambda(lambda)?;
    check_eps(eps)?;
    if steps == 0 {
        return Err(Error::param("steps", "must be at least 1"));
    }
    let mut gammas = Vec::with_capacity(steps + 1);
    gammas.push(0.0);
    let mut last_move = f64::INFINITY;
    for t in 0..steps {
        let next = update_map(gammas[t], lambda, eps, rule)?;
        last_move = (next - gammas[t]).abs();
        gammas.push(next);
    }
    let sqrt_lambda = lambda.sqrt();
    Ok(SeTrajectory {
        lambda,
        eps,
        mus: gammas.iter().map(|g| g / sqrt_lambda).collect(),
        sigmas2: gammas.iter().map(|g| g / lambda).collect(),
        gammas,
        converged: last_move < 1e-10,
    })
}

/// Asymptotic matrix MMSE `1 − (γ*(λ)/λ)²` at `ε = 0`.
pub fn limit_mmse_matrix(lambda: f64, rule: &QuadratureRule) -> Result<f64> {
    let sol = solve_gamma_star(lambda, 0.0, &SolverOptions::default(), rule)?;
    let r = sol.gamma_star / lambda;
    Ok(1.0 - r * r)
}

/// `|Ψ(γ*(λ,ε), λ, ε) − ε·log 2 − ¼∫₀^λ (1 − γ*(u,ε)²/u²) du|` with
/// composite Simpson over `n_panels` panels.
pub fn psi_integral_check(
    lambda: f64,
    eps: f64,
    rule: &QuadratureRule,
    n_panels: usize,
) -> Result<f64> {
    check_lambda(lambda)?;
    check_eps(eps)?;
    if eps == 0.0 {
        return Err(Error::param("eps", "must be > 0 for the integral identity"));
    }
    if n_panels == 0 {
        return Err(Error::param("n_panels", "must be at least 1"));
    }
    let opts = SolverOptions::default();
    let integrand = |u: f64| -> Result<f64> {
        if u == 0.0 {
            // γ*(u, ε)/u → ε as u → 0.
            return Ok(1.0 - eps * eps);
        }
        let r = solve_gamma_star(u, eps, &opts, rule)?.gamma_star / u;
        Ok(1.0 - r * r)
    };
    let h = lambda / n_panels as f64;
    let mut integral = 0.0;
    let mut left = integrand(0.0)?;
    for k in 0..n_panels {
        let a = k as f64 * h;
        let mid = integrand(a + 0.5 * h)?;
        let right = integrand(a + h)?;
        integral += h / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    let at_lambda = solve_gamma_star(lambda, eps, &opts, rule)?;
    Ok((at_lambda.psi - eps * LN_2 - 0.25 * integral).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_channel::mmse_scalar;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const G_STAR_2: f64 = 1.236_895_018_697_645;

    fn rule() -> QuadratureRule {
        QuadratureRule::standard()
    }

    fn solve(lambda: f64, eps: f64) -> FixedPointSolution {
        solve_gamma_star(lambda, eps, &SolverOptions::default(), &rule()).unwrap()
    }

    /// Independent bisection on γ − λ(1 − (1 − ε)mmse(γ)) over (1e−6, λ].
    fn oracle_root(lambda: f64, eps: f64) -> f64 {
        let r = rule();
        let h = |g: f64| g - lambda * (1.0 - (1.0 - eps) * mmse_scalar(g, &r).unwrap());
        let (mut lo, mut hi) = (1e-6, lambda);
        if h(lo) >= 0.0 {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn below_threshold() {
        let s = solve(0.5, 0.0);
        assert_eq!(s.gamma_star, 0.0);
        assert_abs_diff_eq!(s.psi, 0.125, epsilon = 1e-12);
        let s = solve(1.0, 0.0);
        assert!(s.gamma_star <= 1e-12);
        assert!(s.near_critical);
    }

    #[test]
    fn above_threshold_matches_bisection_oracle() {
        let s = solve(2.0, 0.0);
        let oracle = oracle_root(2.0, 0.0);
        assert_abs_diff_eq!(oracle, G_STAR_2, epsilon = 1e-9);
        assert_abs_diff_eq!(s.gamma_star, oracle, epsilon = 1e-9);
        assert!(s.gamma_star > 0.0 && s.gamma_star < 2.0);
        assert_eq!(s.method, SolveMethod::Iteration);
    }

    #[test]
    fn lower_bound_with_side_information() {
        let (lambda, eps) = (4.0, 0.1);
        let lb = 0.5 * (lambda - 1.0 + ((lambda - 1.0f64).powi(2) + 4.0 * lambda * eps).sqrt());
        assert!(solve(lambda, eps).gamma_star >= lb - 1e-12);
    }

    #[test]
    fn psi_formula_at_zero() {
        let r = rule();
        assert_abs_diff_eq!(psi(0.0, 3.0, 0.0, &r).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(psi(0.0, 3.0, 0.2, &r).unwrap(), 0.75 + 0.2 * LN_2, epsilon = 1e-15);
    }

    #[test]
    fn psi_minimized_at_gamma_star() {
        let r = rule();
        let (mut best_g, mut best) = (0.0, f64::INFINITY);
        for k in 0..=2000 {
            let g = k as f64 * 1e-3;
            let v = psi(g, 2.0, 0.0, &r).unwrap();
            if v < best {
                best = v;
                best_g = g;
            }
        }
        let s = solve(2.0, 0.0);
        assert!((best_g - s.gamma_star).abs() <= 1e-3);
        assert!((best - s.psi).abs() <= 1e-6);
    }

    #[test]
    fn state_evolution() {
        let r = rule();
        let se = se_trajectory(3.0, 0.0, 10, &r).unwrap();
        assert!(se.gammas.iter().all(|&g| g == 0.0));
        let se = se_trajectory(2.0, 0.1, 200, &r).unwrap();
        assert_abs_diff_eq!(se.gammas[1], 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(se.gammas[200], solve(2.0, 0.1).gamma_star, epsilon = 1e-8);
        assert!(se.converged);
        for t in 0..se.gammas.len() {
            assert!(se.gammas[t] >= 0.0 && se.gammas[t] <= 2.0);
            if t > 0 {
                assert!(se.gammas[t] >= se.gammas[t - 1]);
            }
            assert_abs_diff_eq!(se.mus[t], 2f64.sqrt() * se.sigmas2[t], epsilon = 1e-12);
        }
        assert!(se_trajectory(2.0, 0.1, 0, &r).is_err());
    }

    #[test]
    fn matrix_mmse_limit() {
        let r = rule();
        assert_eq!(limit_mmse_matrix(0.8, &r).unwrap(), 1.0);
        assert_abs_diff_eq!(limit_mmse_matrix(1.0, &r).unwrap(), 1.0, epsilon = 1e-12);
        let expected = 1.0 - (G_STAR_2 / 2.0).powi(2);
        assert_abs_diff_eq!(limit_mmse_matrix(2.0, &r).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn integral_identity() {
        let r = rule();
        assert!(psi_integral_check(2.0, 0.1, &r, 400).unwrap() < 1e-4);
        assert!(psi_integral_check(0.5, 0.2, &r, 200).unwrap() < 1e-4);
        assert!(psi_integral_check(1.0, 0.0, &r, 10).is_err());
    }

    #[test]
    fn small_lambda_limit() {
        let s = solve(1e-4, 0.2);
        assert_abs_diff_eq!(s.psi, 0.2 * LN_2, epsilon = 1e-4);
    }

    #[test]
    fn threshold_dichotomy() {
        for k in 1..=30 {
            let lambda = k as f64 / 10.0;
            let s = solve(lambda, 0.0);
            if lambda <= 1.0 {
                assert!(s.gamma_star <= 1e-9, "λ = {lambda}: γ* = {}", s.gamma_star);
            } else {
                assert!(s.gamma_star > 0.0 && s.gamma_star < lambda);
            }
            assert!(s.residual <= 1e-12);
        }
    }

    #[test]
    fn elementary_upper_bound() {
        let r = rule();
        for k in 1..=40 {
            let lambda = k as f64 * 0.25;
            let s = solve(lambda, 0.0);
            assert!(psi(s.gamma_star, lambda, 0.0, &r).unwrap() <= lambda / 4.0 + 1e-9);
        }
        assert!(solve(2.0, 0.0).psi < 0.5 - 1e-4);
        assert_abs_diff_eq!(solve(50.0, 0.0).psi, LN_2, epsilon = 1e-2);
    }

    #[test]
    fn solver_path_is_nonincreasing() {
        for (lambda, eps) in [(2.0, 0.0), (4.0, 0.1), (0.7, 0.3), (1.2, 0.0)] {
            let path = solver_path(lambda, eps, 300, &rule()).unwrap();
            assert!(path.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }
    }

    #[test]
    fn convergence_error_when_budget_exhausted() {
        let opts = SolverOptions {
            tol: 1e-12,
            max_iter: 3,
        };
        match solve_gamma_star(2.0, 0.0, &opts, &rule()) {
            Err(Error::Convergence { iterations, .. }) => assert_eq!(iterations, 3),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn near_critical_uses_bisection() {
        let s = solve(1.0005, 0.0);
        assert!(s.near_critical);
        assert_abs_diff_eq!(s.gamma_star, oracle_root(1.0005, 0.0), epsilon = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn solver_agrees_with_bisection(lambda in 0.01f64..10.0, eps in 0.0f64..0.5) {
            let s = solve(lambda, eps);
            prop_assert!((s.gamma_star - oracle_root(lambda, eps)).abs() < 1e-8);
            prop_assert!(s.gamma_star >= 0.0 && s.gamma_star <= lambda);
            prop_assert!(s.psi <= lambda / 4.0 + eps * LN_2 + 1e-9);
        }
    }
}
