use std::f64::consts::LN_2;

use proptest::prelude::*;
use sbminfo::fixed_point::*;
use sbminfo::quadrature::{QuadratureRule, DEFAULT_HALF_WIDTH, DEFAULT_POINTS_PER_PANEL};
use sbminfo::scalar_channel::*;

fn rule() -> QuadratureRule {
    QuadratureRule::standard()
}

/// Largest root of `γ = λ(1 − (1−ε)·mmse(γ))` by bisection on a bracket
/// found by scanning down from `λ`.
fn bisection_oracle(lambda: f64, eps: f64) -> f64 {
    let r = rule();
    let h = |g: f64| lambda * (1.0 - (1.0 - eps) * mmse_scalar(g, &r).unwrap()) - g;
    let mut hi = lambda;
    if h(hi) >= 0.0 {
        return hi;
    }
    let mut lo = hi;
    while lo > 1e-9 && h(lo) < 0.0 {
        lo *= 0.5;
    }
    if h(lo) < 0.0 {
        return 0.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if h(m) >= 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn solver_agrees_with_bisection(lambda in 0.05f64..10.0, eps in 0.0f64..0.5) {
        // The region |λ − 1| < 0.02 at ε = 0 is critically slow for both
        // methods and is covered by the dichotomy test.
        prop_assume!(eps > 0.0 || (lambda - 1.0).abs() > 0.02);
        let s = solve_gamma_star(lambda, eps, &SolverOptions::default(), &rule()).unwrap();
        prop_assert!((s.gamma_star - bisection_oracle(lambda, eps)).abs() < 1e-8);
        prop_assert!(s.gamma_star >= 0.0 && s.gamma_star <= lambda);
        prop_assert!(s.psi <= lambda / 4.0 + eps * LN_2 + 1e-9);
    }
}

#[test]
fn g_is_concave_on_a_fine_grid() {
    let r = rule();
    let g: Vec<f64> = (0..500).map(|k| g_overlap(k as f64 * 0.02, &r).unwrap()).collect();
    for w in g.windows(3) {
        assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9);
    }
}

#[test]
fn g_derivative_is_sech_fourth_moment() {
    let r = rule();
    let h = 1e-4;
    for gamma in [0.5, 1.0, 2.0, 5.0] {
        let fd = (g_overlap(gamma + h, &r).unwrap() - g_overlap(gamma - h, &r).unwrap()) / (2.0 * h);
        assert!((fd - g_derivative(gamma, &r).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn odd_and_even_tanh_moments_coincide() {
    let r = rule();
    for gamma in [0.5, 2.0] {
        for k in 1..=3 {
            let odd = tanh_moment(gamma, 2 * k - 1, &r).unwrap();
            let even = tanh_moment(gamma, 2 * k, &r).unwrap();
            assert!((odd - even).abs() < 1e-8, "γ={gamma}, k={k}");
        }
    }
}

#[test]
fn scalar_i_mmse() {
    let r = rule();
    let h = 1e-3;
    for gamma in [0.5, 1.0, 2.0, 5.0] {
        let d = (mi_scalar(gamma + h, &r).unwrap() - mi_scalar(gamma - h, &r).unwrap()) / (2.0 * h);
        assert!((d - mmse_scalar(gamma, &r).unwrap() / 2.0).abs() < 1e-6);
    }
}

#[test]
fn panel_refinement_converges() {
    let coarse = QuadratureRule::composite(DEFAULT_HALF_WIDTH, 50, DEFAULT_POINTS_PER_PANEL).unwrap();
    let fine = QuadratureRule::composite(DEFAULT_HALF_WIDTH, 100, DEFAULT_POINTS_PER_PANEL).unwrap();
    for k in 0..=100 {
        let gamma = k as f64 * 0.5;
        let a = scalar_point(gamma, &coarse).unwrap();
        let b = scalar_point(gamma, &fine).unwrap();
        assert!((a.mmse - b.mmse).abs() < 1e-10, "γ={gamma}");
        assert!((a.mi - b.mi).abs() < 1e-10, "γ={gamma}");
    }
}

#[test]
fn solver_examples() {
    let r = rule();
    let opts = SolverOptions::default();
    let s = solve_gamma_star(0.5, 0.0, &opts, &r).unwrap();
    assert_eq!(s.gamma_star, 0.0);
    assert!((s.psi - 0.125).abs() < 1e-12);
    assert!(solve_gamma_star(1.0, 0.0, &opts, &r).unwrap().gamma_star <= opts.tol);
    let g = solve_gamma_star(2.0, 0.0, &opts, &r).unwrap().gamma_star;
    assert!(g > 0.0 && g < 2.0);
    assert!((g - bisection_oracle(2.0, 0.0)).abs() < 1e-9);
    let (l, e) = (4.0f64, 0.1);
    let bound = 0.5 * (l - 1.0 + ((l - 1.0).powi(2) + 4.0 * l * e).sqrt());
    assert!(solve_gamma_star(l, e, &opts, &r).unwrap().gamma_star >= bound - opts.tol);
}

#[test]
fn trajectory_examples() {
    let r = rule();
    let t = se_trajectory(3.0, 0.0, 20, &r).unwrap();
    assert!(t.gammas.iter().all(|&g| g == 0.0));
    let t = se_trajectory(2.0, 0.1, 200, &r).unwrap();
    assert!((t.gammas[1] - 0.2).abs() < 1e-12);
    let s = solve_gamma_star(2.0, 0.1, &SolverOptions::default(), &r).unwrap();
    assert!((t.gammas[200] - s.gamma_star).abs() < 1e-8);
    for (k, w) in t.gammas.windows(2).enumerate() {
        assert!(w[1] >= w[0] && w[1] <= 2.0);
        assert!((t.mus[k] - 2f64.sqrt() * t.sigmas2[k]).abs() < 1e-12);
    }
}

#[test]
fn limit_mmse_examples() {
    let r = rule();
    assert_eq!(limit_mmse_matrix(0.8, &r).unwrap(), 1.0);
    assert!((limit_mmse_matrix(1.0, &r).unwrap() - 1.0).abs() < 1e-12);
    let g = bisection_oracle(2.0, 0.0);
    assert!((limit_mmse_matrix(2.0, &r).unwrap() - (1.0 - (g / 2.0).powi(2))).abs() < 1e-9);
}
