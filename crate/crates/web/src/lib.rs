//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every function returns a flat `Float64Array` of fixed-width rows so the
//! page can plot without any JSON decoding. Errors come back as strings.

use sbminfo::amp::amp_run;
use sbminfo::fixed_point::{se_trajectory, solve_gamma_star, SolverOptions};
use sbminfo::models::{sample_side_info, sample_spiked};
use sbminfo::quadrature::QuadratureRule;
use wasm_bindgen::prelude::*;

/// Largest matrix the AMP demo will allocate (~36 MB packed).
pub const MAX_DEMO_N: usize = 3000;

/// Row width of [`curve`]: `lambda, gamma_star, psi, upper_bound, mmse_limit`.
pub const CURVE_WIDTH: usize = 5;
/// Row width of [`state_evolution`]: `t, gamma, overlap, mse`.
pub const SE_WIDTH: usize = 4;
/// Row width of [`amp_demo`]: `t, overlap, se_overlap, mse, se_mse`.
pub const AMP_WIDTH: usize = 5;

fn err(e: sbminfo::Error) -> String {
    e.to_string()
}

/// Information curve on `steps` evenly spaced points of `[0, lambda_max]`.
#[wasm_bindgen]
pub fn curve(lambda_max: f64, steps: usize, eps: f64) -> Result<Vec<f64>, String> {
    if !(lambda_max > 0.0) || steps < 2 || steps > 2000 {
        return Err("need lambda_max > 0 and 2 <= steps <= 2000".into());
    }
    let rule = QuadratureRule::standard();
    let opts = SolverOptions::default();
    let mut out = Vec::with_capacity(steps * CURVE_WIDTH);
    for k in 0..steps {
        let lambda = lambda_max * k as f64 / (steps - 1) as f64;
        let (g, psi, ratio) = if lambda == 0.0 {
            (0.0, eps * std::f64::consts::LN_2, eps)
        } else {
            let s = solve_gamma_star(lambda, eps, &opts, &rule).map_err(err)?;
            (s.gamma_star, s.psi, s.gamma_star / lambda)
        };
        out.extend([lambda, g, psi, lambda / 4.0 + eps * std::f64::consts::LN_2, 1.0 - ratio * ratio]);
    }
    Ok(out)
}

/// State-evolution recursion from `γ₀ = 0`.
#[wasm_bindgen]
pub fn state_evolution(lambda: f64, eps: f64, iters: usize) -> Result<Vec<f64>, String> {
    if iters == 0 || iters > 1000 {
        return Err("need 1 <= iters <= 1000".into());
    }
    let t = se_trajectory(lambda, eps, iters, &QuadratureRule::standard()).map_err(err)?;
    let mut out = Vec::with_capacity((iters + 1) * SE_WIDTH);
    for k in 0..t.gammas.len() {
        out.extend([k as f64, t.gammas[k], t.overlap(k), t.matrix_mse(k)]);
    }
    Ok(out)
}

/// AMP on a freshly sampled spiked instance, next to its state-evolution
/// prediction.
#[wasm_bindgen]
pub fn amp_demo(n: usize, lambda: f64, eps: f64, iters: usize, seed: u32) -> Result<Vec<f64>, String> {
    if n > MAX_DEMO_N {
        return Err(format!("n is capped at {MAX_DEMO_N} in the browser"));
    }
    if !(eps > 0.0) {
        return Err("AMP needs eps > 0 to break the sign symmetry".into());
    }
    if iters == 0 || iters > 100 {
        return Err("need 1 <= iters <= 100".into());
    }
    let seed = u64::from(seed);
    let inst = sample_spiked(n, lambda, None, seed).map_err(err)?;
    let side = sample_side_info(&inst.labels, eps, seed).map_err(err)?;
    let traj = amp_run(&inst.y, &side, lambda, iters, &inst.labels).map_err(err)?;
    let mut out = Vec::with_capacity(iters * AMP_WIDTH);
    for s in &traj.steps {
        out.extend([s.t as f64, s.empirical_overlap, s.se_overlap, s.empirical_mse, s.se_mse]);
    }
    Ok(out)
}
