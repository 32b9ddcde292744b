//! Frozen thresholds for checks whose constants are not known in closed
//! form. Each value was set once from pilot runs (2000 Monte Carlo samples
//! per run) and is not tuned afterwards.

/// Constant in `|d(I/n)/dθ − ¼·MMSE_n| <= C_FIX·√(θ/(n p̄(1−p̄))) + 3·stderr`.
///
/// Pilot at `n = 10, θ = 1, dθ = 0.05`: five seeds at `p̄ = 0.5` gave
/// residuals in `[−0.0142, 0.0081]` (stderr ≈ 0.008, scale 0.632), two seeds
/// at `p̄ = 0.3` gave `0.0175, 0.0126` (scale 0.690). The largest
/// `|residual|/scale` is 0.025; the constant is twice that.
pub const THETA_C_FIX: f64 = 0.05;

/// Constant in `gap <= UNIVERSALITY_C·λ^{3/2}/√(n p̄(1−p̄)) + 3·stderr`.
///
/// Pilot: at `n = 10, λ = 2` the gaps were 0.024–0.034 at `p̄ = 0.5`
/// (predictor 1.79) and 0.031–0.049 at `p̄ = 0.3` (predictor 1.95); at
/// `n = 12, λ = 1, p̄ = 0.5` they were 0.008–0.011 (predictor 0.577).
/// The largest ratio is 0.025; the constant is 0.04.
pub const UNIVERSALITY_C: f64 = 0.04;

/// Absolute ceiling on the per-vertex gap at `n = 12, λ = 1, p̄ = 0.5`.
pub const UNIVERSALITY_GAP_MAX: f64 = 0.03;

/// Finite-difference allowance in the I-MMSE residual, on top of
/// `3·stderr`.
pub const IMMSE_FD_ALLOWANCE: f64 = 0.01;

/// Overlap ceiling below the spectral threshold at `λ = 0.5, n = 4000`.
///
/// Pilot (seeds 0, 1, 2; power-iteration tolerance 1e-3, since the top of
/// the bulk has almost no spectral gap): overlaps 0.006, 0.122, 0.069.
/// Finite-n overlaps at the bulk edge decay slowly, so the margin is modest.
pub const SPECTRAL_SUBCRITICAL_MAX: f64 = 0.15;
