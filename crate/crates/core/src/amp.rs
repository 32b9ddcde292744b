//! Bayes-optimal approximate message passing and the spectral baseline.
//!
//! The iteration is
//!
//! ```text
//! x⁰ = 0,   x^{t+1} = (Y/√n)·f_t(x^t) − b_t·f_{t−1}(x^{t−1}),   b_t = mean f_t′(x^t)
//! ```
//!
//! with `f_t(y) = s` on revealed coordinates, `f_0 = 0` on erased ones and
//! `f_t(y) = tanh(√λ·y)` for `t ≥ 1`. Along the iteration `x^t` behaves like
//! `μ_t X + σ_t Z` with `μ_t = √λ·σ_t² = γ_t/√λ`, so the overlap of
//! `x̂^t = f_{t−1}(x^{t−1})` with the truth tracks `γ_t/λ`.

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, Error, Result};
use crate::fixed_point::se_trajectory;
use crate::linalg::{dot, norm, SymmetricOperator};
use crate::models::SideInfo;
use crate::numfmt::g12;
use crate::quadrature::QuadratureRule;
use crate::rng::{stream_rng, Stream};

/// Iterates beyond this magnitude are treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Posterior-mean denoiser `f_t(y; s)`.
#[inline]
pub fn denoise(y: f64, s: i8, lambda: f64, t: usize) -> f64 {
    if s != 0 {
        f64::from(s)
    } else if t == 0 {
        0.0
    } else {
        (lambda.sqrt() * y).tanh()
    }
}

/// `∂f_t/∂y`.
#[inline]
pub fn denoise_derivative(y: f64, s: i8, lambda: f64, t: usize) -> f64 {
    if s != 0 || t == 0 {
        0.0
    } else {
        let th = (lambda.sqrt() * y).tanh();
        lambda.sqrt() * (1.0 - th * th)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmpOptions {
    pub iterations: usize,
    /// Disable to run the diagnostic variant without the memory term.
    pub onsager: bool,
}

impl AmpOptions {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            onsager: true,
        }
    }
}

/// Record for iteration `t ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmpStep {
    pub t: usize,
    /// The iterate `x^t`.
    pub x: Vec<f64>,
    /// The estimate `x̂^t = f_{t−1}(x^{t−1})`.
    pub xhat: Vec<f64>,
    /// `b_t = mean f_t′(x^t)`.
    pub b: f64,
    /// `⟨X, x̂^t⟩/n`.
    pub empirical_overlap: f64,
    /// `‖XXᵀ − x̂x̂ᵀ‖_F²/n²`.
    pub empirical_mse: f64,
    pub se_overlap: f64,
    pub se_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmpTrajectory {
    pub lambda: f64,
    pub eps: f64,
    pub onsager: bool,
    pub steps: Vec<AmpStep>,
}

impl AmpTrajectory {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn last(&self) -> &AmpStep {
        self.steps.last().expect("trajectory has at least one step")
    }

    /// CSV with columns `t,b_t,empirical_overlap,se_overlap,empirical_mse,se_mse`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,b_t,empirical_overlap,se_overlap,empirical_mse,se_mse\n");
        for st in &self.steps {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                st.t,
                g12(st.b),
                g12(st.empirical_overlap),
                g12(st.se_overlap),
                g12(st.empirical_mse),
                g12(st.se_mse)
            );
        }
        s
    }
}

/// `(1/n²)‖XXᵀ − x̂x̂ᵀ‖_F²` through its expansion
/// `1 + (‖x̂‖²/n)² − 2(⟨X, x̂⟩/n)²` (valid for `X ∈ {±1}ⁿ`).
pub fn matrix_mse(labels: &[i8], xhat: &[f64]) -> f64 {
    let n = labels.len() as f64;
    let sq = dot(xhat, xhat) / n;
    let ov = overlap(labels, xhat);
    1.0 + sq * sq - 2.0 * ov * ov
}

/// Direct `O(n²)` evaluation of the same quantity.
pub fn matrix_mse_direct(labels: &[i8], xhat: &[f64]) -> f64 {
    let n = labels.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = f64::from(labels[i] * labels[j]) - xhat[i] * xhat[j];
            acc += d * d;
        }
    }
    acc / (n * n) as f64
}

/// `⟨X, v⟩/n`.
pub fn overlap(labels: &[i8], v: &[f64]) -> f64 {
    labels.iter().zip(v).map(|(&x, &y)| f64::from(x) * y).sum::<f64>() / labels.len() as f64
}

/// AMP with the default quadrature rule and the memory term enabled.
pub fn amp_run<M: SymmetricOperator + ?Sized>(
    y: &M,
    side: &SideInfo,
    lambda: f64,
    iterations: usize,
    labels: &[i8],
) -> Result<AmpTrajectory> {
    amp_run_with(y, side, lambda, labels, &AmpOptions::new(iterations), &QuadratureRule::standard())
}

pub fn amp_run_with<M: SymmetricOperator + ?Sized>(
    y: &M,
    side: &SideInfo,
    lambda: f64,
    labels: &[i8],
    opts: &AmpOptions,
    rule: &QuadratureRule,
) -> Result<AmpTrajectory> {
    check_lambda(lambda)?;
    let n = y.dim();
    if side.revealed.len() != n || labels.len() != n {
        return Err(Error::param(
            "dimensions",
            format!(
                "matrix is {n}x{n} but side information has {} entries and labels {}",
                side.revealed.len(),
                labels.len()
            ),
        ));
    }
    if opts.iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    let se = se_trajectory(lambda, side.eps, opts.iterations, rule)?;
    let s = &side.revealed;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();

    let mut x = vec![0.0; n];
    let mut f_prev = vec![0.0; n];
    let mut f_cur = vec![0.0; n];
    let mut mv = vec![0.0; n];
    let mut steps = Vec::with_capacity(opts.iterations);

    for t in 0..opts.iterations {
        let mut b = 0.0;
        for i in 0..n {
            f_cur[i] = denoise(x[i], s[i], lambda, t);
            b += denoise_derivative(x[i], s[i], lambda, t);
        }
        b /= n as f64;
        let b = if opts.onsager { b } else { 0.0 };
        if t > 0 {
            // Record of step t now that b_t is known.
            let last: &mut AmpStep = steps.last_mut().expect("step t recorded");
            last.b = b;
        }

        y.apply(&f_cur, &mut mv);
        let mut sup = 0.0f64;
        for i in 0..n {
            x[i] = mv[i] * inv_sqrt_n - b * f_prev[i];
            sup = sup.max(x[i].abs());
        }
        if !sup.is_finite() || sup > DIVERGENCE_BOUND {
            return Err(Error::Divergence {
                iteration: t + 1,
                detail: format!("max |x| = {sup}"),
            });
        }
        std::mem::swap(&mut f_prev, &mut f_cur);

        let step_t = t + 1;
        let xhat = f_prev.clone();
        steps.push(AmpStep {
            t: step_t,
            x: x.clone(),
            empirical_overlap: overlap(labels, &xhat),
            empirical_mse: matrix_mse(labels, &xhat),
            xhat,
            b: 0.0,
            se_overlap: se.overlap(step_t),
            se_mse: se.matrix_mse(step_t),
        });
    }
    if opts.onsager {
        let t = opts.iterations;
        let b = (0..n).map(|i| denoise_derivative(x[i], s[i], lambda, t)).sum::<f64>() / n as f64;
        steps.last_mut().expect("non-empty").b = b;
    }

    Ok(AmpTrajectory {
        lambda,
        eps: side.eps,
        onsager: opts.onsager,
        steps,
    })
}

/// Leading eigenpair found by power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    /// Rayleigh quotient.
    pub value: f64,
    pub iterations: usize,
}

/// Number of unshifted power steps used to size the shift.
const SHIFT_PROBE_STEPS: usize = 30;

/// Eigenvector of the algebraically largest eigenvalue.
///
/// Plain power iteration finds the eigenvalue of largest magnitude, which for
/// a noise matrix can be the negative bulk edge. Iterating on `M + ρI`, with
/// `ρ` a slight overestimate of `‖M‖`, makes the top of the spectrum dominant.
pub fn top_eigenvector<M: SymmetricOperator + ?Sized>(
    m: &M,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<Eigenpair> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::param("matrix", "empty"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {tol}")));
    }
    let mut rng = stream_rng(seed, Stream::Start);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v);
    let mut w = vec![0.0; n];

    let mut probe = v.clone();
    let mut radius = 0.0f64;
    for _ in 0..SHIFT_PROBE_STEPS {
        m.apply(&probe, &mut w);
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        radius = radius.max(nw);
        for (p, &x) in probe.iter_mut().zip(&w) {
            *p = x / nw;
        }
    }
    let shift = 1.1 * radius;

    let mut rayleigh = f64::NAN;
    for it in 1..=max_iter {
        m.apply(&v, &mut w);
        rayleigh = dot(&v, &w);
        for (wi, &vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
        }
        if normalize(&mut w) == 0.0 {
            // v lies in the kernel of M + ρI; only possible when M = 0.
            return Ok(Eigenpair {
                vector: v,
                value: 0.0,
                iterations: it,
            });
        }
        let diff = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut w);
        if diff < tol {
            m.apply(&v, &mut w);
            return Ok(Eigenpair {
                value: dot(&v, &w),
                vector: v,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        last: rayleigh,
        residual: f64::NAN,
    })
}

fn normalize(v: &mut [f64]) -> f64 {
    let nv = norm(v);
    if nv > 0.0 {
        v.iter_mut().for_each(|x| *x /= nv);
    }
    nv
}

/// Coordinate-wise sign of the leading eigenvector (zeros map to `+1`).
pub fn spectral_estimate<M: SymmetricOperator + ?Sized>(
    m: &M,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<i8>> {
    let e = top_eigenvector(m, max_iter, tol, seed)?;
    Ok(e.vector.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect())
}

/// `|⟨v, X⟩|/√n` for a unit vector `v`.
pub fn eigenvector_overlap(labels: &[i8], v: &[f64]) -> f64 {
    (overlap(labels, v) * labels.len() as f64).abs() / (labels.len() as f64).sqrt()
}
