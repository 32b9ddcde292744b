//! Monte Carlo estimators built on exact enumeration.
//!
//! For one draw of labels, observation and side information with `m` erased
//! labels, the log-likelihood ratio is
//!
//! ```text
//! log p(obs | X, side) / p(obs | side) = S(X) − log Σ_{x ~ side} e^{S(x)} + m·log 2
//! ```
//!
//! whose mean over draws is `I(X; obs | side)`. Adding `I(X; side) = nε·log 2`
//! gives the information carried by the full observation.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::{config_index, log_sum_exp, metrics_from_posterior, ExactPosterior, Ising, Mode, MetricsReport};
use crate::error::{check_eps, Error, Result};
use crate::models::{
    sample_labels, sample_sbm_with_labels, sample_side_info, sample_spiked, SbmParams, SideInfo,
};
use crate::rng::derive_seed;

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let k = values.len();
        let mean = values.iter().sum::<f64>() / k as f64;
        let var = if k > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / k as f64).sqrt(),
            samples: k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MiModel {
    Gauss { n: usize, lambda: f64 },
    Sbm { params: SbmParams },
}

impl MiModel {
    pub fn n(&self) -> usize {
        match self {
            MiModel::Gauss { n, .. } => *n,
            MiModel::Sbm { params } => params.n,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            MiModel::Gauss { .. } => Mode::Gauss,
            MiModel::Sbm { .. } => Mode::Sbm,
        }
    }
}

/// One Monte Carlo draw: the Ising form of the observation, the true labels
/// and the side information.
struct Draw {
    ising: Ising,
    labels: Vec<i8>,
    side: SideInfo,
}

fn draw(model: &MiModel, labels: Vec<i8>, side: SideInfo, seed: u64) -> Result<Draw> {
    let ising = match model {
        MiModel::Gauss { n, lambda } => {
            let inst = sample_spiked(*n, *lambda, Some(labels.clone()), seed)?;
            Ising::gauss(&inst, Some(&side))?
        }
        MiModel::Sbm { params } => {
            let inst = sample_sbm_with_labels(params, labels.clone(), seed)?;
            Ising::sbm(&inst, Some(&side))?
        }
    };
    Ok(Draw { ising, labels, side })
}

/// Replicate `r` of a study with master seed `seed`. Labels, noise / edge
/// uniforms and side information depend only on `(seed, r)`, so evaluating
/// different models at the same `r` couples them.
fn replicate(model: &MiModel, eps: f64, seed: u64, r: usize) -> Result<Draw> {
    let s = derive_seed(seed, r as u64);
    let labels = sample_labels(model.n(), s);
    let side = sample_side_info(&labels, eps, s)?;
    draw(model, labels, side, s)
}

impl Draw {
    /// Log-likelihood ratio divided by `n`, and the energies for reuse.
    fn llr_per_vertex(&self) -> (f64, Vec<f64>) {
        let e = self.ising.energies();
        let erased = self.side.revealed.iter().filter(|&&s| s == 0).count();
        let v = erased as f64 * LN_2 - log_sum_exp(&e) + e[config_index(&self.labels)];
        (v / self.ising.n as f64, e)
    }

    fn posterior(&self, mode: Mode, energies: Vec<f64>) -> ExactPosterior {
        let mut p = ExactPosterior {
            n: self.ising.n,
            mode,
            log_weights: energies,
            normalized: false,
        };
        p.normalize();
        p
    }
}

fn check_samples(mc_samples: usize) -> Result<()> {
    if mc_samples < 2 {
        return Err(Error::param("mc_samples", format!("need at least 2, got {mc_samples}")));
    }
    Ok(())
}

fn check_model(model: &MiModel) -> Result<()> {
    match model {
        MiModel::Gauss { lambda, .. } if !(*lambda >= 0.0 && lambda.is_finite()) => Err(
            Error::param("lambda", format!("must be finite and >= 0, got {lambda}")),
        ),
        MiModel::Sbm { params } => params.validate(),
        _ => Ok(()),
    }
}

/// Monte Carlo estimate of `I(X; observation, side)/n` in nats.
pub fn exact_mi(model: &MiModel, eps: f64, mc_samples: usize, seed: u64) -> Result<Estimate> {
    check_eps(eps)?;
    check_samples(mc_samples)?;
    check_model(model)?;
    let values = (0..mc_samples)
        .map(|r| Ok(replicate(model, eps, seed, r)?.llr_per_vertex().0))
        .collect::<Result<Vec<_>>>()?;
    let mut est = Estimate::from_samples(&values);
    est.mean += eps * LN_2;
    Ok(est)
}

/// Residual of `d(I/n)/dλ = ¼·MMSE` in the Gaussian model, with `MMSE`
/// normalized by `n²` over ordered pairs. The finite difference uses the
/// same labels, noise and side information at `λ ± dλ`.
pub fn immse_check(
    n: usize,
    lambda: f64,
    dlambda: f64,
    eps: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    check_eps(eps)?;
    check_samples(mc_samples)?;
    if !(dlambda > 0.0 && lambda - dlambda > 0.0) {
        return Err(Error::param(
            "dlambda",
            format!("need 0 < dlambda < lambda, got lambda={lambda}, dlambda={dlambda}"),
        ));
    }
    let up = MiModel::Gauss { n, lambda: lambda + dlambda };
    let mid = MiModel::Gauss { n, lambda };
    let down = MiModel::Gauss { n, lambda: lambda - dlambda };
    let mut residuals = Vec::with_capacity(mc_samples);
    for r in 0..mc_samples {
        let (vp, _) = replicate(&up, eps, seed, r)?.llr_per_vertex();
        let (vm, _) = replicate(&down, eps, seed, r)?.llr_per_vertex();
        let d = replicate(&mid, eps, seed, r)?;
        let (_, e) = d.llr_per_vertex();
        let post = d.posterior(Mode::Gauss, e);
        let m = metrics_from_posterior(&post, &d.labels)?;
        residuals.push((vp - vm) / (2.0 * dlambda) - 0.25 * m.mmse_matrix_n2);
    }
    Ok(Estimate::from_samples(&residuals))
}

/// `√(θ / (n·p̄(1 − p̄)))`, the scale of the derivative residual.
pub fn theta_error_scale(n: usize, theta: f64, pbar: f64) -> f64 {
    (theta / (n as f64 * pbar * (1.0 - pbar))).sqrt()
}

/// Residual of `d(I/n)/dθ − ¼·MMSE_n(θ)` along `p, q = p̄ ± √(p̄(1−p̄)θ/n)`,
/// with `MMSE_n` averaged over unordered pairs. Graphs at the two
/// finite-difference points share their edge uniforms. Near `θ = 0` the
/// lower point is clamped to 0 (one-sided difference).
pub fn sbm_theta_derivative_check(
    n: usize,
    theta: f64,
    dtheta: f64,
    pbar: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    check_samples(mc_samples)?;
    if !(dtheta > 0.0 && theta >= 0.0) {
        return Err(Error::param(
            "dtheta",
            format!("need dtheta > 0 and theta >= 0, got theta={theta}, dtheta={dtheta}"),
        ));
    }
    let (lo, hi) = ((theta - dtheta).max(0.0), theta + dtheta);
    let up = MiModel::Sbm { params: SbmParams::from_lambda(n, pbar, hi)? };
    let down = MiModel::Sbm { params: SbmParams::from_lambda(n, pbar, lo)? };
    let mid = MiModel::Sbm { params: SbmParams::from_lambda(n, pbar, theta)? };
    let mut residuals = Vec::with_capacity(mc_samples);
    for r in 0..mc_samples {
        let (vp, _) = replicate(&up, 0.0, seed, r)?.llr_per_vertex();
        let (vm, _) = replicate(&down, 0.0, seed, r)?.llr_per_vertex();
        let d = replicate(&mid, 0.0, seed, r)?;
        let (_, e) = d.llr_per_vertex();
        let post = d.posterior(Mode::Sbm, e);
        let m = metrics_from_posterior(&post, &d.labels)?;
        residuals.push((vp - vm) / (hi - lo) - 0.25 * m.mmse_matrix);
    }
    Ok(Estimate::from_samples(&residuals))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniversalityGap {
    pub pbar: f64,
    pub mi_sbm: Estimate,
    pub mi_gauss: Estimate,
    /// `|I_sbm − I_gauss|/n`.
    pub gap: f64,
    /// Standard error of the paired per-draw difference.
    pub stderr: f64,
    /// `λ^{3/2}/√(n p̄ (1 − p̄))`.
    pub predictor: f64,
}

/// Per-vertex information gap between the block model and its Gaussian
/// surrogate at equal `λ`, one entry per `p̄`. Both models are evaluated on
/// the same label draws.
pub fn universality_gap(
    n: usize,
    lambda: f64,
    pbar_list: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<UniversalityGap>> {
    check_samples(mc_samples)?;
    let gauss = MiModel::Gauss { n, lambda };
    let gauss_values = (0..mc_samples)
        .map(|r| Ok(replicate(&gauss, 0.0, seed, r)?.llr_per_vertex().0))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(pbar_list.len());
    for &pbar in pbar_list {
        let sbm = MiModel::Sbm { params: SbmParams::from_lambda(n, pbar, lambda)? };
        let sbm_values = (0..mc_samples)
            .map(|r| Ok(replicate(&sbm, 0.0, seed, r)?.llr_per_vertex().0))
            .collect::<Result<Vec<_>>>()?;
        let diffs: Vec<f64> = sbm_values.iter().zip(&gauss_values).map(|(a, b)| a - b).collect();
        let d = Estimate::from_samples(&diffs);
        out.push(UniversalityGap {
            pbar,
            mi_sbm: Estimate::from_samples(&sbm_values),
            mi_gauss: Estimate::from_samples(&gauss_values),
            gap: d.mean.abs(),
            stderr: d.stderr,
            predictor: lambda.powf(1.5) / (n as f64 * pbar * (1.0 - pbar)).sqrt(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichSummary {
    pub instances: usize,
    pub upper_violations: usize,
    pub lower_violations: usize,
    pub overlap_violations: usize,
    pub mean: MetricsReport,
}

impl SandwichSummary {
    pub fn all_hold(&self) -> bool {
        self.upper_violations == 0 && self.lower_violations == 0 && self.overlap_violations == 0
    }
}

/// Enumerates `instances` Gaussian-model posteriors and checks the
/// vector/matrix error sandwich and the overlap bound on each.
pub fn metric_sandwich_scan(
    n: usize,
    lambda: f64,
    eps: f64,
    instances: usize,
    seed: u64,
) -> Result<SandwichSummary> {
    check_eps(eps)?;
    check_samples(instances)?;
    let model = MiModel::Gauss { n, lambda };
    let mut reports = Vec::with_capacity(instances);
    let (mut up, mut lo, mut ov) = (0, 0, 0);
    for r in 0..instances {
        let d = replicate(&model, eps, seed, r)?;
        let post = d.posterior(Mode::Gauss, d.ising.energies());
        let m = metrics_from_posterior(&post, &d.labels)?;
        up += usize::from(!m.upper_sandwich_holds(1e-9));
        lo += usize::from(!m.lower_sandwich_holds(1e-9));
        ov += usize::from(!m.overlap_bound_holds(n));
        reports.push(m);
    }
    Ok(SandwichSummary {
        instances,
        upper_violations: up,
        lower_violations: lo,
        overlap_violations: ov,
        mean: MetricsReport::average(&reports)?,
    })
}

/// Machine-readable outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub params: serde_json::Value,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckReport {
    /// Passes when `|estimate| <= bound`.
    pub fn abs_within(name: &str, params: serde_json::Value, est: Estimate, bound: f64) -> Self {
        Self {
            check_name: name.to_string(),
            params,
            estimate: est.mean,
            stderr: est.stderr,
            bound,
            pass: est.mean.abs() <= bound,
        }
    }
}
