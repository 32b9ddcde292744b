//! Exact posterior enumeration for small `n`.
//!
//! Both likelihoods reduce to an Ising form. In the Gaussian model
//!
//! ```text
//! log p(Y | x) = Σ_{i<j} √(λ/n)·Y_ij·x_i x_j + (terms without x)
//! ```
//!
//! because `x_i² = 1` makes the diagonal and `(x_i x_j)²` contributions
//! constant. In the block model each pair contributes
//! `G_ij log(p̄ + Δ x_i x_j) + (1 − G_ij) log(1 − p̄ − Δ x_i x_j)`, which is
//! `a_ij + b_ij x_i x_j` with `b_ij = (L⁺ − L⁻)/2`. The posterior is therefore
//! `∝ exp(Σ_{i<j} J_ij x_i x_j)` restricted to configurations that agree
//! with the revealed labels.
//!
//! Configuration `idx` has bit `i` equal to `(1 − x_i)/2`. The `2ⁿ` energies
//! are produced in Gray-code order with local fields, `O(n)` per
//! configuration.

mod checks;
pub mod fixtures;
mod metrics;

pub use checks::{
    exact_mi, immse_check, metric_sandwich_scan, sbm_theta_derivative_check, universality_gap,
    theta_error_scale, CheckReport, Estimate, MiModel, SandwichSummary, UniversalityGap,
};
pub use metrics::{metrics_from_posterior, MetricsReport, MetricsStderr};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{SbmInstance, SideInfo, SpikedInstance};

/// Largest `n` the enumeration accepts.
pub const MAX_EXACT_N: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Gauss,
    Sbm,
}

/// Observation an exact posterior is built from.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    Gauss(&'a SpikedInstance),
    Sbm(&'a SbmInstance),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub n: usize,
    pub mode: Mode,
    /// Indexed by label bit pattern; `−∞` for configurations that conflict
    /// with revealed labels.
    pub log_weights: Vec<f64>,
    pub normalized: bool,
}

/// Symmetric couplings `J` (row-major `n × n`, zero diagonal) and side
/// information as `(mask, bits)`.
#[derive(Debug, Clone)]
pub(crate) struct Ising {
    pub n: usize,
    pub j: Vec<f64>,
    pub mask: u32,
    pub bits: u32,
}

fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_EXACT_N {
        return Err(Error::Capacity { n, max: MAX_EXACT_N });
    }
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2, got {n}")));
    }
    Ok(())
}

fn side_mask(n: usize, side: Option<&SideInfo>) -> Result<(u32, u32)> {
    let Some(side) = side else { return Ok((0, 0)) };
    if side.revealed.len() != n {
        return Err(Error::param(
            "side",
            format!("{} entries for n={n}", side.revealed.len()),
        ));
    }
    let (mut mask, mut bits) = (0u32, 0u32);
    for (i, &s) in side.revealed.iter().enumerate() {
        if s != 0 {
            mask |= 1 << i;
            if s < 0 {
                bits |= 1 << i;
            }
        }
    }
    Ok((mask, bits))
}

/// Label vector → configuration index.
pub fn config_index(labels: &[i8]) -> usize {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &x)| x < 0)
        .fold(0, |acc, (i, _)| acc | 1 << i)
}

impl Ising {
    pub(crate) fn gauss(inst: &SpikedInstance, side: Option<&SideInfo>) -> Result<Self> {
        let n = inst.n;
        check_capacity(n)?;
        let c = (inst.lambda / n as f64).sqrt();
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let v = c * inst.y.get(a, b);
                j[a * n + b] = v;
                j[b * n + a] = v;
            }
        }
        let (mask, bits) = side_mask(n, side)?;
        Ok(Self { n, j, mask, bits })
    }

    pub(crate) fn sbm(inst: &SbmInstance, side: Option<&SideInfo>) -> Result<Self> {
        let p = &inst.params;
        let n = p.n;
        check_capacity(n)?;
        if !(p.q > 0.0 && p.p < 1.0) {
            return Err(Error::param(
                "p, q",
                format!("exact SBM posterior needs 0 < q <= p < 1, got p={}, q={}", p.p, p.q),
            ));
        }
        let b_edge = 0.5 * (p.p.ln() - p.q.ln());
        let b_none = 0.5 * ((1.0 - p.p).ln() - (1.0 - p.q).ln());
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let v = if inst.adjacency.has_edge(a, b) { b_edge } else { b_none };
                j[a * n + b] = v;
                j[b * n + a] = v;
            }
        }
        let (mask, bits) = side_mask(n, side)?;
        Ok(Self { n, j, mask, bits })
    }

    /// `S(x) = Σ_{i<j} J_ij x_i x_j` for every configuration, `−∞` where
    /// the configuration conflicts with the side information.
    pub(crate) fn energies(&self) -> Vec<f64> {
        let n = self.n;
        let size = 1usize << n;
        let mut out = vec![0.0; size];
        let mut x = vec![1.0f64; n];
        let mut h: Vec<f64> = (0..n).map(|i| self.j[i * n..(i + 1) * n].iter().sum()).collect();
        let mut s = 0.5 * h.iter().sum::<f64>();
        let mut idx = 0usize;
        out[0] = s;
        for t in 1..size {
            let k = t.trailing_zeros() as usize;
            idx ^= 1 << k;
            let xk = x[k];
            s -= 2.0 * xk * h[k];
            let row = &self.j[k * n..(k + 1) * n];
            for (hj, &jk) in h.iter_mut().zip(row) {
                *hj -= 2.0 * jk * xk;
            }
            x[k] = -xk;
            out[idx] = s;
        }
        if self.mask != 0 {
            let (mask, bits) = (self.mask as usize, self.bits as usize);
            for (idx, v) in out.iter_mut().enumerate() {
                if idx & mask != bits {
                    *v = f64::NEG_INFINITY;
                }
            }
        }
        out
    }

    /// Direct `O(n²)` evaluation, used to validate the Gray-code sweep.
    #[cfg(test)]
    pub(crate) fn energy_of(&self, idx: usize) -> f64 {
        let n = self.n;
        let x: Vec<f64> = (0..n).map(|i| if idx >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let mut s = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                s += self.j[a * n + b] * x[a] * x[b];
            }
        }
        s
    }
}

/// `log Σ exp(v)` over finite entries.
pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

impl ExactPosterior {
    pub fn new(obs: Observation<'_>, side: Option<&SideInfo>) -> Result<Self> {
        let (ising, mode) = match obs {
            Observation::Gauss(inst) => (Ising::gauss(inst, side)?, Mode::Gauss),
            Observation::Sbm(inst) => (Ising::sbm(inst, side)?, Mode::Sbm),
        };
        Ok(Self {
            n: ising.n,
            mode,
            log_weights: ising.energies(),
            normalized: false,
        })
    }

    pub fn normalize(&mut self) {
        let z = log_sum_exp(&self.log_weights);
        self.log_weights.iter_mut().for_each(|w| *w -= z);
        self.normalized = true;
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    /// Posterior means `E[x_i]` and pair moments `E[x_i x_j]` (row-major
    /// `n × n`, unit diagonal), read off a Walsh–Hadamard transform of the
    /// weights.
    pub fn moments(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if !self.normalized {
            return Err(Error::State("posterior must be normalized first".into()));
        }
        let mut w = self.weights();
        walsh_hadamard(&mut w);
        let n = self.n;
        let means = (0..n).map(|i| w[1 << i]).collect();
        let mut pairs = vec![1.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let v = w[(1 << a) | (1 << b)];
                pairs[a * n + b] = v;
                pairs[b * n + a] = v;
            }
        }
        Ok((means, pairs))
    }
}

/// Builds and normalizes the exact posterior.
pub fn exact_posterior(obs: Observation<'_>, side: Option<&SideInfo>) -> Result<ExactPosterior> {
    let mut p = ExactPosterior::new(obs, side)?;
    p.normalize();
    Ok(p)
}

/// In-place unnormalized transform: `out[S] = Σ_idx w[idx]·(−1)^{|S ∧ idx|}`.
fn walsh_hadamard(w: &mut [f64]) {
    let mut h = 1;
    while h < w.len() {
        for block in w.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}
