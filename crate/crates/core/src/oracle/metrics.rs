use serde::{Deserialize, Serialize};

use super::ExactPosterior;
use crate::error::{Error, Result};

/// Estimation metrics of one posterior, evaluated under the posterior
/// expectation (so they equal the conditional errors given the
/// observations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `avg_{i<j} E[(x_i x_j − E[x_i x_j])²]`, normalized over the
    /// `n(n−1)/2` pairs.
    pub mmse_matrix: f64,
    /// The same sum normalized by `n²` over ordered pairs:
    /// `(1 − 1/n)·mmse_matrix`.
    pub mmse_matrix_n2: f64,
    /// `min_k (1/n) E min_s ‖x − s·x̂^{(k)}‖²` with `x̂^{(k)}_j = E[x_k x_j]`
    /// (the conditional mean given `x_k = +1` under flip symmetry).
    pub vmmse: f64,
    /// `|⟨X, sign(x̂)⟩|/n` for the minimizing anchor, using the true labels.
    pub overlap_lb: f64,
    /// Set when the report averages several instances.
    pub mc_stderr: Option<MetricsStderr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsStderr {
    pub mmse_matrix: f64,
    pub vmmse: f64,
    pub overlap_lb: f64,
}

pub fn metrics_from_posterior(post: &ExactPosterior, labels: &[i8]) -> Result<MetricsReport> {
    if !post.normalized {
        return Err(Error::State("posterior must be normalized first".into()));
    }
    let n = post.n;
    if labels.len() != n {
        return Err(Error::param("labels", format!("{} entries for n={n}", labels.len())));
    }
    let (_, pairs) = post.moments()?;
    let n_pairs = (n * (n - 1) / 2) as f64;
    let mut mmse_sum = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            mmse_sum += 1.0 - pairs[a * n + b].powi(2);
        }
    }
    let mmse_matrix = (mmse_sum / n_pairs).clamp(0.0, 1.0);

    let weights = post.weights();
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..n {
        let xhat = &pairs[k * n..(k + 1) * n];
        let sq: f64 = xhat.iter().map(|v| v * v).sum();
        let mut abs_inner = 0.0;
        for (idx, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let inner: f64 = xhat
                .iter()
                .enumerate()
                .map(|(i, &v)| if idx >> i & 1 == 1 { -v } else { v })
                .sum();
            abs_inner += w * inner.abs();
        }
        let v = (n as f64 + sq - 2.0 * abs_inner) / n as f64;
        if v < best.0 {
            best = (v, k);
        }
    }
    let xhat = &pairs[best.1 * n..(best.1 + 1) * n];
    let agree: i64 = labels
        .iter()
        .zip(xhat)
        .map(|(&x, &v)| i64::from(x) * if v < 0.0 { -1 } else { 1 })
        .sum();

    Ok(MetricsReport {
        mmse_matrix,
        mmse_matrix_n2: (1.0 - 1.0 / n as f64) * mmse_matrix,
        vmmse: best.0.clamp(0.0, 1.0),
        overlap_lb: agree.unsigned_abs() as f64 / n as f64,
        mc_stderr: None,
    })
}

impl MetricsReport {
    /// `vmmse <= mmse_matrix`.
    pub fn upper_sandwich_holds(&self, slack: f64) -> bool {
        self.vmmse <= self.mmse_matrix + slack
    }

    /// `1 − √(1 − (1 − 1/n)·mmse_matrix) <= vmmse`.
    pub fn lower_sandwich_holds(&self, slack: f64) -> bool {
        1.0 - (1.0 - self.mmse_matrix_n2).max(0.0).sqrt() <= self.vmmse + slack
    }

    /// `overlap_lb >= 1 − vmmse − 5/√n`.
    pub fn overlap_bound_holds(&self, n: usize) -> bool {
        self.overlap_lb >= 1.0 - self.vmmse - 5.0 / (n as f64).sqrt()
    }

    /// Averages per-instance reports and attaches standard errors.
    pub fn average(reports: &[MetricsReport]) -> Result<MetricsReport> {
        if reports.is_empty() {
            return Err(Error::param("reports", "nothing to average"));
        }
        let stat = |f: &dyn Fn(&MetricsReport) -> f64| {
            let k = reports.len() as f64;
            let mean = reports.iter().map(f).sum::<f64>() / k;
            let var = if reports.len() > 1 {
                reports.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            (mean, (var / k).sqrt())
        };
        let (m, m_se) = stat(&|r| r.mmse_matrix);
        let (m2, _) = stat(&|r| r.mmse_matrix_n2);
        let (v, v_se) = stat(&|r| r.vmmse);
        let (o, o_se) = stat(&|r| r.overlap_lb);
        Ok(MetricsReport {
            mmse_matrix: m,
            mmse_matrix_n2: m2,
            vmmse: v,
            overlap_lb: o,
            mc_stderr: Some(MetricsStderr {
                mmse_matrix: m_se,
                vmmse: v_se,
                overlap_lb: o_se,
            }),
        })
    }
}
