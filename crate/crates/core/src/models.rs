//! Two-community stochastic block model, the spiked Wigner surrogate and
//! erasure side information.
//!
//! Sampling is reproducible: every random quantity comes from a ChaCha8
//! stream keyed by `(seed, purpose)`, and edges / noise entries are drawn in
//! row-major `i < j` order. Because labels, noise and edges use separate
//! streams, two instances sampled with the same seed but different labels (or
//! different `p, q`) share their noise / edge uniforms, which is what the
//! coupled finite-difference checks rely on.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_eps, Error, Result};
use crate::linalg::{SymMatrix, SymmetricOperator};
use crate::rng::{stream_rng, Stream};

/// Consistency tolerance between stored and recomputed parameters.
const PARAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub pbar: f64,
    pub delta: f64,
    /// `n (p − q)² / (4 p̄ (1 − p̄))`.
    pub lambda_n: f64,
}

fn lambda_of(n: usize, p: f64, q: f64) -> f64 {
    let pbar = 0.5 * (p + q);
    n as f64 * (p - q).powi(2) / (4.0 * pbar * (1.0 - pbar))
}

impl SbmParams {
    pub fn new(n: usize, p: f64, q: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("need at least 2 vertices, got {n}")));
        }
        if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p, q", format!("must lie in [0, 1], got p={p}, q={q}")));
        }
        if q > p {
            return Err(Error::param("q", format!("must not exceed p, got p={p}, q={q}")));
        }
        let pbar = 0.5 * (p + q);
        if !(pbar > 0.0 && pbar < 1.0) {
            return Err(Error::param("pbar", format!("must lie in (0, 1), got {pbar}")));
        }
        Ok(Self {
            n,
            p,
            q,
            pbar,
            delta: 0.5 * (p - q),
            lambda_n: lambda_of(n, p, q),
        })
    }

    /// `p, q = p̄ ± √(p̄(1 − p̄)λ/n)`.
    pub fn from_lambda(n: usize, pbar: f64, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("need at least 2 vertices, got {n}")));
        }
        if !(pbar > 0.0 && pbar < 1.0) {
            return Err(Error::param("pbar", format!("must lie in (0, 1), got {pbar}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        let d = (pbar * (1.0 - pbar) * lambda / n as f64).sqrt();
        let room = pbar.min(1.0 - pbar);
        if d > room {
            let bound = if pbar <= 0.5 { "q >= 0" } else { "p <= 1" };
            return Err(Error::param(
                "lambda",
                format!(
                    "infeasible: {bound} requires lambda*pbar*(1-pbar)/n <= min(pbar, 1-pbar)^2, \
                     i.e. lambda <= {:.6} at n={n}, pbar={pbar}",
                    room * room * n as f64 / (pbar * (1.0 - pbar))
                ),
            ));
        }
        Ok(Self {
            n,
            p: (pbar + d).min(1.0),
            q: (pbar - d).max(0.0),
            pbar,
            delta: d,
            lambda_n: lambda,
        })
    }

    /// Checks the stored derived fields against a recomputation.
    pub fn validate(&self) -> Result<()> {
        let fresh = Self::new(self.n, self.p, self.q)?;
        let lam_scale = self.lambda_n.abs().max(1.0);
        if (fresh.delta - self.delta).abs() > PARAM_TOL
            || (fresh.pbar - self.pbar).abs() > PARAM_TOL
            || (fresh.lambda_n - self.lambda_n).abs() > PARAM_TOL * lam_scale
        {
            return Err(Error::Consistency(format!(
                "stored (pbar, delta, lambda_n) = ({}, {}, {}) disagree with (p, q)",
                self.pbar, self.delta, self.lambda_n
            )));
        }
        Ok(())
    }

    /// `λ_n` recomputed from `(n, p, q)`.
    pub fn recomputed_lambda(&self) -> f64 {
        lambda_of(self.n, self.p, self.q)
    }
}

/// Free-function form of [`SbmParams::from_lambda`].
pub fn params_from_lambda(n: usize, pbar: f64, lambda: f64) -> Result<SbmParams> {
    SbmParams::from_lambda(n, pbar, lambda)
}

/// Symmetric 0/1 adjacency with zero diagonal, stored as the packed strict
/// upper triangle, one bit per pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    words: Vec<u64>,
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    // Σ_{k<i} (n − 1 − k) + (j − i − 1)
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        Self {
            n,
            words: vec![0; pairs.div_ceil(64)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let k = pair_index(self.n, i, j);
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    fn set_index(&mut self, k: usize) {
        self.words[k / 64] |= 1 << (k % 64);
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        assert!(i != j && i < self.n && j < self.n, "invalid edge ({i}, {j})");
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.set_index(pair_index(self.n, i, j));
    }

    pub fn edge_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Calls `f(i, j)` for every edge with `i < j`, in row-major order.
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, usize)) {
        if self.n < 2 {
            return;
        }
        let mut row = 0usize;
        let mut row_begin = 0usize;
        let mut row_end = self.n - 1;
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let k = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                while k >= row_end {
                    row += 1;
                    row_begin = row_end;
                    row_end += self.n - 1 - row;
                }
                f(row, row + 1 + (k - row_begin));
            }
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        self.for_each_edge(|i, j| {
            d[i] += 1;
            d[j] += 1;
        });
        d
    }

    /// Symmetric neighbour lists.
    pub fn neighbor_lists(&self) -> Vec<Vec<u32>> {
        let mut lists = vec![Vec::new(); self.n];
        self.for_each_edge(|i, j| {
            lists[i].push(j as u32);
            lists[j].push(i as u32);
        });
        lists
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmInstance {
    pub params: SbmParams,
    pub labels: Vec<i8>,
    pub adjacency: Adjacency,
    pub seed: u64,
}

pub fn sample_labels(n: usize, seed: u64) -> Vec<i8> {
    let mut rng = stream_rng(seed, Stream::Labels);
    (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

fn check_labels(labels: &[i8]) -> Result<()> {
    if let Some(k) = labels.iter().position(|&x| x != 1 && x != -1) {
        return Err(Error::param("labels", format!("entry {k} is {}, expected ±1", labels[k])));
    }
    Ok(())
}

pub fn sample_sbm(params: &SbmParams, seed: u64) -> Result<SbmInstance> {
    sample_sbm_with_labels(params, sample_labels(params.n, seed), seed)
}

/// Samples edges for given labels. Pair `(i, j)` is an edge iff its uniform
/// `U_ij` falls below `p` (labels agree) or `q` (labels differ), so instances
/// sharing a seed are coupled across `(p, q)`.
pub fn sample_sbm_with_labels(params: &SbmParams, labels: Vec<i8>, seed: u64) -> Result<SbmInstance> {
    params.validate()?;
    check_labels(&labels)?;
    if labels.len() != params.n {
        return Err(Error::param(
            "labels",
            format!("length {} does not match n={}", labels.len(), params.n),
        ));
    }
    let n = params.n;
    let mut adjacency = Adjacency::empty(n);
    let mut rng = stream_rng(seed, Stream::Edges);
    let mut k = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let u: f64 = rng.random();
            let prob = if labels[i] == labels[j] { params.p } else { params.q };
            if u < prob {
                adjacency.set_index(k);
            }
            k += 1;
        }
    }
    Ok(SbmInstance {
        params: *params,
        labels,
        adjacency,
        seed,
    })
}

fn rescale_scale(pbar: f64) -> Result<f64> {
    if !(pbar > 0.0 && pbar < 1.0) {
        return Err(Error::param("pbar", format!("must lie in (0, 1), got {pbar}")));
    }
    Ok((pbar * (1.0 - pbar)).sqrt())
}

/// Dense centred and scaled adjacency `(G_ij − p̄)/√(p̄(1 − p̄))`, zero
/// diagonal.
pub fn rescale_adjacency(instance: &SbmInstance) -> Result<SymMatrix> {
    let pbar = instance.params.pbar;
    let s = rescale_scale(pbar)?;
    let (hi, lo) = ((1.0 - pbar) / s, -pbar / s);
    let a = &instance.adjacency;
    Ok(SymMatrix::from_upper(instance.params.n, |i, j| {
        if i == j {
            0.0
        } else if a.has_edge(i, j) {
            hi
        } else {
            lo
        }
    }))
}

/// Matrix-free view of the rescaled adjacency. Multiplication costs
/// `O(n + |E|)`.
#[derive(Debug, Clone)]
pub struct RescaledAdjacency {
    neighbors: Vec<Vec<u32>>,
    pbar: f64,
    scale: f64,
}

impl RescaledAdjacency {
    pub fn new(instance: &SbmInstance) -> Result<Self> {
        Ok(Self {
            scale: rescale_scale(instance.params.pbar)?,
            pbar: instance.params.pbar,
            neighbors: instance.adjacency.neighbor_lists(),
        })
    }
}

impl SymmetricOperator for RescaledAdjacency {
    fn dim(&self) -> usize {
        self.neighbors.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let total: f64 = v.iter().sum();
        for (i, nb) in self.neighbors.iter().enumerate() {
            let s: f64 = nb.iter().map(|&j| v[j as usize]).sum();
            out[i] = (s - self.pbar * (total - v[i])) / self.scale;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikedInstance {
    pub n: usize,
    pub lambda: f64,
    pub labels: Vec<i8>,
    pub y: SymMatrix,
    pub seed: u64,
}

/// `Y = √(λ/n) X Xᵀ + Z`, with `Z` symmetric, `Z_ij ~ N(0, 1)` off the
/// diagonal and `Z_ii ~ N(0, 2)`.
pub fn sample_spiked(n: usize, lambda: f64, labels: Option<Vec<i8>>, seed: u64) -> Result<SpikedInstance> {
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2, got {n}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    let labels = match labels {
        Some(l) => {
            check_labels(&l)?;
            if l.len() != n {
                return Err(Error::param("labels", format!("length {} does not match n={n}", l.len())));
            }
            l
        }
        None => sample_labels(n, seed),
    };
    let amp = (lambda / n as f64).sqrt();
    let mut rng = stream_rng(seed, Stream::Noise);
    let y = SymMatrix::from_upper(n, |i, j| {
        let z: f64 = StandardNormal.sample(&mut rng);
        if i == j {
            std::f64::consts::SQRT_2 * z + amp
        } else {
            z + amp * f64::from(labels[i] * labels[j])
        }
    });
    Ok(SpikedInstance {
        n,
        lambda,
        labels,
        y,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideInfo {
    pub eps: f64,
    /// `+1`/`−1` where revealed, `0` where erased.
    pub revealed: Vec<i8>,
    pub seed: u64,
}

impl SideInfo {
    pub fn none(n: usize) -> Self {
        Self {
            eps: 0.0,
            revealed: vec![0; n],
            seed: 0,
        }
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed.iter().filter(|&&s| s != 0).count()
    }
}

/// Reveals each label independently with probability `eps`.
pub fn sample_side_info(labels: &[i8], eps: f64, seed: u64) -> Result<SideInfo> {
    check_eps(eps)?;
    check_labels(labels)?;
    let mut rng = stream_rng(seed, Stream::SideInfo);
    let revealed = labels
        .iter()
        .map(|&x| {
            let u: f64 = rng.random();
            if u < eps {
                x
            } else {
                0
            }
        })
        .collect();
    Ok(SideInfo { eps, revealed, seed })
}

/// Edge list: `# sbm n=<n> p=<p> q=<q> seed=<seed>` then `i j` per line.
pub fn edge_list_text(instance: &SbmInstance) -> String {
    let p = &instance.params;
    let mut s = format!("# sbm n={} p={} q={} seed={}\n", p.n, p.p, p.q, instance.seed);
    instance.adjacency.for_each_edge(|i, j| {
        let _ = writeln!(s, "{i} {j}");
    });
    s
}

pub fn labels_text(labels: &[i8]) -> String {
    let mut s = String::with_capacity(3 * labels.len());
    for &x in labels {
        let _ = writeln!(s, "{x}");
    }
    s
}

/// Writes the edge list to `path` and the labels to `labels_path`.
pub fn write_sbm(instance: &SbmInstance, path: &Path, labels_path: &Path) -> Result<()> {
    fs::write(path, edge_list_text(instance)).map_err(|e| Error::io(path, e))?;
    fs::write(labels_path, labels_text(&instance.labels)).map_err(|e| Error::io(labels_path, e))
}

/// Little-endian `f64` row-major full matrix at `path`, and a one-line
/// sidecar `n=<n> lambda=<lambda> seed=<seed>` at `meta_path`.
pub fn write_spiked(instance: &SpikedInstance, path: &Path, meta_path: &Path) -> Result<()> {
    let dense = instance.y.to_dense();
    let mut bytes = Vec::with_capacity(8 * dense.len());
    for v in dense {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = format!("n={} lambda={} seed={}\n", instance.n, instance.lambda, instance.seed);
    fs::write(meta_path, meta).map_err(|e| Error::io(meta_path, e))
}

/// Reads a matrix written by [`write_spiked`].
pub fn read_spiked_matrix(path: &Path, n: usize) -> Result<SymMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != 8 * n * n {
        return Err(Error::param("matrix", format!("{} bytes, expected {}", bytes.len(), 8 * n * n)));
    }
    let full: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    SymMatrix::from_dense(n, &full, 0.0)
}
