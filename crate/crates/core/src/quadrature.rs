//! Expectation rules against the standard normal density.
//!
//! Every scalar-channel quantity is an expectation `E f(Z)` with
//! `Z ~ N(0, 1)`. A [`QuadratureRule`] stores nodes and normalized weights so
//! that `E f(Z) ≈ Σ w_k f(z_k)`.
//!
//! Two constructions are provided:
//!
//! * [`gauss_hermite`]: the classical Gauss–Hermite rule rescaled to the
//!   standard normal weight. Exact for polynomials of degree `2·order − 1`.
//! * [`QuadratureRule::composite`]: composite Gauss–Legendre panels on a
//!   truncated interval with the normal density folded into the weights.
//!   Integrands of the form `tanh(γ + √γ z)` have complex poles close to the
//!   real axis, where Gauss–Hermite converges only like `exp(−c·√order)`;
//!   the panel rule resolves them to machine precision for `γ` up to a few
//!   hundred, which is why it is the default.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_GAUSS_HERMITE_ORDER: usize = 200;

/// Half-width of the truncated integration range for the composite rule.
/// The normal tail beyond ±10 carries mass below 1e−22.
pub const DEFAULT_HALF_WIDTH: f64 = 10.0;
pub const DEFAULT_PANELS: usize = 100;
pub const DEFAULT_POINTS_PER_PANEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    GaussHermite,
    CompositeLegendre,
}

/// Nodes and weights for expectations against `N(0, 1)`.
///
/// Nodes are strictly increasing and symmetric about zero, weights are
/// strictly positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: RuleKind,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// The rule used throughout the crate unless a caller asks otherwise.
    pub fn standard() -> Self {
        Self::composite(DEFAULT_HALF_WIDTH, DEFAULT_PANELS, DEFAULT_POINTS_PER_PANEL)
            .expect("default composite rule parameters are valid")
    }

    /// Composite rule with `panels` equal Gauss–Legendre panels of
    /// `points` nodes each on `[−half_width, half_width]`.
    pub fn composite(half_width: f64, panels: usize, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::param("half_width", format!("must be positive, got {half_width}")));
        }
        if panels == 0 || panels > 100_000 {
            return Err(Error::param("panels", format!("must lie in [1, 100000], got {panels}")));
        }
        if !(1..=64).contains(&points) {
            return Err(Error::param("points", format!("must lie in [1, 64], got {points}")));
        }
        let (gl_nodes, gl_weights) = gauss_legendre(points);
        let h = 2.0 * half_width / panels as f64;
        let mut nodes = Vec::with_capacity(panels * points);
        let mut weights = Vec::with_capacity(panels * points);
        for p in 0..panels {
            let mid = -half_width + (p as f64 + 0.5) * h;
            for (x, w) in gl_nodes.iter().zip(&gl_weights) {
                let z = mid + 0.5 * h * x;
                nodes.push(z);
                weights.push(0.5 * h * w * normal_pdf(z));
            }
        }
        symmetrize(&mut nodes, &mut weights);
        normalize(&mut weights);
        Ok(Self {
            kind: RuleKind::CompositeLegendre,
            order: nodes.len(),
            nodes,
            weights,
        })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    /// Number of nodes.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E f(Z)` for `Z ~ N(0, 1)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::standard()
    }
}

/// Gauss–Hermite rule for the standard normal weight.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_GAUSS_HERMITE_ORDER).contains(&order) {
        return Err(Error::param(
            "order",
            format!("must lie in [1, {MAX_GAUSS_HERMITE_ORDER}], got {order}"),
        ));
    }
    let (x, w) = physicists_hermite(order)?;
    // exp(−x²) weight → standard normal: z = √2·x, w/√π.
    let mut nodes: Vec<f64> = x.iter().map(|x| x * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|w| w / PI.sqrt()).collect();
    symmetrize(&mut nodes, &mut weights);
    normalize(&mut weights);
    Ok(QuadratureRule {
        kind: RuleKind::GaussHermite,
        order,
        nodes,
        weights,
    })
}

pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Newton iteration on the orthonormal Hermite recurrence, nodes in
/// increasing order.
fn physicists_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        if i > 0 && !(z >= 0.0 && z < x[i - 1]) {
            z = 0.5 * x[i - 1];
        }
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = (j + 1) as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            // Deflate the roots ±x[k] already found so Newton cannot fall
            // back onto them (the asymptotic guesses degrade at high order).
            let mut deflation = 0.0;
            for &r in &x[..i] {
                deflation += 1.0 / (z - r) + 1.0 / (z + r);
            }
            let z1 = z;
            let mut step = p1 / (pp - p1 * deflation);
            // Roots are found in decreasing order; keep the iterate strictly
            // between zero and the previous root.
            if i > 0 {
                let mut halvings = 0;
                while (z1 - step >= x[i - 1] || z1 - step < 0.0) && halvings < 64 {
                    step *= 0.5;
                    halvings += 1;
                }
            }
            z = z1 - step;
            if (z - z1).abs() <= 3e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Consistency(format!(
                "Gauss-Hermite node {i} of order {n} did not converge"
            )));
        }
        // NR ordering: x[i] is the i-th largest positive node.
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    Ok((x, w))
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, increasing order.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Enforce exact mirror symmetry of a rule that is symmetric up to roundoff.
fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let z = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -z;
        nodes[j] = z;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
}
