//! Packed symmetric storage and the operator abstraction used by AMP and
//! power iteration.

use crate::error::{Error, Result};

/// Anything that can multiply a vector as a symmetric `n × n` matrix.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `out = M v`. Both slices have length `dim()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

/// Symmetric matrix stored as its packed upper triangle (diagonal included),
/// row-major: row `i` holds entries `(i, i), (i, i+1), …, (i, n−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_start(n: usize, i: usize) -> usize {
    // Σ_{k<i} (n − k)
    i * n - i * i.saturating_sub(1) / 2
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Builds from a function of `(i, j)` evaluated for `i <= j` only.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Reads a full row-major matrix, checking symmetry to `tol`.
    pub fn from_dense(n: usize, full: &[f64], tol: f64) -> Result<Self> {
        if full.len() != n * n {
            return Err(Error::param(
                "matrix",
                format!("expected {} entries, got {}", n * n, full.len()),
            ));
        }
        for i in 0..n {
            for j in i + 1..n {
                if (full[i * n + j] - full[j * n + i]).abs() > tol {
                    return Err(Error::param("matrix", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self::from_upper(n, |i, j| full[i * n + j]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        row_start(self.n, i) + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j);
        self.data[k] = value;
    }

    /// Packed upper-triangle row `i`: entries `(i, i..n)`.
    pub fn upper_row(&self, i: usize) -> &[f64] {
        let s = row_start(self.n, i);
        &self.data[s..s + self.n - i]
    }

    /// Row-major full copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for (k, &v) in self.upper_row(i).iter().enumerate() {
                out[i * n + i + k] = v;
                out[(i + k) * n + i] = v;
            }
        }
        out
    }
}

impl SymmetricOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.n {
            let row = self.upper_row(i);
            let vi = v[i];
            let mut acc = row[0] * vi;
            for (k, &a) in row[1..].iter().enumerate() {
                let j = i + 1 + k;
                acc += a * v[j];
                out[j] += a * vi;
            }
            out[i] += acc;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
