use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Format;
use crate::error::{Error, Result};
use crate::fixed_point::{solve_gamma_star, SolverOptions};
use crate::numfmt::g12;
use crate::quadrature::QuadratureRule;

/// One row of the information curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub gamma_star: f64,
    pub psi: f64,
    /// `λ/4 + ε·log 2`: the first term bounds the graph information, the
    /// second is the information in the revealed labels.
    pub upper_bound: f64,
    /// `1 − γ*²/λ²`.
    pub mmse_limit: f64,
    /// `1 − γ*/λ`.
    pub vmmse_lower: f64,
    /// `1 − γ*²/λ²`.
    pub vmmse_upper: f64,
    /// `γ*²/λ²`.
    pub overlap_lower: f64,
}

pub const CURVE_COLUMNS: [&str; 8] = [
    "lambda",
    "gamma_star",
    "psi",
    "upper_bound",
    "mmse_limit",
    "vmmse_lower",
    "vmmse_upper",
    "overlap_lower",
];

impl CurvePoint {
    /// At `λ = 0` the ratio `γ*/λ` is taken at its limit `ε`.
    pub fn compute(lambda: f64, eps: f64, opts: &SolverOptions, rule: &QuadratureRule) -> Result<Self> {
        let (gamma_star, psi, ratio) = if lambda == 0.0 {
            (0.0, eps * LN_2, eps)
        } else {
            let s = solve_gamma_star(lambda, eps, opts, rule)?;
            (s.gamma_star, s.psi, s.gamma_star / lambda)
        };
        let r2 = ratio * ratio;
        let p = Self {
            lambda,
            gamma_star,
            psi,
            upper_bound: lambda / 4.0 + eps * LN_2,
            mmse_limit: 1.0 - r2,
            vmmse_lower: 1.0 - ratio,
            vmmse_upper: 1.0 - r2,
            overlap_lower: r2,
        };
        p.check()?;
        Ok(p)
    }

    pub fn values(&self) -> [f64; 8] {
        [
            self.lambda,
            self.gamma_star,
            self.psi,
            self.upper_bound,
            self.mmse_limit,
            self.vmmse_lower,
            self.vmmse_upper,
            self.overlap_lower,
        ]
    }

    fn check(&self) -> Result<()> {
        if self.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Consistency(format!("non-finite curve point at λ = {}", self.lambda)));
        }
        if self.vmmse_lower > self.vmmse_upper + 1e-12 || self.psi > self.upper_bound + 1e-9 {
            return Err(Error::Consistency(format!("curve bounds violated at λ = {}", self.lambda)));
        }
        Ok(())
    }
}

/// A table of named columns, written as CSV rows or as a JSON object of
/// arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| g12(v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, name) in self.columns.iter().enumerate() {
            let col: Vec<f64> = self.rows.iter().map(|r| r[k]).collect();
            map.insert(name.clone(), serde_json::json!(col));
        }
        serde_json::Value::Object(map)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

pub fn curve_table(points: &[CurvePoint]) -> Table {
    let mut t = Table::new(&CURVE_COLUMNS);
    for p in points {
        t.push(p.values().to_vec());
    }
    t
}

/// Writes the curve to `out` in the requested format.
pub fn emit_curve(points: &[CurvePoint], format: Format, out: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::param("points", "nothing to write"));
    }
    std::fs::write(out, curve_table(points).render(format)).map_err(|e| Error::io(out, e))
}
