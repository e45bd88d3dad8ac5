use nalgebra::DMatrix;

use super::law::DiscreteLaw;
use crate::{Error, Result};

/// Row-stochastic confusion matrix over the detected outcomes: entry
/// `(i, j)` is the probability that a photon sorted into outcome `i` is
/// registered as outcome `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crosstalk {
    matrix: DMatrix<f64>,
}

impl Crosstalk {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::domain("crosstalk matrix must be square and non-empty"));
        }
        if matrix.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("crosstalk entries must be finite and non-negative"));
        }
        for (i, row) in matrix.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("crosstalk row {i} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
    }

    /// Identity except that outcomes `a` and `b` swap with probability `eps`.
    pub fn symmetric_leak(n: usize, a: usize, b: usize, eps: f64) -> Result<Self> {
        if a >= n || b >= n || a == b || !(0.0..=1.0).contains(&eps) {
            return Err(Error::domain("invalid leak parameters"));
        }
        let mut m = DMatrix::identity(n, n);
        m[(a, a)] = 1.0 - eps;
        m[(b, b)] = 1.0 - eps;
        m[(a, b)] = eps;
        m[(b, a)] = eps;
        Self::new(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Whitespace-separated rows; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::parse(format!("line {}: bad number '{t}'", k + 1))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::parse("crosstalk file must hold a square matrix"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

/// `p' = pᵀX` over the detected outcomes; the discard channel is untouched.
pub fn apply_crosstalk(law: &DiscreteLaw, x: &Crosstalk) -> Result<DiscreteLaw> {
    let detected: Vec<usize> = (0..law.len()).filter(|&i| !law.outcomes[i].is_discard()).collect();
    if detected.len() != x.dim() {
        return Err(Error::domain(format!(
            "crosstalk dimension {} does not match {} detected outcomes",
            x.dim(),
            detected.len()
        )));
    }
    let mut out = law.clone();
    for (jj, &j) in detected.iter().enumerate() {
        out.probs[j] = detected.iter().enumerate().map(|(ii, &i)| law.probs[i] * x.matrix[(ii, jj)]).sum();
    }
    Ok(out)
}
