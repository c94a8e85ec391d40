use serde::Serialize;

use crate::error::{Error, Result};

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Least-squares fit and its in-sample correlation with the target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionResult {
    /// One coefficient per design column.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub pearson: f64,
    /// The normal equations were singular and a small ridge term was added.
    pub ridge: bool,
}

/// Prepends a column of ones.
pub fn with_intercept(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
        .collect()
}

/// In-place Cholesky factorization of a symmetric matrix; `None` when a
/// pivot is not safely positive.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let tiny = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= tiny {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    z
}

/// Ordinary least squares through the normal equations. The design matrix
/// should already contain an intercept column if one is wanted. Singular
/// systems get a ridge of `1e-8` times the trace.
pub fn ols_fit(design: &[Vec<f64>], y: &[f64]) -> Result<RegressionResult> {
    let rows = design.len();
    if rows != y.len() {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: y.len(),
        });
    }
    let cols = design.first().map_or(0, Vec::len);
    if cols == 0 || rows < cols {
        return Err(Error::Underdetermined { rows, cols });
    }
    if design.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid("design rows have different lengths"));
    }
    let mut xtx = vec![0.0; cols * cols];
    let mut xty = vec![0.0; cols];
    for (row, &target) in design.iter().zip(y) {
        for i in 0..cols {
            xty[i] += row[i] * target;
            for j in 0..cols {
                xtx[i * cols + j] += row[i] * row[j];
            }
        }
    }
    let (l, ridge) = match cholesky(&xtx, cols) {
        Some(l) => (l, false),
        None => {
            let trace: f64 = (0..cols).map(|i| xtx[i * cols + i]).sum();
            let lambda = 1e-8 * trace;
            for i in 0..cols {
                xtx[i * cols + i] += lambda;
            }
            let l = cholesky(&xtx, cols)
                .ok_or_else(|| Error::invalid("normal equations are singular even with a ridge term"))?;
            (l, true)
        }
    };
    let coefficients = cholesky_solve(&l, cols, &xty);
    let fitted: Vec<f64> = design
        .iter()
        .map(|r| r.iter().zip(&coefficients).map(|(a, b)| a * b).sum())
        .collect();
    let pearson = pearson(&fitted, y)?;
    Ok(RegressionResult {
        coefficients,
        fitted,
        pearson,
        ridge,
    })
}
