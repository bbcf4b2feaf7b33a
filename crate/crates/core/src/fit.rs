//! Small fitting helpers: straight-line fits and SVD least squares.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("abscissae are all equal")]
    DegenerateAbscissae,
    #[error("non-finite value in fit input")]
    NonFinite,
    #[error("design matrix has {rows} rows and {cols} columns")]
    Shape { rows: usize, cols: usize },
}

/// `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    /// Standard error of the slope.
    pub slope_std_error: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, FitError> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(FitError::TooFewPoints { needed: 2, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(FitError::DegenerateAbscissae);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..n).map(|i| (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let dof = (n as f64 - 2.0).max(1.0);
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        rms_residual: (sse / nf).sqrt(),
        slope_std_error: (sse / dof / sxx).sqrt(),
    })
}

/// Least-squares slope of `ln|y|` against `ln x`, skipping zero samples.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, FitError> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b != 0.0).map(|(a, b)| (a.ln(), b.abs().ln())).unzip();
    linear_fit(&lx, &ly)
}

/// Solution of `min ‖W(Dc − b)‖` with column equilibration.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Condition number of the column-scaled weighted design.
    pub condition: f64,
    /// Weighted residual norm.
    pub residual: f64,
    /// Rows of the pseudo-inverse mapping the unweighted data `b` to the
    /// coefficients, `pinv[k][i] = ∂c_k/∂b_i`.
    pub pinv: Vec<Vec<f64>>,
}

/// Weighted linear least squares via SVD. `design[i][k]` is column `k` at
/// sample `i`; `weights` multiply each row.
pub fn weighted_least_squares(design: &[Vec<f64>], rhs: &[f64], weights: &[f64]) -> Result<LeastSquares, FitError> {
    let rows = design.len();
    let cols = design.first().map_or(0, Vec::len);
    if cols == 0 || rows < cols || rhs.len() != rows || weights.len() != rows {
        return Err(FitError::Shape { rows, cols });
    }
    if design.iter().flatten().chain(rhs).chain(weights).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let mut a = DMatrix::from_fn(rows, cols, |i, k| weights[i] * design[i][k]);
    let b = DVector::from_fn(rows, |i, _| weights[i] * rhs[i]);
    let mut scale = vec![1.0; cols];
    for k in 0..cols {
        let norm = a.column(k).norm();
        if norm > 0.0 {
            scale[k] = 1.0 / norm;
            a.column_mut(k).scale_mut(scale[k]);
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let eps = smax * f64::EPSILON * rows.max(cols) as f64;
    let pinv_scaled = svd.pseudo_inverse(eps).map_err(|_| FitError::Shape { rows, cols })?;
    let y = &pinv_scaled * &b;
    let coefficients: Vec<f64> = (0..cols).map(|k| y[k] * scale[k]).collect();
    let residual = (&a * &y - &b).norm();
    let pinv = (0..cols).map(|k| (0..rows).map(|i| pinv_scaled[(k, i)] * scale[k] * weights[i]).collect()).collect();
    Ok(LeastSquares { coefficients, condition, residual, pinv })
}
