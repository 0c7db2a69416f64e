//! Ordinary least squares on the regressor's features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_RIDGE_EPSILON: f64 = 1e-8;

/// `ŷ = x · coefficients + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn zeros(features: usize) -> Self {
        LinearModel {
            coefficients: vec![0.0; features],
            intercept: 0.0,
        }
    }
}

/// Minimizes `‖Xw + b − y‖²` through the normal equations.
///
/// Columns and target are centered first, so the intercept is
/// `ȳ − x̄ · w` and is not shrunk; `ridge_epsilon` is added to the diagonal
/// of the centered Gram matrix before the Cholesky solve.
pub fn ols_fit(x: &Matrix, y: &[f64], ridge_epsilon: f64) -> Result<LinearModel> {
    let (n, k) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: y.len(),
        });
    }
    if n < k + 1 {
        return Err(Error::validation(
            "ols_fit",
            format!("{n} rows cannot determine {k} coefficients and an intercept"),
        ));
    }
    if !(ridge_epsilon >= 0.0 && ridge_epsilon.is_finite()) {
        return Err(Error::validation(
            "ols_fit",
            format!("ridge_epsilon {ridge_epsilon} must be ≥ 0"),
        ));
    }
    if let Some(v) = x.as_slice().iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::validation(
            "ols_fit",
            format!("non-finite value {v}"),
        ));
    }

    let nf = n as f64;
    let means: Vec<f64> = (0..k)
        .map(|j| x.column(j).iter().sum::<f64>() / nf)
        .collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    let xc = DMatrix::from_fn(n, k, |i, j| x.get(i, j) - means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let mut gram = xc.transpose() * &xc;
    for j in 0..k {
        gram[(j, j)] += ridge_epsilon;
    }
    let rhs = xc.transpose() * yc;
    let w = gram
        .cholesky()
        .ok_or_else(|| {
            Error::Singular(format!(
                "Gram matrix of {k} features is not positive definite"
            ))
        })?
        .solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(
            "normal equations produced non-finite coefficients".into(),
        ));
    }
    let intercept = y_mean - w.iter().zip(&means).map(|(a, m)| a * m).sum::<f64>();
    Ok(LinearModel {
        coefficients: w.iter().copied().collect(),
        intercept,
    })
}

pub fn linreg_predict(model: &LinearModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != model.coefficients.len() {
        return Err(Error::Dimension {
            expected: model.coefficients.len(),
            found: x.cols(),
        });
    }
    Ok(x.iter_rows()
        .map(|row| {
            model.intercept
                + row
                    .iter()
                    .zip(&model.coefficients)
                    .map(|(a, w)| a * w)
                    .sum::<f64>()
        })
        .collect())
}
