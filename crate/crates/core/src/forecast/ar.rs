//! Autoregressive model of in-sample residuals, used to correct the raw
//! extrapolation by the predicted next error.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Ratio of smallest to largest singular value below which the regressor
/// matrix is treated as rank-deficient.
const RANK_TOL: f64 = 1e-10;

/// `ε̂_{t+1} = a0 + a1·ε_t + … + a_l·ε_{t−l+1}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub lag: usize,
    /// `[a0, a1, …, a_lag]`
    pub coeffs: Vec<f64>,
}

impl ArModel {
    pub fn zero(lag: usize) -> Self {
        Self { lag, coeffs: vec![0.0; lag + 1] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn intercept(&self) -> f64 {
        self.coeffs[0]
    }
}

/// Fits an AR(`lag`) model with intercept.
///
/// Under Gaussian errors the conditional maximum-likelihood estimate is the
/// least-squares regression of `ε_t` on `(1, ε_{t−1}, …, ε_{t−lag})`. Returns
/// the zero model when fewer than `lag + 2` residuals are available or the
/// regressors are rank-deficient.
pub fn fit_ar(residuals: &[f64], lag: usize) -> ArModel {
    let lag = lag.max(1);
    let n = residuals.len();
    if n < lag + 2 {
        return ArModel::zero(lag);
    }
    let rows = n - lag;
    let design = DMatrix::from_fn(rows, lag + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            residuals[lag + i - j]
        }
    });
    let target = DVector::from_iterator(rows, residuals[lag..].iter().copied());
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if !(max_sv > 0.0) || min_sv <= RANK_TOL * max_sv {
        return ArModel::zero(lag);
    }
    match svd.solve(&target, 0.0) {
        Ok(coef) if coef.iter().all(|c| c.is_finite()) => ArModel { lag, coeffs: coef.iter().copied().collect() },
        _ => ArModel::zero(lag),
    }
}

/// Predicts the next residual from the most recent ones (chronological
/// order, latest last). Too few residuals yield a zero correction.
pub fn predict_error(model: &ArModel, recent: &[f64]) -> f64 {
    if recent.len() < model.lag {
        return 0.0;
    }
    let mut e = model.coeffs[0];
    for k in 1..=model.lag {
        e += model.coeffs[k] * recent[recent.len() - k];
    }
    e
}
