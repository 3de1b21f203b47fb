//! Linear readout trained by ridge regression, plus NRMSE and accuracy.

use nalgebra::{DMatrix, Dyn, QR};
use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};
use crate::linalg::ensure_finite_matrix;

/// Ridge coefficient, either fixed or proportional to `trace(XᵀX)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Regularization {
    Absolute(f64),
    RelativeToTrace(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::RelativeToTrace(1e-18)
    }
}

impl Regularization {
    pub fn lambda_for(&self, states: &DMatrix<f64>) -> Result<f64> {
        let lambda = match *self {
            Regularization::Absolute(l) => l,
            Regularization::RelativeToTrace(c) => c * states.norm_squared(),
        };
        if lambda >= 0.0 && lambda.is_finite() {
            Ok(lambda)
        } else {
            Err(EsnError::InvalidParameter(format!("ridge coefficient must be non-negative, got {lambda}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    /// N_out x N.
    pub w_out: DMatrix<f64>,
    pub ridge_lambda: f64,
}

/// QR factorization of `[X; sqrt(lambda) I]`, reusable across many targets.
///
/// Solving against `[Y; 0]` minimizes `||X Wᵀ - Y||² + lambda ||W||²`, the same
/// solution as the regularized normal equations without forming `XᵀX`.
pub struct RidgeFactor {
    qr: QR<f64, Dyn, Dyn>,
    r: DMatrix<f64>,
    lambda: f64,
    aug_rows: usize,
    n_rows: usize,
    n_features: usize,
}

impl RidgeFactor {
    pub fn new(states: &DMatrix<f64>, reg: Regularization) -> Result<Self> {
        let (t, n) = states.shape();
        if t == 0 || n == 0 {
            return Err(EsnError::Empty("state matrix"));
        }
        ensure_finite_matrix(states, "state matrix")?;
        let lambda = reg.lambda_for(states)?;
        if lambda == 0.0 && t < n {
            return Err(EsnError::SingularReadout);
        }
        let aug_rows = if lambda > 0.0 { t + n } else { t };
        let mut a = DMatrix::zeros(aug_rows, n);
        a.rows_mut(0, t).copy_from(states);
        if lambda > 0.0 {
            let s = lambda.sqrt();
            for i in 0..n {
                a[(t + i, i)] = s;
            }
        }
        let qr = a.qr();
        let r = qr.r();
        let diag_max = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let diag_min = (0..n).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if lambda == 0.0 && !(diag_min > n as f64 * f64::EPSILON * diag_max) {
            return Err(EsnError::SingularReadout);
        }
        Ok(Self {
            qr,
            r,
            lambda,
            aug_rows,
            n_rows: t,
            n_features: n,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Weights for a T x N_out target matrix.
    pub fn solve(&self, targets: &DMatrix<f64>) -> Result<ReadoutWeights> {
        if targets.nrows() != self.n_rows {
            return Err(EsnError::DimensionMismatch {
                what: "target rows",
                expected: self.n_rows.to_string(),
                found: targets.nrows().to_string(),
            });
        }
        ensure_finite_matrix(targets, "targets")?;
        let n = self.n_features;
        let mut b = DMatrix::zeros(self.aug_rows, targets.ncols());
        b.rows_mut(0, self.n_rows).copy_from(targets);
        self.qr.q_tr_mul(&mut b);
        let top = b.rows(0, n).into_owned();
        let w_t = self.r.solve_upper_triangular(&top).ok_or(EsnError::SingularReadout)?;
        Ok(ReadoutWeights {
            w_out: w_t.transpose(),
            ridge_lambda: self.lambda,
        })
    }
}

/// Ridge regression with an absolute coefficient.
pub fn fit_ridge(states: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64) -> Result<ReadoutWeights> {
    fit_ridge_with(states, targets, Regularization::Absolute(lambda))
}

pub fn fit_ridge_with(states: &DMatrix<f64>, targets: &DMatrix<f64>, reg: Regularization) -> Result<ReadoutWeights> {
    RidgeFactor::new(states, reg)?.solve(targets)
}

/// Row-wise `y_k = W_out x_k`.
pub fn predict(weights: &ReadoutWeights, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if states.ncols() != weights.w_out.ncols() {
        return Err(EsnError::DimensionMismatch {
            what: "state columns",
            expected: weights.w_out.ncols().to_string(),
            found: states.ncols().to_string(),
        });
    }
    Ok(states * weights.w_out.transpose())
}

/// `sqrt(mean ||y - ŷ||² / mean ||y - ȳ||²)` over time.
pub fn nrmse(predicted: &DMatrix<f64>, actual: &DMatrix<f64>) -> Result<f64> {
    if predicted.shape() != actual.shape() {
        return Err(EsnError::DimensionMismatch {
            what: "prediction",
            expected: format!("{}x{}", actual.nrows(), actual.ncols()),
            found: format!("{}x{}", predicted.nrows(), predicted.ncols()),
        });
    }
    let t = actual.nrows();
    if t < 2 {
        return Err(EsnError::SeriesTooShort { needed: 2, available: t });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..actual.ncols() {
        let col = actual.column(c);
        let mean = col.mean();
        for k in 0..t {
            let e = col[k] - predicted[(k, c)];
            let d = col[k] - mean;
            num += e * e;
            den += d * d;
        }
    }
    if !(den > 0.0) {
        return Err(EsnError::InvalidParameter("target is constant; NRMSE is undefined".into()));
    }
    Ok((num / den).sqrt())
}

/// `max(1 - nrmse, 0)`. A NaN error counts as zero accuracy.
pub fn accuracy_gamma(nrmse_value: f64) -> f64 {
    (1.0 - nrmse_value).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub nrmse: f64,
    pub accuracy: f64,
}

impl Metrics {
    pub fn from_nrmse(nrmse: f64) -> Self {
        Self {
            nrmse,
            accuracy: accuracy_gamma(nrmse),
        }
    }

    pub fn evaluate(predicted: &DMatrix<f64>, actual: &DMatrix<f64>) -> Result<Self> {
        Ok(Self::from_nrmse(nrmse(predicted, actual)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_returns_targets() {
        let x = DMatrix::<f64>::identity(4, 4);
        let y = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let w = fit_ridge(&x, &y, 0.0).unwrap();
        assert!((w.w_out - y.transpose()).amax() < 1e-14);
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let x = DMatrix::from_fn(30, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let y = DMatrix::from_fn(30, 1, |i, _| (i as f64).sin());
        let w = fit_ridge(&x, &y, 1e12).unwrap();
        assert!(w.w_out.norm() < 1e-8);
    }

    #[test]
    fn singular_without_ridge_is_an_error() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(fit_ridge(&x, &y, 0.0), Err(EsnError::SingularReadout)));
        assert!(fit_ridge(&x, &y, 1e-3).is_ok());
        let wide = DMatrix::<f64>::identity(2, 3);
        assert!(matches!(fit_ridge(&wide, &DMatrix::zeros(2, 1), 0.0), Err(EsnError::SingularReadout)));
    }

    #[test]
    fn negative_lambda_rejected() {
        let x = DMatrix::<f64>::identity(2, 2);
        assert!(fit_ridge(&x, &DMatrix::zeros(2, 1), -1.0).is_err());
    }

    #[test]
    fn relative_lambda_scales_with_trace() {
        let x = DMatrix::from_element(4, 2, 2.0);
        assert_eq!(Regularization::RelativeToTrace(0.5).lambda_for(&x).unwrap(), 16.0);
    }

    #[test]
    fn predict_examples() {
        let states = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let zero = ReadoutWeights { w_out: DMatrix::zeros(1, 2), ridge_lambda: 0.0 };
        assert_eq!(predict(&zero, &states).unwrap(), DMatrix::zeros(3, 1));
        let first = ReadoutWeights { w_out: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), ridge_lambda: 0.0 };
        assert_eq!(predict(&first, &states).unwrap().as_slice(), &[1.0, 3.0, 5.0]);
        let bad = ReadoutWeights { w_out: DMatrix::zeros(1, 3), ridge_lambda: 0.0 };
        assert!(predict(&bad, &states).is_err());
    }

    #[test]
    fn nrmse_examples() {
        let y = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
        assert_eq!(nrmse(&y, &y).unwrap(), 0.0);
        let mean = DMatrix::from_element(4, 1, y.mean());
        assert!((nrmse(&mean, &y).unwrap() - 1.0).abs() < 1e-15);
        let pm = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        assert_eq!(nrmse(&DMatrix::zeros(2, 1), &pm).unwrap(), 1.0);
        assert!(nrmse(&y, &DMatrix::from_element(4, 1, 2.0)).is_err());
        assert!(nrmse(&DMatrix::zeros(1, 1), &DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(accuracy_gamma(0.0), 1.0);
        assert_eq!(accuracy_gamma(2.5), 0.0);
        assert!((accuracy_gamma(0.37) - 0.63).abs() < 1e-15);
        assert_eq!(Metrics::from_nrmse(0.25).accuracy, 0.75);
    }
}
