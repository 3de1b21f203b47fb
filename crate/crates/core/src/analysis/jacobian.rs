use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};
use crate::reservoir::{Activation, DEGENERATE_NORM};

/// Which spherical Jacobian drives the stability analysis.
///
/// `Exact` is the chain-rule derivative `r (I - â âᵀ) W / ||a||` of the map
/// `x -> r W x / ||W x||`. `Printed` is the element-wise form
/// `J_ij = r W_ij (1 - â_i â_j) / ||a||`, i.e. `W ∘ (11ᵀ - â âᵀ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianForm {
    #[default]
    Printed,
    Exact,
}

impl std::str::FromStr for JacobianForm {
    type Err = EsnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(JacobianForm::Printed),
            "exact" => Ok(JacobianForm::Exact),
            other => Err(EsnError::InvalidParameter(format!(
                "unknown jacobian form {other:?} (expected printed or exact)"
            ))),
        }
    }
}

impl std::fmt::Display for JacobianForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JacobianForm::Printed => "printed",
            JacobianForm::Exact => "exact",
        })
    }
}

fn unit_direction(a: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let norm = a.norm();
    if !(norm >= DEGENERATE_NORM) || !norm.is_finite() {
        return Err(EsnError::DegenerateActivation { norm });
    }
    Ok((a / norm, norm))
}

fn check_shapes(w: &DMatrix<f64>, a: &DVector<f64>) -> Result<()> {
    if w.is_square() && w.nrows() == a.len() {
        Ok(())
    } else {
        Err(EsnError::DimensionMismatch {
            what: "jacobian operands",
            expected: format!("{n}x{n} matrix for a {n}-vector", n = a.len()),
            found: format!("{}x{}", w.nrows(), w.ncols()),
        })
    }
}

/// Derivative of `x -> W x / ||W x||` at a point with pre-activation `a = W x`.
pub fn jacobian_spherical(w: &DMatrix<f64>, a: &DVector<f64>) -> Result<DMatrix<f64>> {
    jacobian_spherical_scaled(w, a, 1.0)
}

/// Derivative of `x -> r (W x + u) / ||W x + u||`, with `a` the pre-activation.
pub fn jacobian_spherical_scaled(w: &DMatrix<f64>, a: &DVector<f64>, r: f64) -> Result<DMatrix<f64>> {
    check_shapes(w, a)?;
    let (hat, norm) = unit_direction(a)?;
    // (I - â âᵀ) W = W - â (âᵀ W)
    let proj = w.tr_mul(&hat);
    let mut j = w.clone();
    j.ger(-1.0, &hat, &proj, 1.0);
    j *= r / norm;
    Ok(j)
}

/// Element-wise form `J_ij = r W_ij (1 - â_i â_j) / ||a||`.
pub fn jacobian_spherical_printed(w: &DMatrix<f64>, a: &DVector<f64>, r: f64) -> Result<DMatrix<f64>> {
    check_shapes(w, a)?;
    let (hat, norm) = unit_direction(a)?;
    let scale = r / norm;
    Ok(DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| scale * w[(i, j)] * (1.0 - hat[i] * hat[j])))
}

/// Jacobian of one autonomous update for any family.
///
/// `a` is the pre-activation and `x_next` the resulting state (used by tanh).
pub fn family_jacobian(
    family: Activation,
    form: JacobianForm,
    w: &DMatrix<f64>,
    a: &DVector<f64>,
    x_next: &DVector<f64>,
    r: f64,
) -> Result<DMatrix<f64>> {
    match family {
        Activation::Spherical => match form {
            JacobianForm::Exact => jacobian_spherical_scaled(w, a, r),
            JacobianForm::Printed => jacobian_spherical_printed(w, a, r),
        },
        Activation::Tanh => {
            check_shapes(w, x_next)?;
            let mut j = w.clone();
            for (i, mut row) in j.row_iter_mut().enumerate() {
                row *= 1.0 - x_next[i] * x_next[i];
            }
            Ok(j)
        }
        Activation::Linear => Ok(w.clone()),
    }
}
