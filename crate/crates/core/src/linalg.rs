//! Dense matrix helpers: spectral radius, extreme singular values, finiteness checks.

use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{EsnError, Result};

const POWER_MAX_ITERS: usize = 300;
const POWER_STABLE_ITERS: usize = 3;
const POWER_REL_CHANGE: f64 = 1e-13;
const POWER_RESIDUAL: f64 = 1e-10;

pub(crate) fn ensure_finite_matrix(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EsnError::NonFinite(what))
    }
}

pub(crate) fn ensure_finite_slice(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(EsnError::NonFinite(what))
    }
}

fn ensure_square(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(EsnError::DimensionMismatch {
            what,
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        })
    }
}

/// Largest absolute eigenvalue of a square matrix.
///
/// A power iteration is tried first; it is accepted only when the estimate is
/// stable and the Rayleigh residual confirms an eigenpair. Matrices whose
/// dominant eigenvalue is a complex pair or is poorly separated (the usual case
/// for random reservoirs) fall through to a dense Schur decomposition.
pub fn spectral_radius_of(m: &DMatrix<f64>) -> Result<f64> {
    ensure_square(m, "spectral radius input")?;
    ensure_finite_matrix(m, "spectral radius input")?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    if let Some(rho) = power_iteration(m) {
        return Ok(rho);
    }
    dense_spectral_radius(m)
}

/// Spectral radius from the full set of eigenvalues (Schur form).
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    ensure_square(m, "spectral radius input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(10)).ok_or(EsnError::EigenFailed)?;
    let eig = schur.complex_eigenvalues();
    let rho = eig.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if rho.is_finite() {
        Ok(rho)
    } else {
        Err(EsnError::EigenFailed)
    }
}

/// Eigenvalue-only spectral radius for hot loops; skips the Schur vectors.
pub(crate) fn fast_spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let rho = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max);
    if rho.is_finite() {
        Ok(rho)
    } else {
        Err(EsnError::EigenFailed)
    }
}

fn power_iteration(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    // deterministic, generic start vector
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i as f64) * 0.7548776662).sin());
    x /= x.norm();
    let mut y = DVector::zeros(n);
    let mut prev = f64::NAN;
    let mut stable = 0;
    for _ in 0..POWER_MAX_ITERS {
        y.gemv(1.0, m, &x, 0.0);
        let norm = y.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        x.copy_from(&y);
        x /= norm;
        if (norm - prev).abs() <= POWER_REL_CHANGE * norm {
            stable += 1;
            if stable >= POWER_STABLE_ITERS {
                y.gemv(1.0, m, &x, 0.0);
                let mu = x.dot(&y);
                let residual = (&y - &x * mu).norm();
                return (residual <= POWER_RESIDUAL * mu.abs().max(f64::MIN_POSITIVE)).then_some(mu.abs());
            }
        } else {
            stable = 0;
        }
        prev = norm;
    }
    None
}

/// Smallest singular value. Non-square inputs use the `min(rows, cols)` values.
pub fn min_singular_value(m: &DMatrix<f64>) -> Result<f64> {
    ensure_finite_matrix(m, "singular value input")?;
    if m.is_empty() {
        return Err(EsnError::Empty("matrix"));
    }
    let sv = m.clone().svd(false, false).singular_values;
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Operator 2-norm (largest singular value).
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    ensure_finite_matrix(m, "operator norm input")?;
    if m.is_empty() {
        return Ok(0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    Ok(sv.iter().copied().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_has_unit_radius() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(spectral_radius_of(&m).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn diagonal_picks_largest_magnitude() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0]));
        assert_relative_eq!(spectral_radius_of(&m).unwrap(), 3.0, max_relative = 1e-9);
    }

    #[test]
    fn rotation_pair_falls_back_to_dense() {
        // eigenvalues 2e^{±iπ/3}: power iteration cannot settle
        let (c, s) = (std::f64::consts::FRAC_PI_3.cos(), std::f64::consts::FRAC_PI_3.sin());
        let m = DMatrix::from_row_slice(3, 3, &[2.0 * c, -2.0 * s, 0.0, 2.0 * s, 2.0 * c, 0.0, 0.0, 0.0, 0.5]);
        assert!(power_iteration(&m).is_none());
        assert_relative_eq!(spectral_radius_of(&m).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn opposite_sign_pair_is_not_accepted_by_power_iteration() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -3.0, 1.0]));
        assert!(power_iteration(&m).is_none());
        assert_relative_eq!(spectral_radius_of(&m).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn nilpotent_has_zero_radius() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(spectral_radius_of(&m).unwrap() < 1e-12);
    }

    #[test]
    fn nan_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(spectral_radius_of(&m), Err(EsnError::NonFinite(_))));
        assert!(matches!(min_singular_value(&m), Err(EsnError::NonFinite(_))));
    }

    #[test]
    fn non_square_is_rejected() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(spectral_radius_of(&m), Err(EsnError::DimensionMismatch { .. })));
    }

    #[test]
    fn singular_values_of_small_cases() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert_relative_eq!(min_singular_value(&d).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(operator_norm(&d).unwrap(), 3.0, max_relative = 1e-12);

        let ones = DMatrix::from_element(2, 2, 1.0);
        assert!(min_singular_value(&ones).unwrap() < 1e-12);

        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert_relative_eq!(min_singular_value(&rot).unwrap(), 1.0, max_relative = 1e-12);
    }
}
