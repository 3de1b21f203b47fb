use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};
use crate::reservoir::{Activation, Trajectory};

/// Parameters of the closed-form memory curve of each family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MemoryParams {
    /// `alpha = rho / delta`.
    Spherical { alpha: f64 },
    Linear { rho: f64 },
    /// `magnitude` is the input norm fed to the first tanh.
    Tanh { rho: f64, magnitude: f64 },
}

impl MemoryParams {
    pub fn family(&self) -> Activation {
        match self {
            MemoryParams::Spherical { .. } => Activation::Spherical,
            MemoryParams::Linear { .. } => Activation::Linear,
            MemoryParams::Tanh { .. } => Activation::Tanh,
        }
    }

    /// Linear and tanh curves are only non-increasing and bounded by 1 for `rho <= 1`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EsnError::InvalidParameter(msg));
        match *self {
            MemoryParams::Spherical { alpha } if !(alpha > 0.0 && alpha.is_finite()) => bad(format!("alpha must be positive, got {alpha}")),
            MemoryParams::Linear { rho } | MemoryParams::Tanh { rho, .. } if !(rho > 0.0 && rho <= 1.0) => {
                bad(format!("rho must lie in (0, 1], got {rho}"))
            }
            MemoryParams::Tanh { magnitude, .. } if !(magnitude >= 0.0 && magnitude.is_finite()) => {
                bad(format!("input magnitude must be non-negative, got {magnitude}"))
            }
            _ => Ok(()),
        }
    }

    /// Memory at infinite lag.
    fn limit(&self) -> f64 {
        match *self {
            MemoryParams::Linear { rho } if rho == 1.0 => 1.0,
            _ => 0.0,
        }
    }
}

/// `S(0) = tanh(magnitude)`, `S(n+1) = tanh(rho S(n))`, unnormalized.
pub fn tanh_memory_chain(rho: f64, magnitude: f64, lag: usize) -> f64 {
    let mut s = magnitude.tanh();
    for _ in 0..lag {
        s = (rho * s).tanh();
    }
    s
}

/// Closed-form memory of the input `lag` steps in the past, equal to 1 at lag 0.
pub fn theoretical_memory(params: &MemoryParams, lag: usize) -> Result<f64> {
    params.validate()?;
    Ok(memory_value(params, lag))
}

fn memory_value(params: &MemoryParams, lag: usize) -> f64 {
    let lag_i = i32::try_from(lag).unwrap_or(i32::MAX);
    match *params {
        MemoryParams::Spherical { alpha } => (alpha / (alpha + 1.0)).powi(lag_i),
        MemoryParams::Linear { rho } => rho.powi(lag_i),
        // small-input limit of the normalized chain
        MemoryParams::Tanh { rho, magnitude } if magnitude == 0.0 => rho.powi(lag_i),
        MemoryParams::Tanh { rho, magnitude } => tanh_memory_chain(rho, magnitude, lag) / magnitude.tanh(),
    }
}

/// `M(k|m) - M(k|n)` for `m > n > k`; never positive.
pub fn memory_loss(params: &MemoryParams, k: usize, m: usize, n: usize) -> Result<f64> {
    params.validate()?;
    if !(m > n && n > k) {
        return Err(EsnError::InvalidParameter(format!("memory_loss needs m > n > k, got k={k}, n={n}, m={m}")));
    }
    Ok(memory_value(params, m - k) - memory_value(params, n - k))
}

/// `M(n-a|n) - M(n-a-delta|n)`: how much more the newer of two inputs is remembered.
pub fn input_ordering_gap(params: &MemoryParams, a: usize, delta: usize) -> Result<f64> {
    params.validate()?;
    if a == 0 || delta == 0 {
        return Err(EsnError::InvalidParameter(format!("a and delta must be >= 1, got a={a}, delta={delta}")));
    }
    Ok(memory_value(params, a) - memory_value(params, a + delta))
}

/// `input_ordering_gap` as `delta -> infinity`; `(alpha/(alpha+1))^a` for the spherical family.
pub fn input_ordering_gap_limit(params: &MemoryParams, a: usize) -> Result<f64> {
    params.validate()?;
    if a == 0 {
        return Err(EsnError::InvalidParameter("a must be >= 1".into()));
    }
    Ok(memory_value(params, a) - params.limit())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryCurve {
    pub family: Activation,
    pub params: MemoryParams,
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn memory_curve(params: &MemoryParams, max_lag: usize) -> Result<MemoryCurve> {
    params.validate()?;
    let lags: Vec<usize> = (0..=max_lag).collect();
    let values = lags.iter().map(|&l| memory_value(params, l)).collect();
    Ok(MemoryCurve {
        family: params.family(),
        params: *params,
        lags,
        values,
    })
}

/// Mean and spread of `delta_l = N_l - rho` over the post-washout steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub mean: f64,
    /// Sample standard deviation (zero for a single step).
    pub std: f64,
    pub n: usize,
}

impl DeltaEstimate {
    /// `alpha = rho / delta`.
    pub fn alpha(&self, spectral_radius: f64) -> f64 {
        spectral_radius / self.mean
    }
}

pub fn estimate_delta(trajectory: &Trajectory, spectral_radius: f64) -> Result<DeltaEstimate> {
    let factors = trajectory.training_norm_factors();
    if factors.is_empty() {
        return Err(EsnError::Empty("trajectory"));
    }
    let deltas: Vec<f64> = factors.iter().map(|nf| nf - spectral_radius).collect();
    let (mean, std) = crate::experiments::stats::mean_std(&deltas);
    Ok(DeltaEstimate {
        mean,
        std,
        n: deltas.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SPH1: MemoryParams = MemoryParams::Spherical { alpha: 1.0 };

    #[test]
    fn closed_form_examples() {
        assert_relative_eq!(theoretical_memory(&SPH1, 2).unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(
            theoretical_memory(&MemoryParams::Linear { rho: 0.95 }, 10).unwrap(),
            0.5987369392383789,
            epsilon = 1e-12
        );
        assert_relative_eq!(tanh_memory_chain(1.0, 1.0, 1), 1f64.tanh().tanh(), epsilon = 1e-15);
        assert!((tanh_memory_chain(1.0, 1.0, 1) - 0.6420).abs() < 5e-5);
        let tanh = MemoryParams::Tanh { rho: 1.0, magnitude: 1.0 };
        assert_eq!(theoretical_memory(&tanh, 0).unwrap(), 1.0);
    }

    #[test]
    fn zero_magnitude_tanh_is_linear_limit() {
        let t = MemoryParams::Tanh { rho: 0.9, magnitude: 0.0 };
        let tiny = MemoryParams::Tanh { rho: 0.9, magnitude: 1e-8 };
        for lag in 0..20 {
            assert_relative_eq!(
                theoretical_memory(&t, lag).unwrap(),
                theoretical_memory(&tiny, lag).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn loss_examples() {
        assert_relative_eq!(memory_loss(&SPH1, 0, 2, 1).unwrap(), -0.25, epsilon = 1e-15);
        let big = MemoryParams::Spherical { alpha: 1e12 };
        assert!(memory_loss(&big, 0, 10, 1).unwrap().abs() < 1e-10);
        let lin1 = MemoryParams::Linear { rho: 1.0 };
        assert_eq!(memory_loss(&lin1, 3, 40, 7).unwrap(), 0.0);
        assert!(memory_loss(&SPH1, 1, 1, 2).is_err());
        assert!(memory_loss(&SPH1, 2, 3, 2).is_err());
    }

    #[test]
    fn ordering_gap_examples() {
        assert_relative_eq!(input_ordering_gap_limit(&SPH1, 1).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(input_ordering_gap(&SPH1, 1, 2000).unwrap(), 0.5, epsilon = 1e-12);
        let sph2 = MemoryParams::Spherical { alpha: 2.0 };
        assert_relative_eq!(input_ordering_gap(&sph2, 2, 1).unwrap(), 4.0 / 27.0, epsilon = 1e-15);
        let lin1 = MemoryParams::Linear { rho: 1.0 };
        assert_eq!(input_ordering_gap(&lin1, 4, 9).unwrap(), 0.0);
        assert_eq!(input_ordering_gap_limit(&lin1, 4).unwrap(), 0.0);
        assert!(input_ordering_gap(&SPH1, 0, 1).is_err());
    }

    #[test]
    fn invalid_params() {
        assert!(theoretical_memory(&MemoryParams::Spherical { alpha: 0.0 }, 1).is_err());
        assert!(theoretical_memory(&MemoryParams::Linear { rho: 1.5 }, 1).is_err());
        assert!(theoretical_memory(&MemoryParams::Tanh { rho: 0.5, magnitude: -1.0 }, 1).is_err());
    }

    #[test]
    fn curve_has_requested_lags() {
        let c = memory_curve(&SPH1, 5).unwrap();
        assert_eq!(c.lags, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(c.values[0], 1.0);
        assert_eq!(c.family, Activation::Spherical);
    }

    #[test]
    fn delta_single_step_by_hand() {
        use crate::reservoir::Reservoir;
        use nalgebra::{DMatrix, DVector};
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let w_in = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let r = Reservoir::from_matrices(w, w_in, Activation::Spherical, 1.0).unwrap();
        let t = r.drive_series(&[1.0], &DVector::from_vec(vec![1.0, 0.0]), 0).unwrap();
        let d = estimate_delta(&t, 2.0).unwrap();
        assert_relative_eq!(d.mean, 5f64.sqrt() - 2.0, epsilon = 1e-15);
        assert_eq!(d.n, 1);
        assert_eq!(d.std, 0.0);
    }
}
