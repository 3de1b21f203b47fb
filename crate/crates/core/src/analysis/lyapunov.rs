use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::jacobian::{family_jacobian, JacobianForm};
use crate::error::{EsnError, Result};
use crate::linalg::{fast_spectral_radius, spectral_radius_of};
use crate::reservoir::{activate, Activation, Reservoir};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LleOptions {
    /// Total autonomous steps, transient included.
    pub n_steps: usize,
    pub transient: usize,
    /// Local spectral radius sampled every `eig_stride` post-transient steps.
    pub eig_stride: usize,
    pub form: JacobianForm,
    /// Leading exponents tracked by the QR method; `None` tracks all N.
    pub n_exponents: Option<usize>,
}

impl Default for LleOptions {
    fn default() -> Self {
        Self {
            n_steps: 5000,
            transient: 500,
            eig_stride: 1,
            form: JacobianForm::Printed,
            n_exponents: None,
        }
    }
}

impl LleOptions {
    fn validate(&self, n_neurons: usize) -> Result<()> {
        if self.n_steps <= self.transient {
            return Err(EsnError::InvalidParameter(format!(
                "n_steps ({}) must exceed the transient ({})",
                self.n_steps, self.transient
            )));
        }
        if self.eig_stride == 0 {
            return Err(EsnError::InvalidParameter("eig_stride must be >= 1".into()));
        }
        if let Some(k) = self.n_exponents {
            if k == 0 || k > n_neurons {
                return Err(EsnError::InvalidParameter(format!(
                    "n_exponents must lie in 1..={n_neurons}, got {k}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub family: Activation,
    pub spectral_radius: f64,
    /// Leading exponent of the QR spectrum.
    pub max_lle: f64,
    /// Mean log spectral radius of the local Jacobians.
    pub max_lle_paper: f64,
    /// Descending.
    pub spectrum: Vec<f64>,
    pub n_steps: usize,
    pub n_neurons: usize,
    pub seed: u64,
    pub form: JacobianForm,
}

/// `(1/n) sum_k log rho(J_k)` along the autonomous trajectory.
pub fn max_lle_paper(reservoir: &Reservoir, opts: &LleOptions, x0: Option<&DVector<f64>>) -> Result<f64> {
    Ok(run(reservoir, opts, x0, true, false)?.0.unwrap_or(f64::NAN))
}

/// Lyapunov exponents by QR re-orthonormalization of the tangent dynamics, descending.
pub fn lyapunov_spectrum_qr(reservoir: &Reservoir, opts: &LleOptions, x0: Option<&DVector<f64>>) -> Result<Vec<f64>> {
    Ok(run(reservoir, opts, x0, false, true)?.1.unwrap_or_default())
}

/// Both estimators from a single pass over the trajectory.
pub fn lyapunov_report(reservoir: &Reservoir, opts: &LleOptions, x0: Option<&DVector<f64>>) -> Result<LyapunovReport> {
    let (paper, spectrum) = run(reservoir, opts, x0, true, true)?;
    let spectrum = spectrum.unwrap_or_default();
    Ok(LyapunovReport {
        family: reservoir.activation(),
        spectral_radius: reservoir.config().spectral_radius,
        max_lle: spectrum[0],
        max_lle_paper: paper.unwrap_or(f64::NAN),
        spectrum,
        n_steps: opts.n_steps,
        n_neurons: reservoir.n_neurons(),
        seed: reservoir.config().seed,
        form: opts.form,
    })
}

fn run(
    reservoir: &Reservoir,
    opts: &LleOptions,
    x0: Option<&DVector<f64>>,
    want_paper: bool,
    want_qr: bool,
) -> Result<(Option<f64>, Option<Vec<f64>>)> {
    let n = reservoir.n_neurons();
    opts.validate(n)?;
    let family = reservoir.activation();
    let w = reservoir.w();
    let r = reservoir.sphere_radius();
    let mut x = match x0 {
        Some(v) if v.len() != n => {
            return Err(EsnError::DimensionMismatch {
                what: "initial state",
                expected: n.to_string(),
                found: v.len().to_string(),
            })
        }
        Some(v) => v.clone(),
        None => reservoir.default_initial_state(),
    };

    let k = opts.n_exponents.unwrap_or(n);
    let mut q = DMatrix::<f64>::identity(n, k);
    let mut log_r = vec![0.0; k];
    let mut log_rho_sum = 0.0;
    let mut n_rho = 0usize;

    // the linear Jacobian is W at every step
    let constant_log_rho = if family == Activation::Linear && want_paper {
        Some(spectral_radius_of(w)?.ln())
    } else {
        None
    };

    let mut a = DVector::zeros(n);
    for step in 0..opts.n_steps {
        let measuring = step >= opts.transient;
        let sample_rho = want_paper && measuring && (step - opts.transient) % opts.eig_stride == 0;
        if family == Activation::Linear {
            if !measuring || !want_qr {
                continue;
            }
        } else if !measuring {
            a.gemv(1.0, w, &x, 0.0);
            x = activate(family, &a, r).map_err(|e| e.at_step(step + 1))?;
            continue;
        }

        let jac;
        let j = if family == Activation::Linear {
            w
        } else {
            a.gemv(1.0, w, &x, 0.0);
            let x_next = activate(family, &a, r).map_err(|e| e.at_step(step + 1))?;
            jac = family_jacobian(family, opts.form, w, &a, &x_next, r)?;
            x = x_next;
            &jac
        };

        if sample_rho && constant_log_rho.is_none() {
            let rho = fast_spectral_radius(j)?;
            log_rho_sum += rho.ln();
            n_rho += 1;
        }
        if want_qr {
            let qr = (j * &q).qr();
            let rf = qr.r();
            for (i, acc) in log_r.iter_mut().enumerate() {
                let d = rf[(i, i)].abs();
                if !(d > 0.0) || !d.is_finite() {
                    return Err(EsnError::QrBreakdown { step: step + 1 });
                }
                *acc += d.ln();
            }
            q = qr.q();
        }
    }

    let measured = (opts.n_steps - opts.transient) as f64;
    let paper = if want_paper {
        Some(constant_log_rho.unwrap_or(log_rho_sum / n_rho as f64))
    } else {
        None
    };
    let spectrum = want_qr.then(|| {
        let mut s: Vec<f64> = log_r.iter().map(|v| v / measured).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    });
    Ok((paper, spectrum))
}
