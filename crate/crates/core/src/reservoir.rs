//! Reservoir construction and state evolution for the spherical, tanh and linear families.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};
use crate::linalg::{ensure_finite_matrix, ensure_finite_slice, min_singular_value, operator_norm, spectral_radius_of};

/// Pre-activation norms below this are treated as a collapsed state.
pub const DEGENERATE_NORM: f64 = 1e-300;

const MAX_DRAWS: usize = 10;
const NILPOTENT_RADIUS: f64 = 1e-10;
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Spherical,
    Tanh,
    Linear,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Spherical, Activation::Linear, Activation::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Spherical => "spherical",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = EsnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spherical" => Ok(Activation::Spherical),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(EsnError::InvalidParameter(format!(
                "unknown activation family {other:?} (expected spherical, tanh or linear)"
            ))),
        }
    }
}

/// Generative hyper-parameters of a reservoir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub n_neurons: usize,
    pub n_inputs: usize,
    pub spectral_radius: f64,
    pub input_scaling: f64,
    pub activation: Activation,
    pub sphere_radius: f64,
    pub density: f64,
    pub seed: u64,
}

impl ReservoirConfig {
    /// Dense, single-input configuration with unit sphere radius.
    pub fn new(activation: Activation, n_neurons: usize, spectral_radius: f64, input_scaling: f64, seed: u64) -> Self {
        Self {
            n_neurons,
            n_inputs: 1,
            spectral_radius,
            input_scaling,
            activation,
            sphere_radius: 1.0,
            density: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EsnError::InvalidConfig(msg));
        if self.n_neurons < 2 {
            return bad(format!("n_neurons must be >= 2, got {}", self.n_neurons));
        }
        if self.n_inputs < 1 {
            return bad("n_inputs must be >= 1".into());
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return bad(format!("spectral_radius must be positive, got {}", self.spectral_radius));
        }
        if !(self.input_scaling >= 0.0 && self.input_scaling.is_finite()) {
            return bad(format!("input_scaling must be non-negative, got {}", self.input_scaling));
        }
        if !(self.sphere_radius > 0.0 && self.sphere_radius.is_finite()) {
            return bad(format!("sphere_radius must be positive, got {}", self.sphere_radius));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density must lie in (0, 1], got {}", self.density));
        }
        Ok(())
    }
}

/// Random matrices drawn for a seed, normalized to unit spectral radius and unit input scaling.
///
/// Sweeps over spectral radius and input scaling reuse one draw per seed; scaling
/// a draw gives exactly the matrices `build_reservoir` would produce.
#[derive(Clone, Debug)]
pub struct ReservoirDraw {
    w_unit: DMatrix<f64>,
    w_in_unit: DMatrix<f64>,
    density: f64,
    seed: u64,
}

impl ReservoirDraw {
    pub fn new(n_neurons: usize, n_inputs: usize, density: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_DRAWS {
            let w = draw_recurrent(&mut rng, n_neurons, density);
            let rho = spectral_radius_of(&w)?;
            if rho > NILPOTENT_RADIUS {
                let w_in = DMatrix::from_fn(n_neurons, n_inputs, |_, _| rng.gen_range(-1.0..=1.0));
                return Ok(Self {
                    w_unit: w / rho,
                    w_in_unit: w_in,
                    density,
                    seed,
                });
            }
        }
        Err(EsnError::RescaleFailed { attempts: MAX_DRAWS })
    }

    pub fn n_neurons(&self) -> usize {
        self.w_unit.nrows()
    }

    pub fn instantiate(&self, activation: Activation, spectral_radius: f64, input_scaling: f64, sphere_radius: f64) -> Result<Reservoir> {
        let config = ReservoirConfig {
            n_neurons: self.w_unit.nrows(),
            n_inputs: self.w_in_unit.ncols(),
            spectral_radius,
            input_scaling,
            activation,
            sphere_radius,
            density: self.density,
            seed: self.seed,
        };
        config.validate()?;
        Ok(Reservoir {
            w: &self.w_unit * spectral_radius,
            w_in: &self.w_in_unit * input_scaling,
            config,
        })
    }
}

fn draw_recurrent(rng: &mut ChaCha8Rng, n: usize, density: f64) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if density < 1.0 && rng.gen::<f64>() >= density {
                continue;
            }
            w[(i, j)] = rng.sample(StandardNormal);
        }
    }
    w
}

/// Frozen recurrent and input matrices plus the configuration that produced them.
#[derive(Clone, Debug)]
pub struct Reservoir {
    w: DMatrix<f64>,
    w_in: DMatrix<f64>,
    config: ReservoirConfig,
}

/// Draws `W` (Gaussian, Bernoulli density mask, rescaled to the target spectral
/// radius) and `W_in` (uniform on [-1, 1] times the input scaling).
pub fn build_reservoir(config: &ReservoirConfig) -> Result<Reservoir> {
    config.validate()?;
    let draw = ReservoirDraw::new(config.n_neurons, config.n_inputs, config.density, config.seed)?;
    let mut r = draw.instantiate(config.activation, config.spectral_radius, config.input_scaling, config.sphere_radius)?;
    r.config = config.clone();
    Ok(r)
}

impl Reservoir {
    /// Wraps explicit matrices. The recorded spectral radius is measured from `w`.
    pub fn from_matrices(w: DMatrix<f64>, w_in: DMatrix<f64>, activation: Activation, sphere_radius: f64) -> Result<Self> {
        if !w.is_square() || w.nrows() < 1 {
            return Err(EsnError::DimensionMismatch {
                what: "recurrent matrix",
                expected: "non-empty square matrix".into(),
                found: format!("{}x{}", w.nrows(), w.ncols()),
            });
        }
        if w_in.nrows() != w.nrows() {
            return Err(EsnError::DimensionMismatch {
                what: "input matrix rows",
                expected: w.nrows().to_string(),
                found: w_in.nrows().to_string(),
            });
        }
        if !(sphere_radius > 0.0 && sphere_radius.is_finite()) {
            return Err(EsnError::InvalidConfig(format!("sphere_radius must be positive, got {sphere_radius}")));
        }
        ensure_finite_matrix(&w_in, "input matrix")?;
        let spectral_radius = spectral_radius_of(&w)?;
        let input_scaling = w_in.amax();
        let config = ReservoirConfig {
            n_neurons: w.nrows(),
            n_inputs: w_in.ncols(),
            spectral_radius,
            input_scaling,
            activation,
            sphere_radius,
            density: 1.0,
            seed: 0,
        };
        Ok(Self { w, w_in, config })
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn w_in(&self) -> &DMatrix<f64> {
        &self.w_in
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn activation(&self) -> Activation {
        self.config.activation
    }

    pub fn n_neurons(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn sphere_radius(&self) -> f64 {
        self.config.sphere_radius
    }

    /// Same matrices under a different activation family.
    pub fn with_activation(&self, activation: Activation) -> Self {
        let mut r = self.clone();
        r.config.activation = activation;
        r
    }

    /// `r e_1` for the spherical family, the origin otherwise.
    pub fn default_initial_state(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n_neurons());
        if self.activation() == Activation::Spherical {
            x[0] = self.sphere_radius();
        }
        x
    }

    /// `sigma_min(W) - 1 - ||W_in|| * max_input_norm / r`; non-negative means the
    /// sufficient contractivity condition holds.
    pub fn contractivity_margin(&self, max_input_norm: f64) -> Result<f64> {
        if !(max_input_norm >= 0.0 && max_input_norm.is_finite()) {
            return Err(EsnError::InvalidParameter(format!(
                "max_input_norm must be non-negative, got {max_input_norm}"
            )));
        }
        let sigma = min_singular_value(&self.w)?;
        let win = operator_norm(&self.w_in)?;
        Ok(sigma - 1.0 - win * max_input_norm / self.sphere_radius())
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n_neurons() {
            return Err(EsnError::DimensionMismatch {
                what: "state",
                expected: self.n_neurons().to_string(),
                found: x.len().to_string(),
            });
        }
        ensure_finite_slice(x.as_slice(), "state")
    }

    fn check_input(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.n_inputs() {
            return Err(EsnError::DimensionMismatch {
                what: "input",
                expected: self.n_inputs().to_string(),
                found: s.len().to_string(),
            });
        }
        ensure_finite_slice(s, "input")
    }

    /// `a = W x + W_in s`, written into `a`. Shared by `step` and `drive`.
    fn preactivation_into(&self, x: &DVector<f64>, s: &[f64], a: &mut DVector<f64>) {
        a.gemv(1.0, &self.w, x, 0.0);
        for (j, &sj) in s.iter().enumerate() {
            a.axpy(sj, &self.w_in.column(j), 1.0);
        }
    }

    /// One update. Returns the new state and the norm factor `||a||`.
    pub fn step(&self, state: &NetworkState, input: &[f64]) -> Result<(NetworkState, f64)> {
        self.check_state(&state.x)?;
        self.check_input(input)?;
        let mut a = DVector::zeros(self.n_neurons());
        self.preactivation_into(&state.x, input, &mut a);
        let norm = a.norm();
        activate_in_place(self.activation(), &mut a, self.sphere_radius(), norm)?;
        Ok((
            NetworkState {
                x: a,
                step_index: state.step_index + 1,
            },
            norm,
        ))
    }

    /// Runs the network over `inputs` (T x N_in), recording every state and norm factor.
    pub fn drive(&self, inputs: &DMatrix<f64>, x0: &DVector<f64>, washout: usize) -> Result<Trajectory> {
        let t_len = inputs.nrows();
        if t_len == 0 {
            return Err(EsnError::Empty("input sequence"));
        }
        if washout >= t_len {
            return Err(EsnError::SeriesTooShort {
                needed: washout + 1,
                available: t_len,
            });
        }
        if inputs.ncols() != self.n_inputs() {
            return Err(EsnError::DimensionMismatch {
                what: "input columns",
                expected: self.n_inputs().to_string(),
                found: inputs.ncols().to_string(),
            });
        }
        ensure_finite_matrix(inputs, "inputs")?;
        self.check_state(x0)?;

        let n = self.n_neurons();
        let mut states = DMatrix::zeros(t_len, n);
        let mut norm_factors = Vec::with_capacity(t_len);
        let mut x = x0.clone();
        let mut a = DVector::zeros(n);
        let mut s = vec![0.0; self.n_inputs()];
        for k in 0..t_len {
            for (j, sj) in s.iter_mut().enumerate() {
                *sj = inputs[(k, j)];
            }
            self.preactivation_into(&x, &s, &mut a);
            let norm = a.norm();
            activate_in_place(self.activation(), &mut a, self.sphere_radius(), norm).map_err(|e| e.at_step(k + 1))?;
            std::mem::swap(&mut x, &mut a);
            states.row_mut(k).copy_from(&x.transpose());
            norm_factors.push(norm);
        }
        Ok(Trajectory {
            states,
            norm_factors,
            washout,
        })
    }

    /// `drive` for a scalar input series.
    pub fn drive_series(&self, inputs: &[f64], x0: &DVector<f64>, washout: usize) -> Result<Trajectory> {
        self.drive(&DMatrix::from_column_slice(inputs.len(), 1, inputs), x0, washout)
    }

    /// Rebuilds the final state of a spherical drive as a weighted sum over the
    /// inputs, `x_n = M(n,0) x_0 + sum_k M(n,k) u_k`, where each memory matrix is a
    /// power of `W` divided by the recorded norm factors. Every term is evaluated
    /// independently of the recursion.
    pub fn state_decomposition(&self, inputs: &DMatrix<f64>, x0: &DVector<f64>) -> Result<DVector<f64>> {
        if self.activation() != Activation::Spherical {
            return Err(EsnError::InvalidParameter("state decomposition applies to the spherical family".into()));
        }
        let traj = self.drive(inputs, x0, 0)?;
        let factors = &traj.norm_factors;
        if let Some(bad) = factors.iter().find(|&&v| !(v > 0.0)) {
            return Err(EsnError::DegenerateActivation { norm: *bad });
        }
        let t_len = inputs.nrows();
        let r = self.sphere_radius();
        let n = self.n_neurons();

        // u_k = W_in s_k, k = 1..T (row k-1 of inputs)
        let u_at = |k: usize| -> DVector<f64> { &self.w_in * inputs.row(k - 1).transpose() };

        let mut total = DVector::zeros(n);
        let mut tmp = DVector::zeros(n);
        // term k propagates u_k (or x_0 for k = 0) through steps k+1..T
        for k in 0..=t_len {
            let mut v = if k == 0 { x0.clone() } else { u_at(k) * (r / factors[k - 1]) };
            for l in (k + 1)..=t_len {
                tmp.gemv(r / factors[l - 1], &self.w, &v, 0.0);
                std::mem::swap(&mut v, &mut tmp);
            }
            total += v;
        }
        Ok(total)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = ReservoirFile {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            w: RowMajor::from(&self.w),
            w_in: RowMajor::from(&self.w_in),
        };
        let text = serde_json::to_string(&file).map_err(|e| EsnError::Serialization(e.to_string()))?;
        fs::write(path, text).map_err(|e| EsnError::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| EsnError::io(path, e))?;
        let file: ReservoirFile = serde_json::from_str(&text).map_err(|e| EsnError::Serialization(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(EsnError::Serialization(format!(
                "unsupported reservoir format version {}",
                file.format_version
            )));
        }
        let w = file.w.into_matrix()?;
        let w_in = file.w_in.into_matrix()?;
        let c = &file.config;
        if w.nrows() != c.n_neurons || !w.is_square() || w_in.nrows() != c.n_neurons || w_in.ncols() != c.n_inputs {
            return Err(EsnError::Serialization("matrix shapes disagree with the embedded config".into()));
        }
        ensure_finite_matrix(&w, "recurrent matrix")?;
        ensure_finite_matrix(&w_in, "input matrix")?;
        Ok(Self {
            w,
            w_in,
            config: file.config,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ReservoirFile {
    format_version: u32,
    config: ReservoirConfig,
    w: RowMajor,
    w_in: RowMajor,
}

#[derive(Serialize, Deserialize)]
struct RowMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for RowMajor {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl RowMajor {
    fn into_matrix(self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(EsnError::Serialization(format!(
                "matrix data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// Network state after `step_index` updates.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub x: DVector<f64>,
    pub step_index: usize,
}

impl NetworkState {
    pub fn new(x: DVector<f64>) -> Self {
        Self { x, step_index: 0 }
    }
}

/// States `x_1..x_T` (rows) and the norm factors of each update.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: DMatrix<f64>,
    pub norm_factors: Vec<f64>,
    pub washout: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn final_state(&self) -> DVector<f64> {
        self.states.row(self.len() - 1).transpose()
    }

    /// Rows after the washout prefix.
    pub fn training_states(&self) -> DMatrix<f64> {
        self.states.rows(self.washout, self.len() - self.washout).into_owned()
    }

    pub fn training_norm_factors(&self) -> &[f64] {
        &self.norm_factors[self.washout..]
    }
}

fn activate_in_place(family: Activation, a: &mut DVector<f64>, r: f64, norm: f64) -> Result<()> {
    match family {
        Activation::Spherical => {
            if !(norm >= DEGENERATE_NORM) || !norm.is_finite() {
                return Err(EsnError::DegenerateActivation { norm });
            }
            *a *= r / norm;
        }
        Activation::Tanh => a.apply(|v| *v = v.tanh()),
        Activation::Linear => {
            if !norm.is_finite() {
                return Err(EsnError::NonFinite("linear state"));
            }
        }
    }
    Ok(())
}

/// Applies the activation of `family` to a pre-activation vector.
pub fn activate(family: Activation, a: &DVector<f64>, r: f64) -> Result<DVector<f64>> {
    ensure_finite_slice(a.as_slice(), "pre-activation")?;
    let mut out = a.clone();
    activate_in_place(family, &mut out, r, a.norm())?;
    Ok(out)
}

/// `W^n x_0 / ||W^n x_0||`, renormalizing after every product.
pub fn autonomous_power_form(w: &DMatrix<f64>, x0: &DVector<f64>, n: usize) -> Result<DVector<f64>> {
    if !w.is_square() || w.ncols() != x0.len() {
        return Err(EsnError::DimensionMismatch {
            what: "power form operands",
            expected: format!("square matrix of order {}", x0.len()),
            found: format!("{}x{}", w.nrows(), w.ncols()),
        });
    }
    ensure_finite_matrix(w, "recurrent matrix")?;
    let x0_norm = x0.norm();
    if !(x0_norm >= DEGENERATE_NORM) {
        return Err(EsnError::DegenerateActivation { norm: x0_norm });
    }
    let mut v = x0 / x0_norm;
    let mut next = DVector::zeros(x0.len());
    for i in 0..n {
        next.gemv(1.0, w, &v, 0.0);
        let norm = next.norm();
        if !(norm >= DEGENERATE_NORM) || !norm.is_finite() {
            return Err(EsnError::DegenerateActivation { norm }.at_step(i + 1));
        }
        next /= norm;
        std::mem::swap(&mut v, &mut next);
    }
    Ok(v)
}
