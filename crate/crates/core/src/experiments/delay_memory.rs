use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::par::Execution;
use super::seeds::{child_seed, SIGNAL_STREAM};
use super::stats::mean_std;
use crate::error::{EsnError, Result};
use crate::readout::{accuracy_gamma, nrmse, Regularization, RidgeFactor};
use crate::reservoir::{build_reservoir, Activation, Reservoir, ReservoirConfig};
use crate::signals::{normalize_unit_variance, Benchmark, TimeSeries};

/// Lengths and run counts of the delay-reconstruction protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub n_neurons: usize,
    pub train_len: usize,
    pub test_len: usize,
    pub washout: usize,
    pub n_runs: usize,
    pub tau_max: usize,
    pub regularization: Regularization,
}

impl Protocol {
    pub fn desk() -> Self {
        Self {
            n_neurons: 200,
            train_len: 2000,
            test_len: 800,
            washout: 100,
            n_runs: 5,
            tau_max: 100,
            regularization: Regularization::default(),
        }
    }

    pub fn paper() -> Self {
        Self {
            n_neurons: 1000,
            train_len: 5000,
            test_len: 2000,
            washout: 100,
            n_runs: 20,
            tau_max: 100,
            regularization: Regularization::default(),
        }
    }

    /// Samples consumed per run: the washout and `tau_max` rows are dropped so every
    /// delay trains on the same rows.
    pub fn series_len(&self) -> usize {
        self.washout + self.tau_max + self.train_len + self.test_len
    }

    fn validate(&self) -> Result<()> {
        if self.n_runs == 0 || self.train_len < 2 || self.test_len < 2 {
            return Err(EsnError::InvalidParameter(
                "protocol needs n_runs >= 1 and train/test lengths >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Seed of the input series of an experiment run with `master_seed`.
pub fn series_seed(master_seed: u64) -> u64 {
    child_seed(master_seed, SIGNAL_STREAM)
}

/// Benchmark input centered and scaled to unit variance.
pub fn benchmark_series(benchmark: Benchmark, length: usize, master_seed: u64, santa_fe_path: Option<&Path>) -> Result<TimeSeries> {
    normalize_unit_variance(&benchmark.generate(length, series_seed(master_seed), santa_fe_path)?, true)
}

/// Spectral radius and input scaling of the delay-memory experiments.
pub fn paper_hyperparams(family: Activation) -> (f64, f64) {
    match family {
        Activation::Spherical => (15.0, 0.01),
        Activation::Linear | Activation::Tanh => (0.95, 1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayMemoryResult {
    pub benchmark: Benchmark,
    pub family: Activation,
    pub taus: Vec<usize>,
    pub train_acc_mean: Vec<f64>,
    pub train_acc_std: Vec<f64>,
    pub test_acc_mean: Vec<f64>,
    pub test_acc_std: Vec<f64>,
    pub n_runs: usize,
    /// Configuration of the first run; later runs differ only in `seed`.
    pub config: ReservoirConfig,
    pub run_seeds: Vec<u64>,
    pub master_seed: u64,
    pub protocol: Protocol,
}

/// Train and test accuracy per delay for a single reservoir.
#[derive(Clone, Debug, PartialEq)]
pub struct RunAccuracy {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

/// `states * w`, one delay at a time.
pub(crate) fn column_prediction(states: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = DVector::zeros(states.nrows());
    out.gemv(1.0, states, w, 0.0);
    DMatrix::from_column_slice(states.nrows(), 1, out.as_slice())
}

pub(crate) fn column_accuracy(states: &DMatrix<f64>, w: &DVector<f64>, target: &DMatrix<f64>) -> f64 {
    accuracy_gamma(nrmse(&column_prediction(states, w), target).unwrap_or(f64::NAN))
}

/// Delay targets `y_k = s_{k - tau}` for rows `first..first + len`.
fn delay_target(inputs: &[f64], first: usize, len: usize, tau: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, 1, |i, _| inputs[first + i - tau])
}

/// One drive, one factorization, all delays.
pub fn delay_memory_run(reservoir: &Reservoir, inputs: &[f64], protocol: &Protocol) -> Result<RunAccuracy> {
    let needed = protocol.series_len();
    if inputs.len() < needed {
        return Err(EsnError::SeriesTooShort {
            needed,
            available: inputs.len(),
        });
    }
    let traj = reservoir.drive_series(&inputs[..needed], &reservoir.default_initial_state(), 0)?;
    let start = protocol.washout + protocol.tau_max;
    let train_states = traj.states.rows(start, protocol.train_len).into_owned();
    let test_start = start + protocol.train_len;
    let test_states = traj.states.rows(test_start, protocol.test_len).into_owned();

    let n_tau = protocol.tau_max + 1;
    let targets = DMatrix::from_fn(protocol.train_len, n_tau, |i, tau| inputs[start + i - tau]);
    let weights = RidgeFactor::new(&train_states, protocol.regularization)?.solve(&targets)?;

    let mut train = Vec::with_capacity(n_tau);
    let mut test = Vec::with_capacity(n_tau);
    for tau in 0..n_tau {
        let w = weights.w_out.row(tau).transpose();
        train.push(column_accuracy(&train_states, &w, &delay_target(inputs, start, protocol.train_len, tau)));
        test.push(column_accuracy(&test_states, &w, &delay_target(inputs, test_start, protocol.test_len, tau)));
    }
    Ok(RunAccuracy { train, test })
}

/// Delay-reconstruction accuracy over `protocol.n_runs` reservoir seeds.
///
/// `series` should already be normalized; every run uses the same series and a
/// reservoir seeded by `child_seed(master_seed, run)`.
pub fn delay_memory_experiment(
    benchmark: Benchmark,
    series: &TimeSeries,
    family: Activation,
    spectral_radius: f64,
    input_scaling: f64,
    protocol: &Protocol,
    master_seed: u64,
    exec: Execution,
) -> Result<DelayMemoryResult> {
    protocol.validate()?;
    let needed = protocol.series_len();
    if series.len() < needed {
        return Err(EsnError::SeriesTooShort {
            needed,
            available: series.len(),
        });
    }
    let inputs = series.as_slice();
    let run_seeds: Vec<u64> = (0..protocol.n_runs as u64).map(|r| child_seed(master_seed, r)).collect();
    let config_for = |seed: u64| ReservoirConfig::new(family, protocol.n_neurons, spectral_radius, input_scaling, seed);

    let runs = exec.map(&run_seeds, |&seed| -> Result<RunAccuracy> {
        let reservoir = build_reservoir(&config_for(seed))?;
        delay_memory_run(&reservoir, inputs, protocol)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let n_tau = protocol.tau_max + 1;
    let aggregate = |pick: fn(&RunAccuracy) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        (0..n_tau)
            .map(|tau| mean_std(&runs.iter().map(|r| pick(r)[tau]).collect::<Vec<_>>()))
            .unzip()
    };
    let (train_acc_mean, train_acc_std) = aggregate(|r| &r.train);
    let (test_acc_mean, test_acc_std) = aggregate(|r| &r.test);

    Ok(DelayMemoryResult {
        benchmark,
        family,
        taus: (0..n_tau).collect(),
        train_acc_mean,
        train_acc_std,
        test_acc_mean,
        test_acc_std,
        n_runs: protocol.n_runs,
        config: config_for(run_seeds[0]),
        run_seeds,
        master_seed,
        protocol: protocol.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readout::fit_ridge_with;
    use crate::signals::{normalize_unit_variance, white_noise};

    fn tiny() -> Protocol {
        Protocol {
            n_neurons: 30,
            train_len: 300,
            test_len: 100,
            washout: 20,
            n_runs: 3,
            tau_max: 12,
            regularization: Regularization::default(),
        }
    }

    #[test]
    fn shared_drive_matches_per_delay_redrive() {
        let p = tiny();
        let u = normalize_unit_variance(&white_noise(p.series_len(), 1).unwrap(), false).unwrap();
        let inputs = u.as_slice();
        let res = build_reservoir(&ReservoirConfig::new(Activation::Spherical, p.n_neurons, 15.0, 0.01, 2)).unwrap();
        let shared = delay_memory_run(&res, inputs, &p).unwrap();

        let start = p.washout + p.tau_max;
        for tau in 0..=p.tau_max {
            let traj = res.drive_series(inputs, &res.default_initial_state(), 0).unwrap();
            let xtr = traj.states.rows(start, p.train_len).into_owned();
            let xte = traj.states.rows(start + p.train_len, p.test_len).into_owned();
            let ytr = delay_target(inputs, start, p.train_len, tau);
            let yte = delay_target(inputs, start + p.train_len, p.test_len, tau);
            let w = fit_ridge_with(&xtr, &ytr, p.regularization).unwrap();
            let w = w.w_out.row(0).transpose();
            assert_eq!(shared.train[tau].to_bits(), column_accuracy(&xtr, &w, &ytr).to_bits(), "train tau {tau}");
            assert_eq!(shared.test[tau].to_bits(), column_accuracy(&xte, &w, &yte).to_bits(), "test tau {tau}");
        }
    }

    #[test]
    fn experiment_is_reproducible_and_schedule_independent() {
        let p = tiny();
        let u = normalize_unit_variance(&white_noise(p.series_len(), 5).unwrap(), false).unwrap();
        let a = delay_memory_experiment(Benchmark::WhiteNoise, &u, Activation::Linear, 0.95, 1.0, &p, 9, Execution::Parallel).unwrap();
        let b = delay_memory_experiment(Benchmark::WhiteNoise, &u, Activation::Linear, 0.95, 1.0, &p, 9, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.taus.len(), p.tau_max + 1);
        assert_eq!(a.test_acc_mean.len(), a.taus.len());
        assert!(a.train_acc_std.iter().chain(&a.test_acc_std).all(|s| *s >= 0.0));
        assert_eq!(a.run_seeds.len(), 3);
    }

    #[test]
    fn short_series_is_rejected() {
        let p = tiny();
        let u = white_noise(p.series_len() - 1, 0).unwrap();
        let err = delay_memory_experiment(Benchmark::WhiteNoise, &u, Activation::Tanh, 0.95, 1.0, &p, 0, Execution::Sequential);
        assert!(matches!(err, Err(EsnError::SeriesTooShort { .. })));
    }
}
