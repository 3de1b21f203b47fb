use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::delay_memory::{column_prediction, paper_hyperparams};
use super::par::Execution;
use super::seeds::{child_seed, SIGNAL_STREAM};
use super::stats::mean_std;
use crate::error::{EsnError, Result};
use crate::readout::{accuracy_gamma, nrmse, Regularization, RidgeFactor};
use crate::reservoir::{Activation, Reservoir, ReservoirDraw};
use crate::signals::{normalize_unit_variance, white_noise, TimeSeries};

/// Hyper-parameter grid and lengths of the trade-off protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub sr_values: Vec<f64>,
    pub scaling_values: Vec<f64>,
    pub n_seeds: usize,
    pub n_neurons: usize,
    pub train_len: usize,
    pub test_len: usize,
    pub washout: usize,
    pub regularization: Regularization,
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Spectral radius search range per family.
pub fn sr_range(family: Activation) -> (f64, f64) {
    match family {
        Activation::Tanh => (0.2, 3.0),
        Activation::Linear => (0.2, 1.5),
        Activation::Spherical => (0.2, 10.0),
    }
}

pub const SCALING_RANGE: (f64, f64) = (0.01, 2.0);

impl SweepPlan {
    /// 20 x 20 grid, 500 training and 200 test samples, N = 1000.
    pub fn paper(family: Activation) -> Self {
        let (lo, hi) = sr_range(family);
        Self {
            sr_values: linspace(lo, hi, 20),
            scaling_values: linspace(SCALING_RANGE.0, SCALING_RANGE.1, 20),
            n_seeds: 1,
            n_neurons: 1000,
            train_len: 500,
            test_len: 200,
            washout: 100,
            regularization: Regularization::default(),
        }
    }

    /// 6 x 5 grid, N = 100, two seeds.
    pub fn desk(family: Activation) -> Self {
        let (lo, hi) = sr_range(family);
        Self {
            sr_values: linspace(lo, hi, 6),
            scaling_values: linspace(SCALING_RANGE.0, SCALING_RANGE.1, 5),
            n_seeds: 2,
            n_neurons: 100,
            train_len: 500,
            test_len: 200,
            washout: 100,
            regularization: Regularization::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sr_values.is_empty() || self.scaling_values.is_empty() {
            return Err(EsnError::InvalidParameter("hyper-parameter grids must be non-empty".into()));
        }
        if self.n_seeds == 0 || self.train_len < 2 || self.test_len < 2 {
            return Err(EsnError::InvalidParameter("plan needs n_seeds >= 1 and train/test lengths >= 2".into()));
        }
        if self.sr_values.iter().any(|v| !(*v > 0.0)) || self.scaling_values.iter().any(|v| !(*v >= 0.0)) {
            return Err(EsnError::InvalidParameter("spectral radii must be positive and scalings non-negative".into()));
        }
        Ok(())
    }
}

/// Default task grids, `nu` up to 3 and `tau` up to 20.
pub fn default_task_grid(paper_scale: bool) -> (Vec<f64>, Vec<usize>) {
    if paper_scale {
        (linspace(0.25, 3.0, 12), (0..=20).step_by(2).collect())
    } else {
        (vec![0.5, 1.5, 2.5], vec![0, 5, 10, 20])
    }
}

/// Input and targets of the trade-off task for one seed.
///
/// The reservoir is fed the uniform draw normalized to unit variance; the target
/// `sin(nu * u_{k - tau})` uses the raw draw.
pub struct TaskData {
    pub raw: TimeSeries,
    pub input: TimeSeries,
}

impl TaskData {
    pub fn new(length: usize, seed: u64) -> Result<Self> {
        let raw = white_noise(length, seed)?;
        let input = normalize_unit_variance(&raw, false)?;
        Ok(Self { raw, input })
    }

    fn target(&self, first: usize, len: usize, nu: f64, tau: usize) -> DMatrix<f64> {
        let u = self.raw.as_slice();
        DMatrix::from_fn(len, 1, |i, _| (nu * u[first + i - tau]).sin())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub train_nrmse: f64,
    pub test_nrmse: f64,
}

/// Train/test NRMSE of every (nu, tau) cell for one reservoir, sharing one drive and one factorization.
pub fn score_reservoir(
    reservoir: &Reservoir,
    data: &TaskData,
    nu_grid: &[f64],
    tau_grid: &[usize],
    washout: usize,
    train_len: usize,
    test_len: usize,
    reg: Regularization,
) -> Result<Vec<CellScore>> {
    let tau_max = tau_grid.iter().copied().max().unwrap_or(0);
    let start = washout + tau_max;
    let total = start + train_len + test_len;
    if data.input.len() < total {
        return Err(EsnError::SeriesTooShort {
            needed: total,
            available: data.input.len(),
        });
    }
    let traj = reservoir.drive_series(&data.input.as_slice()[..total], &reservoir.default_initial_state(), 0)?;
    let xtr = traj.states.rows(start, train_len).into_owned();
    let xte = traj.states.rows(start + train_len, test_len).into_owned();

    let cells: Vec<(f64, usize)> = nu_grid.iter().flat_map(|&nu| tau_grid.iter().map(move |&tau| (nu, tau))).collect();
    let mut ytr = DMatrix::zeros(train_len, cells.len());
    for (c, &(nu, tau)) in cells.iter().enumerate() {
        ytr.set_column(c, &data.target(start, train_len, nu, tau).column(0));
    }
    let w = RidgeFactor::new(&xtr, reg)?.solve(&ytr)?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(nu, tau))| {
            let wc = w.w_out.row(c).transpose();
            let score = |x: &DMatrix<f64>, first: usize, len: usize| {
                nrmse(&column_prediction(x, &wc), &data.target(first, len, nu, tau)).unwrap_or(f64::NAN)
            };
            CellScore {
                train_nrmse: score(&xtr, start, train_len),
                test_nrmse: score(&xte, start + train_len, test_len),
            }
        })
        .collect())
}

/// One row of a grid search: a hyper-parameter pair and its training error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub sr: f64,
    pub scaling: f64,
    pub train_nrmse: f64,
}

/// Minimum training NRMSE; ties go to the smaller SR, then the smaller scaling.
/// NaN rows are ignored; a table with no finite row is an error.
pub fn select_best_hyperparams(rows: &[GridRow]) -> Result<(f64, f64)> {
    if rows.is_empty() {
        return Err(EsnError::Empty("grid table"));
    }
    rows.iter()
        .filter(|r| !r.train_nrmse.is_nan())
        .min_by(|a, b| {
            a.train_nrmse
                .total_cmp(&b.train_nrmse)
                .then(a.sr.total_cmp(&b.sr))
                .then(a.scaling.total_cmp(&b.scaling))
        })
        .map(|r| (r.sr, r.scaling))
        .ok_or_else(|| EsnError::InvalidParameter("every grid row is NaN".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffResult {
    pub family: Activation,
    pub nu_grid: Vec<f64>,
    pub tau_grid: Vec<usize>,
    /// Indexed `[nu][tau]`; NaN for flagged cells.
    pub test_nrmse: Vec<Vec<f64>>,
    pub best_sr: Vec<Vec<f64>>,
    pub best_scaling: Vec<Vec<f64>>,
    /// Cells where every configuration failed, as `(nu index, tau index)`.
    pub flagged: Vec<(usize, usize)>,
    /// Contractivity margin of the selected configuration (first seed).
    pub contractivity_margin: Vec<Vec<f64>>,
    pub plan: SweepPlan,
    pub master_seed: u64,
}

/// Grid search over (SR, scaling) for every (nu, tau) cell.
///
/// One reservoir draw per seed is rescaled for every grid point, driven once, and
/// scored on all cells at once. Errors are averaged over seeds before selection.
pub fn tradeoff_grid_experiment(
    family: Activation,
    nu_grid: &[f64],
    tau_grid: &[usize],
    plan: &SweepPlan,
    master_seed: u64,
    exec: Execution,
) -> Result<TradeoffResult> {
    plan.validate()?;
    if nu_grid.is_empty() || tau_grid.is_empty() {
        return Err(EsnError::InvalidParameter("nu and tau grids must be non-empty".into()));
    }
    let tau_max = *tau_grid.iter().max().unwrap();
    let total = plan.washout + tau_max + plan.train_len + plan.test_len;

    let seeds: Vec<u64> = (0..plan.n_seeds as u64).map(|s| child_seed(master_seed, s)).collect();
    let draws = exec
        .map(&seeds, |&seed| ReservoirDraw::new(plan.n_neurons, 1, 1.0, seed))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let data = exec
        .map(&seeds, |&seed| TaskData::new(total, child_seed(master_seed, SIGNAL_STREAM + seed % SIGNAL_STREAM)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for (i, &sr) in plan.sr_values.iter().enumerate() {
        for (j, &sc) in plan.scaling_values.iter().enumerate() {
            for s in 0..plan.n_seeds {
                jobs.push((i, j, s, sr, sc));
            }
        }
    }
    let n_cells = nu_grid.len() * tau_grid.len();
    let scores = exec.map(&jobs, |&(_, _, s, sr, sc)| -> Vec<CellScore> {
        let failed = vec![CellScore { train_nrmse: f64::NAN, test_nrmse: f64::NAN }; n_cells];
        let Ok(res) = draws[s].instantiate(family, sr, sc, 1.0) else {
            return failed;
        };
        score_reservoir(&res, &data[s], nu_grid, tau_grid, plan.washout, plan.train_len, plan.test_len, plan.regularization)
            .unwrap_or(failed)
    });

    let n_sr = plan.sr_values.len();
    let n_sc = plan.scaling_values.len();
    // seed-averaged (train, test) per grid point and cell
    let mut avg = vec![vec![(f64::NAN, f64::NAN); n_cells]; n_sr * n_sc];
    for g in 0..n_sr * n_sc {
        for c in 0..n_cells {
            let per_seed = &scores[g * plan.n_seeds..(g + 1) * plan.n_seeds];
            let (tr, _) = mean_std(&per_seed.iter().map(|v| v[c].train_nrmse).collect::<Vec<_>>());
            let (te, _) = mean_std(&per_seed.iter().map(|v| v[c].test_nrmse).collect::<Vec<_>>());
            avg[g][c] = (tr, te);
        }
    }

    let mut test_nrmse = vec![vec![f64::NAN; tau_grid.len()]; nu_grid.len()];
    let mut best_sr = test_nrmse.clone();
    let mut best_scaling = test_nrmse.clone();
    let mut flagged = Vec::new();
    for a in 0..nu_grid.len() {
        for b in 0..tau_grid.len() {
            let c = a * tau_grid.len() + b;
            let rows: Vec<GridRow> = (0..n_sr * n_sc)
                .map(|g| GridRow {
                    sr: plan.sr_values[g / n_sc],
                    scaling: plan.scaling_values[g % n_sc],
                    train_nrmse: avg[g][c].0,
                })
                .collect();
            match select_best_hyperparams(&rows) {
                Ok((sr, sc)) => {
                    let g = rows.iter().position(|r| r.sr == sr && r.scaling == sc).unwrap();
                    test_nrmse[a][b] = avg[g][c].1;
                    best_sr[a][b] = sr;
                    best_scaling[a][b] = sc;
                }
                Err(_) => flagged.push((a, b)),
            }
        }
    }

    let max_input = data[0].input.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut margins: Vec<((f64, f64), f64)> = Vec::new();
    let mut contractivity_margin = vec![vec![f64::NAN; tau_grid.len()]; nu_grid.len()];
    for a in 0..nu_grid.len() {
        for b in 0..tau_grid.len() {
            let key = (best_sr[a][b], best_scaling[a][b]);
            if key.0.is_nan() {
                continue;
            }
            let m = match margins.iter().find(|(k, _)| *k == key) {
                Some((_, m)) => *m,
                None => {
                    let m = draws[0].instantiate(family, key.0, key.1, 1.0)?.contractivity_margin(max_input)?;
                    margins.push((key, m));
                    m
                }
            };
            contractivity_margin[a][b] = m;
        }
    }

    Ok(TradeoffResult {
        family,
        nu_grid: nu_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        test_nrmse,
        best_sr,
        best_scaling,
        flagged,
        contractivity_margin,
        plan: plan.clone(),
        master_seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub family: Activation,
    pub nu: f64,
    pub tau: usize,
    pub sr: f64,
    pub scaling: f64,
    pub test_gamma_mean: f64,
    pub test_gamma_std: f64,
    pub n_runs: usize,
}

/// Test accuracy on a single (nu, tau) task with fixed hyper-parameters,
/// by default those of the delay-memory experiments.
pub fn tradeoff_spot_check(
    family: Activation,
    nu: f64,
    tau: usize,
    hyper: Option<(f64, f64)>,
    plan: &SweepPlan,
    master_seed: u64,
    exec: Execution,
) -> Result<SpotCheck> {
    plan.validate()?;
    let (sr, scaling) = hyper.unwrap_or_else(|| paper_hyperparams(family));
    let total = plan.washout + tau + plan.train_len + plan.test_len;
    let seeds: Vec<u64> = (0..plan.n_seeds as u64).map(|s| child_seed(master_seed, s)).collect();
    let gammas = exec
        .map(&seeds, |&seed| -> Result<f64> {
            let res = ReservoirDraw::new(plan.n_neurons, 1, 1.0, seed)?.instantiate(family, sr, scaling, 1.0)?;
            let data = TaskData::new(total, child_seed(master_seed, SIGNAL_STREAM + seed % SIGNAL_STREAM))?;
            let s = score_reservoir(&res, &data, &[nu], &[tau], plan.washout, plan.train_len, plan.test_len, plan.regularization)?;
            Ok(accuracy_gamma(s[0].test_nrmse))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (m, s) = mean_std(&gammas);
    Ok(SpotCheck {
        family,
        nu,
        tau,
        sr,
        scaling,
        test_gamma_mean: m,
        test_gamma_std: s,
        n_runs: gammas.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.2, 3.0, 20);
        assert_eq!(v.len(), 20);
        assert_eq!(v[0], 0.2);
        assert!((v[19] - 3.0).abs() < 1e-15);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn selection_examples() {
        let one = [GridRow { sr: 0.7, scaling: 0.1, train_nrmse: 0.3 }];
        assert_eq!(select_best_hyperparams(&one).unwrap(), (0.7, 0.1));
        let tie = [
            GridRow { sr: 1.0, scaling: 0.1, train_nrmse: 0.3 },
            GridRow { sr: 0.5, scaling: 0.2, train_nrmse: 0.3 },
        ];
        assert_eq!(select_best_hyperparams(&tie).unwrap(), (0.5, 0.2));
        let tie_sr = [
            GridRow { sr: 0.5, scaling: 0.4, train_nrmse: 0.3 },
            GridRow { sr: 0.5, scaling: 0.2, train_nrmse: 0.3 },
        ];
        assert_eq!(select_best_hyperparams(&tie_sr).unwrap(), (0.5, 0.2));
        assert!(select_best_hyperparams(&[]).is_err());
        let nan = [GridRow { sr: 1.0, scaling: 1.0, train_nrmse: f64::NAN }];
        assert!(select_best_hyperparams(&nan).is_err());
        let mixed = [nan[0], one[0]];
        assert_eq!(select_best_hyperparams(&mixed).unwrap(), (0.7, 0.1));
    }

    proptest! {
        #[test]
        fn selection_matches_exhaustive_scan(rows in prop::collection::vec((0usize..5, 0usize..5, 0u8..6), 1..40)) {
            let table: Vec<GridRow> = rows
                .iter()
                .map(|&(i, j, e)| GridRow { sr: 0.2 + i as f64, scaling: 0.01 + j as f64, train_nrmse: e as f64 / 4.0 })
                .collect();
            let mut best = table[0];
            for r in &table[1..] {
                let better = r.train_nrmse < best.train_nrmse
                    || (r.train_nrmse == best.train_nrmse && (r.sr < best.sr || (r.sr == best.sr && r.scaling < best.scaling)));
                if better {
                    best = *r;
                }
            }
            prop_assert_eq!(select_best_hyperparams(&table).unwrap(), (best.sr, best.scaling));
        }
    }

    fn micro_plan(family: Activation) -> SweepPlan {
        SweepPlan {
            sr_values: linspace(sr_range(family).0, sr_range(family).1, 3),
            scaling_values: vec![0.1, 1.0],
            n_seeds: 2,
            n_neurons: 20,
            train_len: 200,
            test_len: 80,
            washout: 20,
            regularization: Regularization::default(),
        }
    }

    #[test]
    fn grid_shapes_and_ranges() {
        let plan = micro_plan(Activation::Tanh);
        let r = tradeoff_grid_experiment(Activation::Tanh, &[0.5, 2.0], &[0, 3, 6], &plan, 1, Execution::Parallel).unwrap();
        assert_eq!(r.test_nrmse.len(), 2);
        assert!(r.test_nrmse.iter().all(|row| row.len() == 3));
        assert!(r.flagged.is_empty());
        for row in &r.best_sr {
            for sr in row {
                assert!(plan.sr_values.contains(sr));
            }
        }
        let s = tradeoff_grid_experiment(Activation::Tanh, &[0.5, 2.0], &[0, 3, 6], &plan, 1, Execution::Sequential).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn degenerate_reservoirs_are_flagged() {
        // zero input scaling keeps linear states at the origin, so every readout is singular
        let mut plan = micro_plan(Activation::Linear);
        plan.scaling_values = vec![0.0];
        plan.regularization = Regularization::Absolute(0.0);
        let r = tradeoff_grid_experiment(Activation::Linear, &[1.0], &[0], &plan, 1, Execution::Sequential).unwrap();
        assert_eq!(r.flagged, vec![(0, 0)]);
        assert!(r.test_nrmse[0][0].is_nan());
    }

    #[test]
    fn plan_validation() {
        let mut p = micro_plan(Activation::Linear);
        p.sr_values.clear();
        assert!(p.validate().is_err());
        let mut p = micro_plan(Activation::Linear);
        p.n_seeds = 0;
        assert!(p.validate().is_err());
    }
}
