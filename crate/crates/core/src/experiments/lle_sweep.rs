use serde::{Deserialize, Serialize};

use super::par::Execution;
use super::seeds::child_seed;
use super::stats::mean_std;
use crate::analysis::{lyapunov_report, LleOptions, LyapunovReport};
use crate::error::{EsnError, Result};
use crate::reservoir::{Activation, ReservoirDraw};

/// Lyapunov analysis for every (SR, seed) pair.
///
/// Seed index `s` uses the reservoir drawn from `child_seed(master_seed, s)` for all
/// spectral radii, so each SR sees the same matrices up to scale. Reports are
/// ordered by SR, then seed.
pub fn lle_sweep_experiment(
    family: Activation,
    sr_values: &[f64],
    n_neurons: usize,
    n_seeds: usize,
    opts: &LleOptions,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<LyapunovReport>> {
    if n_seeds == 0 || sr_values.is_empty() {
        return Err(EsnError::InvalidParameter("need at least one SR and one seed".into()));
    }
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|s| child_seed(master_seed, s)).collect();
    let draws = exec
        .map(&seeds, |&seed| ReservoirDraw::new(n_neurons, 1, 1.0, seed))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(f64, usize)> = sr_values.iter().flat_map(|&sr| (0..n_seeds).map(move |s| (sr, s))).collect();
    exec.map(&cells, |&(sr, s)| {
        let tag = |e: EsnError| EsnError::Cell {
            sr,
            seed: seeds[s],
            source: Box::new(e),
        };
        let res = draws[s].instantiate(family, sr, 0.0, 1.0).map_err(tag)?;
        lyapunov_report(&res, opts, None).map_err(tag)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LleSummary {
    pub sr: f64,
    pub mean_paper: f64,
    pub std_paper: f64,
    pub mean_qr: f64,
    pub std_qr: f64,
    pub n: usize,
}

/// Mean and sample std of both estimators per SR, in order of first appearance.
pub fn summarize_lle(reports: &[LyapunovReport]) -> Vec<LleSummary> {
    let mut srs: Vec<f64> = Vec::new();
    for r in reports {
        if !srs.contains(&r.spectral_radius) {
            srs.push(r.spectral_radius);
        }
    }
    srs.into_iter()
        .map(|sr| {
            let group: Vec<&LyapunovReport> = reports.iter().filter(|r| r.spectral_radius == sr).collect();
            let (mean_paper, std_paper) = mean_std(&group.iter().map(|r| r.max_lle_paper).collect::<Vec<_>>());
            let (mean_qr, std_qr) = mean_std(&group.iter().map(|r| r.max_lle).collect::<Vec<_>>());
            LleSummary {
                sr,
                mean_paper,
                std_paper,
                mean_qr,
                std_qr,
                n: group.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::max_lle_paper;

    fn quick() -> LleOptions {
        LleOptions {
            n_steps: 1100,
            transient: 100,
            eig_stride: 5,
            n_exponents: Some(2),
            ..LleOptions::default()
        }
    }

    #[test]
    fn single_cell_reduces_to_one_call() {
        let reps = lle_sweep_experiment(Activation::Spherical, &[5.0], 12, 1, &quick(), 3, Execution::Sequential).unwrap();
        assert_eq!(reps.len(), 1);
        let res = ReservoirDraw::new(12, 1, 1.0, child_seed(3, 0)).unwrap().instantiate(Activation::Spherical, 5.0, 0.0, 1.0).unwrap();
        assert_eq!(reps[0].max_lle_paper, max_lle_paper(&res, &quick(), None).unwrap());
        assert_eq!(reps[0].seed, child_seed(3, 0));
    }

    #[test]
    fn linear_control_and_ordering() {
        let reps = lle_sweep_experiment(Activation::Linear, &[2.0, 0.5], 10, 3, &quick(), 1, Execution::Parallel).unwrap();
        assert_eq!(reps.len(), 6);
        assert!(reps[..3].iter().all(|r| (r.max_lle_paper - 2f64.ln()).abs() < 1e-6));
        assert!(reps[3..].iter().all(|r| (r.max_lle_paper - 0.5f64.ln()).abs() < 1e-6));
        let summary = summarize_lle(&reps);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].sr, 2.0);
        assert_eq!(summary[0].n, 3);
    }

    #[test]
    fn errors_carry_the_cell() {
        let bad = LleOptions { n_exponents: Some(50), ..quick() };
        match lle_sweep_experiment(Activation::Spherical, &[1.0], 10, 1, &bad, 0, Execution::Sequential) {
            Err(EsnError::Cell { sr, .. }) => assert_eq!(sr, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
