//! CSV and manifest writers. Floats use Rust's shortest round-trip formatting,
//! '.' as decimal separator and LF line endings.

use std::fs::{self, File};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::delay_memory::DelayMemoryResult;
use super::tradeoff::TradeoffResult;
use crate::analysis::{LyapunovReport, MemoryCurve};
use crate::error::{EsnError, Result};
use crate::signals::{csv_error, TimeSeries};

pub const DELAY_MEMORY_HEADER: [&str; 7] = ["benchmark", "family", "tau", "split", "acc_mean", "acc_std", "n_runs"];
pub const TRADEOFF_HEADER: [&str; 7] = ["family", "nu", "tau", "test_nrmse", "best_sr", "best_scaling", "contractivity_margin"];
pub const LLE_HEADER: [&str; 5] = ["family", "sr", "seed", "max_lle", "method"];
pub const CURVE_HEADER: [&str; 7] = ["family", "sr", "seed", "n", "steps", "lag_or_rank", "value"];

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| EsnError::io(path, e))
}

pub fn write_delay_memory_csv(path: &Path, results: &[DelayMemoryResult]) -> Result<()> {
    let mut rows = Vec::new();
    for r in results {
        for (i, tau) in r.taus.iter().enumerate() {
            for (split, mean, std) in [
                ("train", r.train_acc_mean[i], r.train_acc_std[i]),
                ("test", r.test_acc_mean[i], r.test_acc_std[i]),
            ] {
                rows.push(vec![
                    r.benchmark.to_string(),
                    r.family.to_string(),
                    tau.to_string(),
                    split.to_string(),
                    mean.to_string(),
                    std.to_string(),
                    r.n_runs.to_string(),
                ]);
            }
        }
    }
    write_rows(path, &DELAY_MEMORY_HEADER, rows)
}

pub fn write_tradeoff_csv(path: &Path, results: &[TradeoffResult]) -> Result<()> {
    let mut rows = Vec::new();
    for r in results {
        for (a, nu) in r.nu_grid.iter().enumerate() {
            for (b, tau) in r.tau_grid.iter().enumerate() {
                rows.push(vec![
                    r.family.to_string(),
                    nu.to_string(),
                    tau.to_string(),
                    r.test_nrmse[a][b].to_string(),
                    r.best_sr[a][b].to_string(),
                    r.best_scaling[a][b].to_string(),
                    r.contractivity_margin[a][b].to_string(),
                ]);
            }
        }
    }
    write_rows(path, &TRADEOFF_HEADER, rows)
}

/// Two rows per report: `local_radius` (mean log spectral radius of the Jacobians) and `qr`.
pub fn write_lle_csv(path: &Path, reports: &[LyapunovReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|r| {
        [("local_radius", r.max_lle_paper), ("qr", r.max_lle)].map(|(method, v)| {
            vec![
                r.family.to_string(),
                r.spectral_radius.to_string(),
                r.seed.to_string(),
                v.to_string(),
                method.to_string(),
            ]
        })
    });
    write_rows(path, &LLE_HEADER, rows)
}

/// QR spectra, one row per exponent with its rank.
pub fn write_spectrum_csv(path: &Path, reports: &[LyapunovReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|r| {
        r.spectrum.iter().enumerate().map(move |(rank, v)| {
            vec![
                r.family.to_string(),
                r.spectral_radius.to_string(),
                r.seed.to_string(),
                r.n_neurons.to_string(),
                r.n_steps.to_string(),
                rank.to_string(),
                v.to_string(),
            ]
        })
    });
    write_rows(path, &CURVE_HEADER, rows)
}

/// Where a memory curve came from, for the shared curve schema.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveContext {
    pub sr: f64,
    pub seed: u64,
    pub n: usize,
    pub steps: usize,
}

pub fn write_memory_curve_csv(path: &Path, curves: &[(MemoryCurve, CurveContext)]) -> Result<()> {
    let rows = curves.iter().flat_map(|(c, ctx)| {
        c.lags.iter().zip(&c.values).map(move |(lag, v)| {
            vec![
                c.family.to_string(),
                ctx.sr.to_string(),
                ctx.seed.to_string(),
                ctx.n.to_string(),
                ctx.steps.to_string(),
                lag.to_string(),
                v.to_string(),
            ]
        })
    });
    write_rows(path, &CURVE_HEADER, rows)
}

/// Reservoir states, one row per step, plus the norm factor.
pub fn write_trajectory_csv(path: &Path, traj: &crate::reservoir::Trajectory) -> Result<()> {
    let n = traj.states.ncols();
    let mut header: Vec<String> = vec!["step".into(), "norm_factor".into()];
    header.extend((0..n).map(|i| format!("x{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..traj.len()).map(|k| {
        let mut row = vec![(k + 1).to_string(), traj.norm_factors[k].to_string()];
        row.extend(traj.states.row(k).iter().map(|v| v.to_string()));
        row
    });
    write_rows(path, &header_refs, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub name: String,
    pub source: String,
    pub length: usize,
    pub sha256: String,
}

impl DatasetRecord {
    pub fn of(name: impl Into<String>, series: &TimeSeries) -> Self {
        Self {
            name: name.into(),
            source: series.source.clone(),
            length: series.len(),
            sha256: series.sha256(),
        }
    }
}

/// Everything needed to reproduce a CLI invocation. Contains no timestamps so
/// repeated runs produce identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub argv: Vec<String>,
    pub subcommand: String,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub datasets: Vec<DatasetRecord>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| EsnError::Serialization(e.to_string()))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| EsnError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| EsnError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| EsnError::Serialization(format!("{}: {e}", path.display())))
    }
}
