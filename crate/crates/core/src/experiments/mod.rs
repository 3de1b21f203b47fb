//! Experiment drivers, seeding, scheduling and output files.

pub mod delay_memory;
pub mod lle_sweep;
pub mod output;
pub mod par;
pub mod seeds;
pub mod stats;
pub mod tradeoff;

pub use delay_memory::{benchmark_series, series_seed, delay_memory_experiment, delay_memory_run, paper_hyperparams, DelayMemoryResult, Protocol, RunAccuracy};
pub use lle_sweep::{lle_sweep_experiment, summarize_lle, LleSummary};
pub use output::{CurveContext, DatasetRecord, RunManifest};
pub use par::{with_threads, Execution};
pub use seeds::child_seed;
pub use stats::mean_std;
pub use tradeoff::{
    default_task_grid, linspace, score_reservoir, select_best_hyperparams, sr_range, tradeoff_grid_experiment,
    tradeoff_spot_check, CellScore, GridRow, SpotCheck, SweepPlan, TaskData, TradeoffResult, SCALING_RANGE,
};
