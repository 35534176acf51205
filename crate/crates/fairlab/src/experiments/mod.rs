//! Orchestration of the lab's experiments: decoupling sweeps, prediction
//! change tracking, uncertainty profiling, suffix fine-tuning, ratio
//! manipulation, the single-run proxy, black-swan surfaces, and the
//! mitigation comparison.

mod blackswan;
mod changes;
mod decouple;
mod manipulate;
mod mitigate;
mod proxy;
mod report;
mod runner;
mod suffix;
mod uncertainty;

pub use blackswan::{black_swan_surface, BlackSwanSurface};
pub use changes::{prediction_change_tracking, ChangeTracking};
pub use decouple::{
    decouple_experiment, DecoupleMode, DecoupleResult, EpochBand, MetricSummary, ALL_METRICS,
};
pub use manipulate::{manipulate_sweep, ManipulateRow, ManipulateSweep};
pub use mitigate::{mitigation_compare, MitigationCell, MitigationResult, PostOrder, Setup};
pub use proxy::{single_run_proxy, ProxyResult};
pub use report::{ExperimentReport, NamedTable, RunSeeds};
pub use runner::{
    checkpoint_pool, finetune_on_batches, finetune_on_order, run_parallel, seeds_for,
};
pub use suffix::{donor_orders, suffix_finetune, SuffixRow, SuffixSweep, SuffixVariant};
pub use uncertainty::{uncertainty_profile, UncertaintyProfile};

use thiserror::Error;

use crate::data::DataError;
use crate::nn::NnError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid experiment parameters: {0}")]
    BadParams(String),
}
