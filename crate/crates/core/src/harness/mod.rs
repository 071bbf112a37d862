//! Dataset preparation, splits, training and evaluation of every model,
//! reports and timeline exports.

mod config;
mod dataset;
mod eval;
mod report;
mod run;
mod split;
pub mod synthetic;
mod timeline;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{DataSource, ExperimentConfig, LayoutConfig, SplitConfig};
pub use dataset::{check_files, label_recordings, load_ngsim, load_store, Dataset, Scheme};
pub use eval::{eval_idm, eval_predicted, eval_svm, fit_svm, svm_row, svm_rows, SvmConfig};
pub use report::{EvalReport, ExperimentReport, FoldResult, ModelName};
pub use run::{derive_seed, prepare_datasets, run_dataset, run_experiment, write_outputs, SeedTag};
pub use split::{groups_of, make_split, validation_split, Fold, GroupKey, SplitKind, SplitPlan};
pub use timeline::{export_timeline, write_timeline, TimelineModels, TimelineRow};

pub use crate::metrics::{average_accuracy, Accuracy, Confusion, MetricError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Data(#[from] crate::ngsim::DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad configuration file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Train(#[from] crate::neural::TrainError),
    #[error(transparent)]
    Svm(#[from] crate::baselines::SvmError),
    #[error(transparent)]
    Checkpoint(#[from] crate::neural::CheckpointError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("missing data: {0}")]
    Missing(String),
}
