use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::SvmConfig;
use super::synthetic::SyntheticConfig;
use super::{HarnessError, ModelName, Scheme};
use crate::idm::IdmConfig;
use crate::labeling::{AugmentConfig, LabelConfig};
use crate::neural::TrainConfig;
use crate::ngsim::{LaneId, LaneLayout, Units};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    /// Raw trajectory files, merged into one pool.
    Ngsim {
        files: Vec<PathBuf>,
        units: Units,
    },
    /// A cache written by `ingest`.
    Store {
        path: PathBuf,
    },
    Synthetic(SyntheticConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub mainline: LaneId,
    pub ramps: Vec<LaneId>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            mainline: 6,
            ramps: vec![7, 8],
        }
    }
}

impl LayoutConfig {
    pub fn layout(&self) -> LaneLayout {
        LaneLayout::highway(self.mainline, &self.ramps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Folds of the recurrent models and the IDM baseline.
    pub folds: usize,
    /// Independent 80:20 runs of the SVMs.
    pub holdout_runs: usize,
    pub train_fraction: f64,
    /// Share of training tracks held out for model selection.
    pub validation_fraction: f64,
    /// Evaluate only the first this many folds or runs; 0 runs all.
    pub max_folds: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            holdout_runs: 5,
            train_fraction: 0.8,
            validation_fraction: 0.1,
            max_folds: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Master seed; every random choice derives from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub schemes: Vec<Scheme>,
    pub models: Vec<ModelName>,
    pub data: DataSource,
    pub layout: LayoutConfig,
    pub labels: LabelConfig,
    /// Augment action-based sequences.
    pub augment_action: bool,
    pub augment: AugmentConfig,
    /// Inverse-frequency class weights for the automatic dataset, on top of
    /// `train.class_weights`.
    pub automatic_class_weights: bool,
    pub train: TrainConfig,
    pub svm: SvmConfig,
    pub idm: IdmConfig,
    pub split: SplitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("results"),
            schemes: vec![Scheme::Action, Scheme::Automatic],
            models: ModelName::ALL.to_vec(),
            data: DataSource::default(),
            layout: LayoutConfig::default(),
            labels: LabelConfig::default(),
            augment_action: true,
            augment: AugmentConfig::default(),
            automatic_class_weights: true,
            train: TrainConfig::default(),
            svm: SvmConfig::default(),
            idm: IdmConfig::default(),
            split: SplitConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is representable in TOML")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        self.train.validate()?;
        self.labels
            .filter
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.idm.base.validate().is_err() {
            return bad("invalid IDM parameters");
        }
        if self.split.folds == 0 || self.split.holdout_runs == 0 {
            return bad("folds and holdout_runs must be positive");
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.split.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if self.svm.future.len() != 2 {
            return bad("the future-aware SVM takes exactly two offsets");
        }
        if self.models.is_empty() {
            return bad("no models selected");
        }
        if self.schemes.is_empty() && !matches!(self.data, DataSource::Synthetic(_)) {
            return bad("no labeling scheme selected");
        }
        Ok(())
    }
}
