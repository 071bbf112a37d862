use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::model::{ModelKind, ModelWeights};
use super::train::TrainConfig;
use super::CheckpointError;

pub const CHECKPOINT_FORMAT: &str = "lanegap-recurrent";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON container for a trained recurrent model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub train_config: TrainConfig,
    pub weights: ModelWeights,
}

impl Checkpoint {
    pub fn new(weights: ModelWeights, train_config: TrainConfig) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            kind: weights.kind(),
            train_config,
            weights,
        }
    }

    pub fn validate(&self) -> Result<(), CheckpointError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(CheckpointError::Format(self.format.clone()));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                found: self.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        if self.kind != self.weights.kind() {
            return Err(CheckpointError::KindMismatch {
                declared: self.kind,
                found: self.weights.kind(),
            });
        }
        for t in self.weights.tensors() {
            if t.data.len() != t.shape.0 * t.shape.1 {
                return Err(CheckpointError::Shape(format!(
                    "{} holds {} values for shape {:?}",
                    t.name,
                    t.data.len(),
                    t.shape
                )));
            }
        }
        self.weights.validate().map_err(CheckpointError::Shape)?;
        if !self.weights.is_finite() {
            return Err(CheckpointError::Shape("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<(), CheckpointError> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, CheckpointError> {
        let ck: Checkpoint = serde_json::from_reader(reader)?;
        ck.validate()?;
        Ok(ck)
    }
}
