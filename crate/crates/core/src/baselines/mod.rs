//! Comparison models: an RBF support vector machine on distances and
//! relative speeds, and the IDM-only labeler.

mod idm_baseline;
mod svm;

use thiserror::Error;

pub use idm_baseline::idm_baseline_label;
pub use svm::{
    balanced_sample, build_svm_features, frame_features, grid_search, kernel_matrix, kkt_gap, rbf, svm_fit,
    svm_predict, svm_train, GridSearchResult, Standardizer, SvmCheckpoint, SvmFit, SvmGrid, SvmModel, SvmParams,
    DISTANCE_CAP, FEATURES_PER_FRAME, SVM_FORMAT, SVM_VERSION,
};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("labels must be +1 or -1, found {0}")]
    BadLabel(i8),
    #[error("malformed SVM model: {0}")]
    Malformed(String),
    #[error("malformed SVM checkpoint: {0}")]
    Json(#[from] serde_json::Error),
}

impl PartialEq for SvmError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SvmError::SingleClass, SvmError::SingleClass) => true,
            (SvmError::BadLabel(a), SvmError::BadLabel(b)) => a == b,
            (SvmError::Malformed(a), SvmError::Malformed(b)) => a == b,
            _ => false,
        }
    }
}
