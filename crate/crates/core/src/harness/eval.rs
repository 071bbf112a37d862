use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, HarnessError};
use crate::baselines::{
    balanced_sample, build_svm_features, grid_search, idm_baseline_label, svm_predict, GridSearchResult, SvmGrid,
    SvmModel,
};
use crate::idm::{IdmConfig, Predictor};
use crate::labeling::{GapSequence, LabelConfig};
use crate::metrics::Confusion;
use crate::neural::{predict_online, ModelWeights, TrainConfig};
use crate::ngsim::{seconds_to_frames, Gaps};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Training frames kept per class after subsampling.
    pub per_class: usize,
    /// Frame stride applied to automatically labeled training data.
    pub frame_stride: usize,
    /// Future offsets of the future-aware variant (s).
    pub future: Vec<f64>,
    pub grid: SvmGrid,
    pub tolerance: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            per_class: 1000,
            frame_stride: 5,
            future: vec![5.0, 10.0],
            grid: SvmGrid::default(),
            tolerance: 1e-3,
        }
    }
}

impl SvmConfig {
    pub fn future_offsets(&self) -> Vec<usize> {
        self.future.iter().map(|&s| seconds_to_frames(s)).collect()
    }
}

/// Feature row of frame `i`; future offsets are clamped to the last frame of
/// the sequence.
pub fn svm_row(seq: &GapSequence, i: usize, offsets: &[usize]) -> Vec<f64> {
    let last = seq.len() - 1;
    let future: Vec<Gaps> = offsets.iter().map(|&o| seq.frames[(i + o).min(last)].gaps).collect();
    build_svm_features(&seq.frames[i].gaps, &future)
}

/// Rows and ±1 labels of every `stride`-th labeled frame.
pub fn svm_rows<'a>(
    data: impl IntoIterator<Item = &'a GapSequence>,
    offsets: &[usize],
    stride: usize,
) -> (Vec<Vec<f64>>, Vec<i8>) {
    let stride = stride.max(1);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for seq in data {
        for (i, f) in seq.frames.iter().enumerate() {
            if i % stride != 0 {
                continue;
            }
            if let Some(c) = f.label.class() {
                x.push(svm_row(seq, i, offsets));
                y.push(if c == 1 { 1 } else { -1 });
            }
        }
    }
    (x, y)
}

fn take(x: &[Vec<f64>], y: &[i8], idx: &[usize]) -> (Vec<Vec<f64>>, Vec<i8>) {
    (
        idx.iter().map(|&i| x[i].clone()).collect(),
        idx.iter().map(|&i| y[i]).collect(),
    )
}

/// Class-balanced subsample of the training and validation frames, then a
/// grid search over `(C, gamma)`.
pub fn fit_svm<R: Rng>(
    train: &[&GapSequence],
    validation: &[&GapSequence],
    offsets: &[usize],
    stride: usize,
    cfg: &SvmConfig,
    rng: &mut R,
) -> Result<GridSearchResult, HarnessError> {
    let (x, y) = svm_rows(train.iter().copied(), offsets, stride);
    let (x, y) = take(&x, &y, &balanced_sample(&y, cfg.per_class, rng));
    let (vx, vy) = svm_rows(validation.iter().copied(), offsets, stride);
    let (vx, vy) = take(&vx, &vy, &balanced_sample(&vy, cfg.per_class, rng));
    log::debug!("svm: {} training rows, {} validation rows", x.len(), vx.len());
    Ok(grid_search(&x, &y, &vx, &vy, &cfg.grid, cfg.tolerance)?)
}

pub fn eval_svm(model: &SvmModel, offsets: &[usize], test: &[&GapSequence]) -> Confusion {
    let parts: Vec<Confusion> = test
        .par_iter()
        .map(|seq| {
            let mut c = Confusion::default();
            for (i, f) in seq.frames.iter().enumerate() {
                if let Some(y) = f.label.class() {
                    c.add(svm_predict(model, &svm_row(seq, i, offsets)), y as u8);
                }
            }
            c
        })
        .collect();
    sum(&parts)
}

fn sum(parts: &[Confusion]) -> Confusion {
    let mut total = Confusion::default();
    for p in parts {
        total.merge(p);
    }
    total
}

/// Bidirectional model with predicted futures, on the same `T_F` windows the
/// real-future evaluation uses.
pub fn eval_predicted<P: Predictor + Sync + ?Sized>(
    w: &ModelWeights,
    dataset: &Dataset,
    test: &[&GapSequence],
    cfg: &TrainConfig,
    predictor: &P,
) -> Result<Confusion, HarnessError> {
    let parts: Result<Vec<Confusion>, HarnessError> = test
        .par_iter()
        .map(|seq| {
            let mut c = Confusion::default();
            for win in seq.windows(cfg.window_frames()) {
                if win.frames.iter().all(|f| f.label.class().is_none()) {
                    continue;
                }
                let obs = dataset.observations(&win)?;
                let out = predict_online(w, &obs, predictor, cfg.block_frames());
                for (o, f) in out.iter().zip(&win.frames) {
                    if let Some(y) = f.label.class() {
                        c.add(o.class(), y as u8);
                    }
                }
            }
            Ok(c)
        })
        .collect();
    Ok(sum(&parts?))
}

pub fn eval_idm(
    dataset: &Dataset,
    test: &[&GapSequence],
    idm: &IdmConfig,
    labels: &LabelConfig,
) -> Result<Confusion, HarnessError> {
    let parts: Result<Vec<Confusion>, HarnessError> = test
        .par_iter()
        .map(|seq| {
            let mut c = Confusion::default();
            let obs = dataset.observations(seq)?;
            for (o, f) in obs.iter().zip(&seq.frames) {
                if let Some(y) = f.label.class() {
                    c.add(idm_baseline_label(o, idm, labels), y as u8);
                }
            }
            Ok(c)
        })
        .collect();
    Ok(sum(&parts?))
}
