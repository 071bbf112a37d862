use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grad::{accumulate, finish, LossConfig, TrainSample};
use super::model::{forward, ModelKind, ModelWeights};
use super::TrainError;
use crate::grid::encode_gaps;
use crate::labeling::GapSequence;
use crate::metrics::Confusion;
use crate::ngsim::seconds_to_frames;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Training window length (s).
    pub t_f: f64,
    /// Backward-state reset interval (s).
    pub t_b: f64,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: usize,
    pub embed_dim: usize,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Inverse-frequency class weights in the loss.
    pub class_weights: bool,
    pub init_scale: f64,
    pub embed_init_scale: f64,
    /// Stop after this many epochs without validation improvement; 0 disables.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            t_f: 10.0,
            t_b: 10.0,
            learning_rate: 1e-3,
            l2: 1e-3,
            epochs: 30,
            batch_size: 16,
            seed: 0,
            hidden: 128,
            embed_dim: 16,
            clip_norm: 5.0,
            class_weights: false,
            init_scale: 0.08,
            embed_init_scale: 0.3,
            patience: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::InvalidConfig(what.to_string()));
        if !(self.t_f > 0.0 && self.t_b > 0.0) {
            return bad("t_f and t_b must be positive");
        }
        if self.t_b > self.t_f {
            return bad("t_b must not exceed t_f");
        }
        if !(self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        if !(self.learning_rate > 0.0 && self.clip_norm > 0.0) {
            return bad("learning_rate and clip_norm must be positive");
        }
        if self.batch_size == 0 || self.hidden == 0 || self.embed_dim == 0 {
            return bad("batch_size, hidden and embed_dim must be positive");
        }
        Ok(())
    }

    pub fn window_frames(&self) -> usize {
        seconds_to_frames(self.t_f).max(1)
    }

    pub fn block_frames(&self) -> usize {
        seconds_to_frames(self.t_b).max(1)
    }
}

/// Cuts sequences into windows of at most `window` frames and drops
/// windows without a labeled frame.
pub fn make_samples(data: &[GapSequence], window: usize) -> Vec<TrainSample> {
    data.iter()
        .flat_map(|s| s.windows(window))
        .map(|w| TrainSample {
            grids: w.frames.iter().map(|f| encode_gaps(&f.gaps)).collect(),
            labels: w.frames.iter().map(|f| f.label).collect(),
        })
        .filter(|s| s.labeled_frames() > 0)
        .collect()
}

/// `N / (2·N_c)` per class.
pub fn inverse_frequency_weights(samples: &[TrainSample]) -> [f64; 2] {
    let mut counts = [0usize; 2];
    for s in samples {
        for l in &s.labels {
            if let Some(c) = l.class() {
                counts[c] += 1;
            }
        }
    }
    let total = (counts[0] + counts[1]) as f64;
    counts.map(|c| if c == 0 { 1.0 } else { total / (2.0 * c as f64) })
}

/// Frame-level confusion with real futures in the backward layer.
pub fn evaluate_samples(w: &ModelWeights, samples: &[TrainSample], block_frames: usize) -> Confusion {
    let parts: Vec<Confusion> = samples
        .par_iter()
        .map(|s| {
            let mut c = Confusion::default();
            for (o, l) in forward(&s.grids, w, block_frames).iter().zip(&s.labels) {
                if let Some(y) = l.class() {
                    c.add(o.class(), y as u8);
                }
            }
            c
        })
        .collect();
    let mut total = Confusion::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

fn selection_score(c: &Confusion) -> f64 {
    c.accuracy()
        .map(|a| a.acc)
        .ok()
        .or_else(|| c.plain_accuracy())
        .unwrap_or(0.0)
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(w: &ModelWeights, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = w.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            lr,
        }
    }

    fn step(&mut self, w: &mut ModelWeights, g: &ModelWeights) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let grads = g.tensors();
        for (k, p) in w.tensors_mut().into_iter().enumerate() {
            let (m, v, gd) = (&mut self.m[k], &mut self.v[k], grads[k].data);
            for i in 0..p.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * gd[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * gd[i] * gd[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

fn clip(g: &mut ModelWeights, max_norm: f64) {
    let norm = g
        .tensors()
        .iter()
        .map(|t| t.data.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for t in g.tensors_mut() {
            for v in t.iter_mut() {
                *v *= s;
            }
        }
    }
}

/// Samples per parallel task; fixed so the summation order never depends
/// on scheduling.
const CHUNK: usize = 4;

/// Mean loss and gradient over `batch`, computed in parallel.
fn batch_gradient(w: &ModelWeights, batch: &[&TrainSample], cfg: &LossConfig) -> (f64, ModelWeights) {
    let parts: Vec<(f64, usize, ModelWeights)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = w.zeros_like();
            let mut loss = 0.0;
            let mut frames = 0;
            for s in chunk {
                loss += accumulate(w, s, cfg, &mut g);
                frames += s.labeled_frames();
            }
            (loss, frames, g)
        })
        .collect();
    let mut grad = w.zeros_like();
    let mut loss = 0.0;
    let mut frames = 0;
    for (l, f, g) in &parts {
        loss += l;
        frames += f;
        grad.add_scaled(g, 1.0);
    }
    finish(w, grad, loss, frames, cfg.l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    pub validation_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: ModelWeights,
    pub history: Vec<EpochStats>,
    /// Epoch whose weights were returned.
    pub best_epoch: usize,
}

/// Trains with Adam on mini-batches of `T_F` windows.
///
/// With a non-empty `validation` set, the weights of the epoch with the best
/// validation average accuracy are returned; otherwise the final weights.
pub fn train(
    data: &[GapSequence],
    validation: &[GapSequence],
    kind: ModelKind,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let samples = make_samples(data, cfg.window_frames());
    if samples.is_empty() {
        return Err(TrainError::AllIgnore);
    }
    let val_samples = make_samples(validation, cfg.window_frames());
    train_samples(&samples, &val_samples, kind, cfg)
}

pub fn train_samples(
    samples: &[TrainSample],
    val_samples: &[TrainSample],
    kind: ModelKind,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if samples.iter().all(|s| s.labeled_frames() == 0) {
        return Err(TrainError::AllIgnore);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = ModelWeights::init(
        kind,
        cfg.embed_dim,
        cfg.hidden,
        cfg.init_scale,
        cfg.embed_init_scale,
        &mut rng,
    );
    let loss_cfg = LossConfig {
        l2: cfg.l2,
        class_weights: if cfg.class_weights {
            inverse_frequency_weights(samples)
        } else {
            [1.0, 1.0]
        },
        block_frames: cfg.block_frames(),
    };
    let mut adam = Adam::new(&w, cfg.learning_rate);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelWeights)> = None;
    let mut since_best = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainSample> = idx.iter().map(|&i| &samples[i]).collect();
            let (loss, mut grad) = batch_gradient(&w, &batch, &loss_cfg);
            clip(&mut grad, cfg.clip_norm);
            adam.step(&mut w, &grad);
            loss_sum += loss;
            batches += 1;
        }
        if !w.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        let validation_acc = (!val_samples.is_empty())
            .then(|| selection_score(&evaluate_samples(&w, val_samples, loss_cfg.block_frames)));
        let loss = loss_sum / batches.max(1) as f64;
        log::debug!("epoch {epoch}: loss {loss:.5} validation {validation_acc:?}");
        history.push(EpochStats {
            epoch,
            loss,
            validation_acc,
        });
        if let Some(acc) = validation_acc {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, w.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience > 0 && since_best >= cfg.patience {
                    break;
                }
            }
        }
    }
    let (weights, best_epoch) = match best {
        Some((_, e, bw)) => (bw, e),
        None => (w, history.len().saturating_sub(1)),
    };
    Ok(TrainOutcome {
        weights,
        history,
        best_epoch,
    })
}

/// Frame accuracy of `w` on sequences, windowed like training data.
pub fn evaluate(w: &ModelWeights, data: &[GapSequence], cfg: &TrainConfig) -> Confusion {
    evaluate_samples(w, &make_samples(data, cfg.window_frames()), cfg.block_frames())
}

/// Mean cross-entropy at the initial weights, before any update and
/// without the weight penalty.
pub fn initial_cross_entropy(data: &[GapSequence], kind: ModelKind, cfg: &TrainConfig) -> f64 {
    let samples = make_samples(data, cfg.window_frames());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = ModelWeights::init(
        kind,
        cfg.embed_dim,
        cfg.hidden,
        cfg.init_scale,
        cfg.embed_init_scale,
        &mut rng,
    );
    super::grad::loss(
        &w,
        &samples,
        &LossConfig {
            l2: 0.0,
            class_weights: [1.0, 1.0],
            block_frames: cfg.block_frames(),
        },
    )
}
