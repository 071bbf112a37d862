//! Cross-entropy loss and its gradient by backpropagation through time.

use super::cell::step_backward;
use super::model::{blocks, trace, ModelWeights};
use crate::grid::{OccupancyGrid, GRID_PARTS};
use crate::labeling::Label;

/// One training window: a grid and a label per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub grids: Vec<OccupancyGrid>,
    pub labels: Vec<Label>,
}

impl TrainSample {
    pub fn labeled_frames(&self) -> usize {
        self.labels.iter().filter(|l| **l != Label::Ignore).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub l2: f64,
    /// Multiplies the cross-entropy of frames of class 0 and 1.
    pub class_weights: [f64; 2],
    /// Backward-state reset interval in frames.
    pub block_frames: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            l2: 0.0,
            class_weights: [1.0, 1.0],
            block_frames: 100,
        }
    }
}

/// Adds the gradient of Σ weight·CE over the labeled frames of `sample`
/// to `grad`; returns that sum.
pub(crate) fn accumulate(w: &ModelWeights, sample: &TrainSample, cfg: &LossConfig, grad: &mut ModelWeights) -> f64 {
    assert_eq!(sample.grids.len(), sample.labels.len(), "one label per frame");
    let n = sample.grids.len();
    let tr = trace(&sample.grids, w, cfg.block_frames);
    let hd = w.hidden_dim();
    let input = w.embedding.output_dim();
    let width = w.output_weight.cols();

    let mut loss = 0.0;
    let mut dh_fwd = vec![vec![0.0; hd]; n];
    let mut dh_bwd = vec![vec![0.0; hd]; if w.is_bidirectional() { n } else { 0 }];
    let mut dhcat = vec![0.0; width];
    for t in 0..n {
        let Some(y) = sample.labels[t].class() else {
            continue;
        };
        let weight = cfg.class_weights[y];
        let probs = tr.outputs[t].probs;
        loss -= weight * probs[y].max(f64::MIN_POSITIVE).ln();
        let mut dl = [weight * probs[0], weight * probs[1]];
        dl[y] -= weight;
        grad.output_weight.outer_acc(&dl, &tr.hcat[t]);
        grad.output_bias[0] += dl[0];
        grad.output_bias[1] += dl[1];
        dhcat.fill(0.0);
        w.output_weight.matvec_t_acc(&dl, &mut dhcat);
        dh_fwd[t].copy_from_slice(&dhcat[..hd]);
        if w.is_bidirectional() {
            dh_bwd[t].copy_from_slice(&dhcat[hd..]);
        }
    }

    let mut de = vec![vec![0.0; input]; n];
    let mut dx = vec![0.0; input + hd];

    // forward layer: reverse time
    let mut dh_next = vec![0.0; hd];
    let mut dc = vec![0.0; hd];
    for t in (0..n).rev() {
        let dh: Vec<f64> = dh_fwd[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        step_backward(&w.forward, &tr.fwd[t], &dh, &mut dc, &mut grad.forward, &mut dx);
        de[t].copy_from_slice(&dx[..input]);
        dh_next.copy_from_slice(&dx[input..]);
    }

    // backward layer: each block was processed end to start, so its
    // gradient flows start to end
    if let (Some(bp), Some(bg)) = (&w.backward, grad.backward.as_mut()) {
        for r in blocks(n, cfg.block_frames) {
            dh_next.fill(0.0);
            dc.fill(0.0);
            for t in r {
                let cache = tr.bwd[t].as_ref().expect("backward cache for every frame");
                let dh: Vec<f64> = dh_bwd[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                step_backward(bp, cache, &dh, &mut dc, bg, &mut dx);
                for (d, s) in de[t].iter_mut().zip(&dx[..input]) {
                    *d += s;
                }
                dh_next.copy_from_slice(&dx[input..]);
            }
        }
    }

    // shared embedding
    let dim = w.embed_dim();
    for (t, g) in sample.grids.iter().enumerate() {
        for part in 0..GRID_PARTS {
            let d = &de[t][part * dim..(part + 1) * dim];
            for (b, v) in grad.embedding.bias.iter_mut().zip(d) {
                *b += v;
            }
            for (c, &cell) in g.parts[part].iter().enumerate() {
                if cell != 0 {
                    let scale = cell as f64;
                    for (r, v) in d.iter().enumerate() {
                        let cur = grad.embedding.weight.get(r, c);
                        grad.embedding.weight.set(r, c, cur + scale * v);
                    }
                }
            }
        }
    }
    loss
}

/// Mean weighted cross-entropy over all labeled frames of `batch` plus
/// `l2·‖W‖²`, with its gradient.
pub fn loss_and_gradient(w: &ModelWeights, batch: &[TrainSample], cfg: &LossConfig) -> (f64, ModelWeights) {
    let mut grad = w.zeros_like();
    let mut total = 0.0;
    let mut frames = 0usize;
    for s in batch {
        total += accumulate(w, s, cfg, &mut grad);
        frames += s.labeled_frames();
    }
    finish(w, grad, total, frames, cfg.l2)
}

/// Normalizes accumulated sums by the frame count and adds the penalty.
pub(crate) fn finish(
    w: &ModelWeights,
    mut grad: ModelWeights,
    total: f64,
    frames: usize,
    l2: f64,
) -> (f64, ModelWeights) {
    let scale = if frames > 0 { 1.0 / frames as f64 } else { 0.0 };
    let params = w.tensors();
    for (g, p) in grad.tensors_mut().into_iter().zip(&params) {
        let decay = if p.regularized { 2.0 * l2 } else { 0.0 };
        for (gv, pv) in g.iter_mut().zip(p.data) {
            *gv = *gv * scale + decay * pv;
        }
    }
    (total * scale + l2 * w.l2_norm_sq(), grad)
}

/// Loss only.
pub fn loss(w: &ModelWeights, batch: &[TrainSample], cfg: &LossConfig) -> f64 {
    let mut total = 0.0;
    let mut frames = 0usize;
    for s in batch {
        let outputs = trace(&s.grids, w, cfg.block_frames).outputs;
        for (o, l) in outputs.iter().zip(&s.labels) {
            if let Some(y) = l.class() {
                total -= cfg.class_weights[y] * o.probs[y].max(f64::MIN_POSITIVE).ln();
                frames += 1;
            }
        }
    }
    let mean = if frames > 0 { total / frames as f64 } else { 0.0 };
    mean + cfg.l2 * w.l2_norm_sq()
}
