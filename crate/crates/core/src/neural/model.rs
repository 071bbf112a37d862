use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cell::{step, LstmCellParams, StepCache};
use crate::grid::{embed_into, EmbeddingParams, OccupancyGrid, GRID_CELLS};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    #[serde(rename = "bilstm")]
    BiLstm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::BiLstm => "bilstm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(ModelKind::Lstm),
            "bilstm" | "bi-lstm" => Ok(ModelKind::BiLstm),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub embedding: EmbeddingParams,
    pub forward: LstmCellParams,
    /// Present iff the model is bidirectional.
    pub backward: Option<LstmCellParams>,
    /// `2 × hidden`, or `2 × 2·hidden` with the backward half on the right.
    pub output_weight: Matrix,
    pub output_bias: Vec<f64>,
}

/// A named parameter tensor; `regularized` marks weight matrices.
pub struct Tensor<'a> {
    pub name: &'static str,
    pub shape: (usize, usize),
    pub data: &'a [f64],
    pub regularized: bool,
}

impl ModelWeights {
    pub fn zeros(kind: ModelKind, embed_dim: usize, hidden: usize) -> Self {
        let input = 4 * embed_dim;
        let width = match kind {
            ModelKind::Lstm => hidden,
            ModelKind::BiLstm => 2 * hidden,
        };
        Self {
            embedding: EmbeddingParams::zeros(embed_dim),
            forward: LstmCellParams::zeros(input, hidden),
            backward: (kind == ModelKind::BiLstm).then(|| LstmCellParams::zeros(input, hidden)),
            output_weight: Matrix::zeros(2, width),
            output_bias: vec![0.0; 2],
        }
    }

    /// Embedding weights uniform in ±`embed_scale`, cells as
    /// [`LstmCellParams::init`], output layer zero.
    pub fn init<R: Rng>(
        kind: ModelKind,
        embed_dim: usize,
        hidden: usize,
        cell_scale: f64,
        embed_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut w = Self::zeros(kind, embed_dim, hidden);
        w.embedding.weight = Matrix::from_fn(embed_dim, GRID_CELLS, |_, _| rng.gen_range(-embed_scale..=embed_scale));
        w.forward = LstmCellParams::init(4 * embed_dim, hidden, cell_scale, rng);
        if kind == ModelKind::BiLstm {
            w.backward = Some(LstmCellParams::init(4 * embed_dim, hidden, cell_scale, rng));
        }
        w
    }

    pub fn kind(&self) -> ModelKind {
        if self.backward.is_some() {
            ModelKind::BiLstm
        } else {
            ModelKind::Lstm
        }
    }

    pub fn is_bidirectional(&self) -> bool {
        self.backward.is_some()
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.embed_dim()
    }

    /// Checks every shape against the embedding and hidden sizes.
    pub fn validate(&self) -> Result<(), String> {
        let e = self.embed_dim();
        if e == 0 {
            return Err("embedding dimension is zero".into());
        }
        if self.embedding.weight.shape() != (e, GRID_CELLS) {
            return Err(format!(
                "embedding.weight has shape {:?}, expected {:?}",
                self.embedding.weight.shape(),
                (e, GRID_CELLS)
            ));
        }
        if !self.forward.shape_ok() {
            return Err("forward cell weight and bias disagree".into());
        }
        let h = self.hidden_dim();
        let cell_shape = (4 * h, 4 * e + h);
        if self.forward.weight.shape() != cell_shape {
            return Err(format!(
                "forward.weight has shape {:?}, expected {:?}",
                self.forward.weight.shape(),
                cell_shape
            ));
        }
        if let Some(b) = &self.backward {
            if b.weight.shape() != cell_shape || b.bias.len() != 4 * h {
                return Err(format!(
                    "backward.weight has shape {:?}, expected {:?}",
                    b.weight.shape(),
                    cell_shape
                ));
            }
        }
        let width = if self.is_bidirectional() { 2 * h } else { h };
        if self.output_weight.shape() != (2, width) {
            return Err(format!(
                "output.weight has shape {:?}, expected {:?}",
                self.output_weight.shape(),
                (2, width)
            ));
        }
        if self.output_bias.len() != 2 {
            return Err(format!("output.bias has length {}, expected 2", self.output_bias.len()));
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.kind(), self.embed_dim(), self.hidden_dim())
    }

    pub fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = vec![
            Tensor {
                name: "embedding.weight",
                shape: self.embedding.weight.shape(),
                data: self.embedding.weight.as_slice(),
                regularized: true,
            },
            Tensor {
                name: "embedding.bias",
                shape: (self.embedding.bias.len(), 1),
                data: &self.embedding.bias,
                regularized: false,
            },
            Tensor {
                name: "forward.weight",
                shape: self.forward.weight.shape(),
                data: self.forward.weight.as_slice(),
                regularized: true,
            },
            Tensor {
                name: "forward.bias",
                shape: (self.forward.bias.len(), 1),
                data: &self.forward.bias,
                regularized: false,
            },
        ];
        if let Some(b) = &self.backward {
            out.push(Tensor {
                name: "backward.weight",
                shape: b.weight.shape(),
                data: b.weight.as_slice(),
                regularized: true,
            });
            out.push(Tensor {
                name: "backward.bias",
                shape: (b.bias.len(), 1),
                data: &b.bias,
                regularized: false,
            });
        }
        out.push(Tensor {
            name: "output.weight",
            shape: self.output_weight.shape(),
            data: self.output_weight.as_slice(),
            regularized: true,
        });
        out.push(Tensor {
            name: "output.bias",
            shape: (2, 1),
            data: &self.output_bias,
            regularized: false,
        });
        out
    }

    /// Mutable views in the order of [`ModelWeights::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.embedding.weight.as_mut_slice(),
            &mut self.embedding.bias,
            self.forward.weight.as_mut_slice(),
            &mut self.forward.bias,
        ];
        if let Some(b) = &mut self.backward {
            out.push(b.weight.as_mut_slice());
            out.push(&mut b.bias);
        }
        out.push(self.output_weight.as_mut_slice());
        out.push(&mut self.output_bias);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Adds `scale · other` tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelWeights, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src.data) {
                *d += scale * s;
            }
        }
    }

    /// Σ w² over the regularized tensors.
    pub fn l2_norm_sq(&self) -> f64 {
        self.tensors()
            .iter()
            .filter(|t| t.regularized)
            .map(|t| t.data.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// Softmax output of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameOutput {
    pub probs: [f64; 2],
}

impl FrameOutput {
    fn from_logits(l: [f64; 2]) -> Self {
        let m = l[0].max(l[1]);
        let e = [(l[0] - m).exp(), (l[1] - m).exp()];
        let s = e[0] + e[1];
        Self {
            probs: [e[0] / s, e[1] / s],
        }
    }

    /// Probability of class 1.
    pub fn p(&self) -> f64 {
        self.probs[1]
    }

    /// Argmax; a tie goes to class 0.
    pub fn class(&self) -> u8 {
        u8::from(self.probs[1] > self.probs[0])
    }
}

pub(crate) fn output(w: &ModelWeights, hcat: &[f64]) -> FrameOutput {
    let mut l = [w.output_bias[0], w.output_bias[1]];
    w.output_weight.matvec_acc(hcat, &mut l);
    FrameOutput::from_logits(l)
}

pub(crate) fn embed_all(seq: &[OccupancyGrid], w: &ModelWeights) -> Vec<Vec<f64>> {
    seq.iter()
        .map(|g| {
            let mut e = vec![0.0; w.embedding.output_dim()];
            embed_into(g, &w.embedding, &mut e);
            e
        })
        .collect()
}

/// Runs a cell over `inputs` in the given order from a zero state.
pub(crate) fn run_cell<'a>(p: &LstmCellParams, inputs: impl Iterator<Item = &'a Vec<f64>>) -> Vec<StepCache> {
    let hd = p.hidden_dim();
    let mut out: Vec<StepCache> = Vec::new();
    let zero = vec![0.0; hd];
    for e in inputs {
        let s = match out.last() {
            Some(prev) => step(p, e, &prev.h, &prev.c),
            None => step(p, e, &zero, &zero),
        };
        out.push(s);
    }
    out
}

/// Half-open block ranges `[k·len, (k+1)·len)` clipped to `n`.
pub(crate) fn blocks(n: usize, len: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    assert!(len > 0, "block length must be positive");
    (0..n).step_by(len).map(move |s| s..(s + len).min(n))
}

/// Intermediate values of a full pass, kept for backpropagation.
pub(crate) struct Trace {
    pub fwd: Vec<StepCache>,
    /// Indexed by frame; empty for unidirectional models.
    pub bwd: Vec<Option<StepCache>>,
    pub hcat: Vec<Vec<f64>>,
    pub outputs: Vec<FrameOutput>,
}

pub(crate) fn trace(seq: &[OccupancyGrid], w: &ModelWeights, block_len: usize) -> Trace {
    let embeds = embed_all(seq, w);
    let fwd = run_cell(&w.forward, embeds.iter());
    let mut bwd: Vec<Option<StepCache>> = Vec::new();
    if let Some(bp) = &w.backward {
        bwd.resize(seq.len(), None);
        for r in blocks(seq.len(), block_len) {
            let caches = run_cell(bp, embeds[r.clone()].iter().rev());
            for (k, c) in caches.into_iter().enumerate() {
                bwd[r.end - 1 - k] = Some(c);
            }
        }
    }
    let hcat: Vec<Vec<f64>> = (0..seq.len())
        .map(|t| {
            let mut h = fwd[t].h.clone();
            if let Some(Some(b)) = bwd.get(t) {
                h.extend_from_slice(&b.h);
            }
            h
        })
        .collect();
    let outputs = hcat.iter().map(|h| output(w, h)).collect();
    Trace {
        fwd,
        bwd,
        hcat,
        outputs,
    }
}

/// Forward LSTM over the whole sequence from a zero state.
pub fn forward_unidir(seq: &[OccupancyGrid], w: &ModelWeights) -> Vec<FrameOutput> {
    assert!(!w.is_bidirectional(), "forward_unidir needs a unidirectional model");
    trace(seq, w, 1).outputs
}

/// Bidirectional pass; the backward state restarts from zero at every
/// multiple of `block_frames`, so frame `t` only sees the rest of its block.
pub fn forward_bidir(seq: &[OccupancyGrid], w: &ModelWeights, block_frames: usize) -> Vec<FrameOutput> {
    assert!(w.is_bidirectional(), "forward_bidir needs a bidirectional model");
    trace(seq, w, block_frames).outputs
}

/// Dispatches on the model kind; real futures feed the backward layer.
pub fn forward(seq: &[OccupancyGrid], w: &ModelWeights, block_frames: usize) -> Vec<FrameOutput> {
    trace(seq, w, block_frames).outputs
}
