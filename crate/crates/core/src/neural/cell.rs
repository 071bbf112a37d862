use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{sigmoid, Matrix};

/// Gate rows are stacked `[input; forget; output; candidate]`, each
/// `hidden` rows tall, acting on the concatenation `[e; h_prev]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    /// `4·hidden × (input + hidden)`
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            weight: Matrix::zeros(4 * hidden, input + hidden),
            bias: vec![0.0; 4 * hidden],
        }
    }

    /// Uniform weights in ±`scale`, forget bias +1, other biases 0.
    pub fn init<R: Rng>(input: usize, hidden: usize, scale: f64, rng: &mut R) -> Self {
        let weight = Matrix::from_fn(4 * hidden, input + hidden, |_, _| rng.gen_range(-scale..=scale));
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].fill(1.0);
        Self { weight, bias }
    }

    pub fn hidden_dim(&self) -> usize {
        self.bias.len() / 4
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols() - self.hidden_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }

    pub(crate) fn shape_ok(&self) -> bool {
        let h = self.bias.len();
        h.is_multiple_of(4) && h > 0 && self.weight.rows() == h && self.weight.cols() > h / 4
    }
}

/// Everything one cell step needs to be differentiated later.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    /// `[e; h_prev]`
    pub x: Vec<f64>,
    /// Activated gates in `[i, f, o, g]` order.
    pub gates: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn step(p: &LstmCellParams, e: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let hd = p.hidden_dim();
    assert_eq!(e.len(), p.input_dim(), "lstm input length");
    assert_eq!(h_prev.len(), hd, "lstm hidden length");
    assert_eq!(c_prev.len(), hd, "lstm cell length");
    let mut x = Vec::with_capacity(e.len() + hd);
    x.extend_from_slice(e);
    x.extend_from_slice(h_prev);
    let mut gates = p.bias.clone();
    p.weight.matvec_acc(&x, &mut gates);
    for z in &mut gates[..3 * hd] {
        *z = sigmoid(*z);
    }
    for z in &mut gates[3 * hd..] {
        *z = z.tanh();
    }
    let mut c = vec![0.0; hd];
    let mut tanh_c = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, o, g) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    StepCache {
        x,
        gates,
        c_prev: c_prev.to_vec(),
        c,
        tanh_c,
        h,
    }
}

/// Backpropagates through one step.
///
/// `dc` holds the gradient w.r.t. this step's cell state on entry and the
/// gradient w.r.t. `c_prev` on exit. `dx` receives the gradient w.r.t.
/// `[e; h_prev]`.
pub(crate) fn step_backward(
    p: &LstmCellParams,
    cache: &StepCache,
    dh: &[f64],
    dc: &mut [f64],
    grad: &mut LstmCellParams,
    dx: &mut [f64],
) {
    let hd = p.hidden_dim();
    let mut dz = vec![0.0; 4 * hd];
    for k in 0..hd {
        let g = &cache.gates;
        let (i, f, o, cand) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
        let tc = cache.tanh_c[k];
        let dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
        let d_o = dh[k] * tc;
        let d_i = dck * cand;
        let d_g = dck * i;
        let d_f = dck * cache.c_prev[k];
        dz[k] = d_i * i * (1.0 - i);
        dz[hd + k] = d_f * f * (1.0 - f);
        dz[2 * hd + k] = d_o * o * (1.0 - o);
        dz[3 * hd + k] = d_g * (1.0 - cand * cand);
        dc[k] = dck * f;
    }
    grad.weight.outer_acc(&dz, &cache.x);
    for (b, d) in grad.bias.iter_mut().zip(&dz) {
        *b += d;
    }
    dx.fill(0.0);
    p.weight.matvec_t_acc(&dz, dx);
}

/// One LSTM step: `(h, c)` from the input and the previous state.
pub fn lstm_cell(e: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmCellParams) -> (Vec<f64>, Vec<f64>) {
    let s = step(p, e, h_prev, c_prev);
    (s.h, s.c)
}
