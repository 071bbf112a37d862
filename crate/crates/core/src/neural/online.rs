use super::model::{embed_all, output, run_cell, FrameOutput, ModelWeights};
use crate::grid::{encode_gaps, encode_grid, OccupancyGrid};
use crate::idm::Predictor;
use crate::neural::cell::step;
use crate::ngsim::Observation;

/// Causal inference over a stream of observations.
///
/// The forward state carries over between frames. For a bidirectional model
/// the backward layer at frame `t` runs over the rest of `t`'s block, with
/// frame `t` observed and every later frame supplied by the predictor.
pub struct OnlinePredictor<'a, P: Predictor + ?Sized> {
    weights: &'a ModelWeights,
    predictor: &'a P,
    block_frames: usize,
    t: usize,
    h: Vec<f64>,
    c: Vec<f64>,
}

impl<'a, P: Predictor + ?Sized> OnlinePredictor<'a, P> {
    pub fn new(weights: &'a ModelWeights, predictor: &'a P, block_frames: usize) -> Self {
        assert!(block_frames > 0, "block length must be positive");
        let hd = weights.hidden_dim();
        Self {
            weights,
            predictor,
            block_frames,
            t: 0,
            h: vec![0.0; hd],
            c: vec![0.0; hd],
        }
    }

    /// Frames consumed so far.
    pub fn position(&self) -> usize {
        self.t
    }

    pub fn push(&mut self, obs: &Observation) -> FrameOutput {
        let w = self.weights;
        let grid = encode_grid(&obs.context);
        let e = embed_all(std::slice::from_ref(&grid), w).pop().expect("one embedding");
        let s = step(&w.forward, &e, &self.h, &self.c);
        self.h = s.h;
        self.c = s.c;

        let mut hcat = self.h.clone();
        if let Some(bp) = &w.backward {
            let remaining = self.block_frames - self.t % self.block_frames;
            let mut grids: Vec<OccupancyGrid> = vec![grid];
            if remaining > 1 {
                let future = self.predictor.predict(obs, remaining - 1);
                assert_eq!(future.len(), remaining - 1, "predictor returned a wrong horizon");
                grids.extend(future.iter().map(encode_gaps));
            }
            let embeds = embed_all(&grids, w);
            let caches = run_cell(bp, embeds.iter().rev());
            hcat.extend_from_slice(&caches.last().expect("at least the current frame").h);
        }
        self.t += 1;
        output(w, &hcat)
    }
}

/// Runs [`OnlinePredictor`] over a whole history.
pub fn predict_online<P: Predictor + ?Sized>(
    weights: &ModelWeights,
    history: &[Observation],
    predictor: &P,
    block_frames: usize,
) -> Vec<FrameOutput> {
    let mut online = OnlinePredictor::new(weights, predictor, block_frames);
    history.iter().map(|o| online.push(o)).collect()
}
