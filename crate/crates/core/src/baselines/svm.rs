//! Soft-margin RBF support vector machine trained by sequential minimal
//! optimization with second-order working-set selection.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SvmError;
use crate::linalg::dot;
use crate::metrics::Confusion;
use crate::ngsim::Gaps;

/// Absent neighbours get this distance as a feature.
pub const DISTANCE_CAP: f64 = 200.0;
pub const FEATURES_PER_FRAME: usize = 8;

/// `[d_pv, d_rv, d_plv, d_pfv, v_pv, v_rv, v_plv, v_pfv]` with distances
/// capped at [`DISTANCE_CAP`].
pub fn frame_features(gaps: &Gaps) -> [f64; FEATURES_PER_FRAME] {
    let mut f = [0.0; FEATURES_PER_FRAME];
    for k in 0..4 {
        f[k] = gaps.distance[k].min(DISTANCE_CAP);
        f[4 + k] = if gaps.distance[k].is_finite() {
            gaps.rel_speed[k]
        } else {
            0.0
        };
    }
    f
}

/// Plain features of the current frame, or with exactly two future frames
/// appended (`t + 5 s`, `t + 10 s`).
pub fn build_svm_features(current: &Gaps, future: &[Gaps]) -> Vec<f64> {
    assert!(
        future.is_empty() || future.len() == 2,
        "future features need zero or two frames, got {}",
        future.len()
    );
    std::iter::once(current)
        .chain(future)
        .flat_map(frame_features)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Per-dimension mean and population standard deviation; constant
    /// dimensions get a unit scale.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.mean.len(), "feature dimension");
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 0.1,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    pub standardizer: Standardizer,
    /// Standardized support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    /// `Σ coef_i K(sv_i, x) + bias` on raw features.
    pub fn decision(&self, features: &[f64]) -> f64 {
        let x = self.standardizer.transform(features);
        self.decision_standardized(&x)
    }

    fn decision_standardized(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, a)| a * rbf(self.gamma, sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        let dim = self.standardizer.mean.len();
        if self.standardizer.std.len() != dim
            || self.support_vectors.len() != self.coef.len()
            || self.support_vectors.iter().any(|s| s.len() != dim)
        {
            return Err(SvmError::Malformed("inconsistent dimensions".into()));
        }
        if self.coef.iter().any(|a| !(a.abs() <= self.c * (1.0 + 1e-12))) {
            return Err(SvmError::Malformed("coefficient outside the box".into()));
        }
        Ok(())
    }
}

/// Class 1 iff the decision value is strictly positive.
pub fn svm_predict(model: &SvmModel, features: &[f64]) -> u8 {
    u8::from(model.decision(features) > 0.0)
}

/// The full dual solution, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: SvmModel,
    /// One multiplier per training sample.
    pub alpha: Vec<f64>,
    pub iterations: usize,
}

/// Symmetric RBF kernel matrix, row-major.
pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let norms: Vec<f64> = x.iter().map(|v| dot(v, v)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d2 = (norms[i] + norms[j] - 2.0 * dot(&x[i], &x[j])).max(0.0);
                    if i == j {
                        1.0
                    } else {
                        (-gamma * d2).exp()
                    }
                })
                .collect()
        })
        .collect();
    rows.concat()
}

fn check_labels(y: &[i8]) -> Result<(), SvmError> {
    if let Some(bad) = y.iter().find(|v| **v != 1 && **v != -1) {
        return Err(SvmError::BadLabel(*bad));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

/// SMO on a precomputed kernel. Returns `(alpha, rho, iterations)` where the
/// decision function is `Σ α_i y_i K_i(x) − rho`.
fn smo(k: &[f64], y: &[i8], c: f64, tol: f64) -> (Vec<f64>, f64, usize) {
    const TAU: f64 = 1e-12;
    let n = y.len();
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let kk = |i: usize, j: usize| k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(10_000_000);
    let mut iter = 0;
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    while iter < max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let in_up = if y[t] == 1 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -yf[t] * grad[t] >= gmax {
                gmax = -yf[t] * grad[t];
                i_sel = t;
            }
        }
        // j: second-order choice in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] == 1 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let yg = yf[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let b = gmax + yg;
            if b > 0.0 && i_sel != usize::MAX {
                let mut a = kk(i_sel, i_sel) + kk(t, t) - 2.0 * kk(i_sel, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj <= best {
                    best = obj;
                    j_sel = t;
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax + gmax2 < tol {
            break;
        }
        iter += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = kk(i, j);
        if y[i] != y[j] {
            let mut quad = kk(i, i) + kk(j, j) + 2.0 * (yf[i] * yf[j] * kij);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kk(i, i) + kk(j, j) - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (da_i, da_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += yf[t] * (yf[i] * kk(t, i) * da_i + yf[j] * kk(t, j) * da_j);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = yf[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] == -1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] == 1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    (alpha, rho, iter)
}

/// Maximal KKT violation `max_{I_up} −y∇f − min_{I_low} −y∇f` of a dual
/// solution, recomputed from scratch.
pub fn kkt_gap(x_std: &[Vec<f64>], y: &[i8], alpha: &[f64], gamma: f64, c: f64) -> f64 {
    let n = y.len();
    let grad: Vec<f64> = (0..n)
        .map(|t| {
            (0..n)
                .map(|s| y[t] as f64 * y[s] as f64 * rbf(gamma, &x_std[t], &x_std[s]) * alpha[s])
                .sum::<f64>()
                - 1.0
        })
        .collect();
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let v = -(y[t] as f64) * grad[t];
        let in_up = (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0);
        let in_low = (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < c);
        if in_up {
            m_up = m_up.max(v);
        }
        if in_low {
            m_low = m_low.min(v);
        }
    }
    (m_up - m_low).max(0.0)
}

fn fit_standardized(
    x_std: Vec<Vec<f64>>,
    y: &[i8],
    kernel: &[f64],
    standardizer: Standardizer,
    params: &SvmParams,
) -> SvmFit {
    let (alpha, rho, iterations) = smo(kernel, y, params.c, params.tolerance);
    let mut support_vectors = Vec::new();
    let mut coef = Vec::new();
    for (t, a) in alpha.iter().enumerate() {
        if *a > 0.0 {
            support_vectors.push(x_std[t].clone());
            coef.push(a * y[t] as f64);
        }
    }
    SvmFit {
        model: SvmModel {
            gamma: params.gamma,
            c: params.c,
            standardizer,
            support_vectors,
            coef,
            bias: -rho,
        },
        alpha,
        iterations,
    }
}

/// Standardizes `x`, then solves the dual. Labels are ±1.
pub fn svm_fit(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmFit, SvmError> {
    check_labels(y)?;
    assert_eq!(x.len(), y.len(), "one label per sample");
    let standardizer = Standardizer::fit(x);
    let x_std: Vec<Vec<f64>> = x.iter().map(|r| standardizer.transform(r)).collect();
    let kernel = kernel_matrix(&x_std, params.gamma);
    Ok(fit_standardized(x_std, y, &kernel, standardizer, params))
}

pub fn svm_train(x: &[Vec<f64>], y: &[i8], c: f64, gamma: f64) -> Result<SvmModel, SvmError> {
    svm_fit(
        x,
        y,
        &SvmParams {
            c,
            gamma,
            ..SvmParams::default()
        },
    )
    .map(|f| f.model)
}

/// Random class-balanced subsample of at most `per_class` samples per class,
/// in the original order.
pub fn balanced_sample<R: Rng>(y: &[i8], per_class: usize, rng: &mut R) -> Vec<usize> {
    let mut chosen = Vec::new();
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 1).collect();
    let take = per_class.min(pos.len()).min(neg.len());
    pos.shuffle(rng);
    neg.shuffle(rng);
    chosen.extend_from_slice(&pos[..take]);
    chosen.extend_from_slice(&neg[..take]);
    chosen.sort_unstable();
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Default for SvmGrid {
    fn default() -> Self {
        Self {
            c: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            gamma: vec![0.001, 0.01, 0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub model: SvmModel,
    pub c: f64,
    pub gamma: f64,
    pub validation_acc: f64,
    /// `(c, gamma, validation average accuracy)` of every cell.
    pub cells: Vec<(f64, f64, f64)>,
}

fn validation_score(model: &SvmModel, x: &[Vec<f64>], y: &[i8]) -> f64 {
    let mut c = Confusion::default();
    for (f, l) in x.iter().zip(y) {
        c.add(svm_predict(model, f), u8::from(*l == 1));
    }
    c.accuracy()
        .map(|a| a.acc)
        .ok()
        .or_else(|| c.plain_accuracy())
        .unwrap_or(0.0)
}

/// Fits every `(C, gamma)` cell and keeps the best validation average
/// accuracy; ties go to the earlier cell in grid order.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[i8],
    val_x: &[Vec<f64>],
    val_y: &[i8],
    grid: &SvmGrid,
    tolerance: f64,
) -> Result<GridSearchResult, SvmError> {
    check_labels(y)?;
    if grid.c.is_empty() || grid.gamma.is_empty() {
        return Err(SvmError::Malformed("empty parameter grid".into()));
    }
    let standardizer = Standardizer::fit(x);
    let x_std: Vec<Vec<f64>> = x.iter().map(|r| standardizer.transform(r)).collect();
    let mut fitted: Vec<(f64, f64, f64, SvmModel)> = Vec::new();
    for &gamma in &grid.gamma {
        let kernel = kernel_matrix(&x_std, gamma);
        let cells: Vec<(f64, f64, f64, SvmModel)> = grid
            .c
            .par_iter()
            .map(|&c| {
                let params = SvmParams { c, gamma, tolerance };
                let fit = fit_standardized(x_std.clone(), y, &kernel, standardizer.clone(), &params);
                let score = if val_x.is_empty() {
                    validation_score(&fit.model, x, y)
                } else {
                    validation_score(&fit.model, val_x, val_y)
                };
                (c, gamma, score, fit.model)
            })
            .collect();
        fitted.extend(cells);
    }
    // grid order: C outer, gamma inner
    fitted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cells = fitted.iter().map(|(c, g, s, _)| (*c, *g, *s)).collect();
    let best = fitted
        .into_iter()
        .reduce(|best, cur| if cur.2 > best.2 { cur } else { best })
        .expect("non-empty grid");
    Ok(GridSearchResult {
        c: best.0,
        gamma: best.1,
        validation_acc: best.2,
        model: best.3,
        cells,
    })
}

pub const SVM_FORMAT: &str = "lanegap-svm";
pub const SVM_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmCheckpoint {
    pub format: String,
    pub version: u32,
    /// Frames of future context (0, or two offsets for the future variant).
    pub future_offsets: Vec<usize>,
    pub model: SvmModel,
}

impl SvmCheckpoint {
    pub fn new(model: SvmModel, future_offsets: Vec<usize>) -> Self {
        Self {
            format: SVM_FORMAT.into(),
            version: SVM_VERSION,
            future_offsets,
            model,
        }
    }

    pub fn write<W: std::io::Write>(&self, w: W) -> Result<(), SvmError> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read<R: std::io::Read>(r: R) -> Result<Self, SvmError> {
        let ck: SvmCheckpoint = serde_json::from_reader(r)?;
        if ck.format != SVM_FORMAT || ck.version != SVM_VERSION {
            return Err(SvmError::Malformed(format!(
                "format {} version {}",
                ck.format, ck.version
            )));
        }
        ck.model.validate()?;
        Ok(ck)
    }
}
