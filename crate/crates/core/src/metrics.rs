//! Average accuracy: the mean of the per-class accuracies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("predictions ({preds}) and labels ({labels}) differ in length")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("no {0} labels; per-class accuracy undefined")]
    MissingClass(&'static str),
}

/// Counts of a binary classifier's decisions; class 1 is positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub false_pos: usize,
}

impl Confusion {
    pub fn add(&mut self, pred: u8, label: u8) {
        match (label, pred) {
            (1, 1) => self.true_pos += 1,
            (1, _) => self.false_neg += 1,
            (_, 0) => self.true_neg += 1,
            _ => self.false_pos += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_pos += other.true_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
        self.false_pos += other.false_pos;
    }

    pub fn positives(&self) -> usize {
        self.true_pos + self.false_neg
    }

    pub fn negatives(&self) -> usize {
        self.true_neg + self.false_pos
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }

    pub fn accuracy(&self) -> Result<Accuracy, MetricError> {
        if self.positives() == 0 {
            return Err(MetricError::MissingClass("positive"));
        }
        if self.negatives() == 0 {
            return Err(MetricError::MissingClass("negative"));
        }
        let acc_p = self.true_pos as f64 / self.positives() as f64;
        let acc_n = self.true_neg as f64 / self.negatives() as f64;
        Ok(Accuracy {
            acc_p,
            acc_n,
            acc: (acc_p + acc_n) / 2.0,
        })
    }

    /// Plain fraction correct; `None` when empty.
    pub fn plain_accuracy(&self) -> Option<f64> {
        (self.total() > 0).then(|| (self.true_pos + self.true_neg) as f64 / self.total() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub acc_p: f64,
    pub acc_n: f64,
    pub acc: f64,
}

pub fn confusion(preds: &[u8], labels: &[u8]) -> Result<Confusion, MetricError> {
    if preds.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            labels: labels.len(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &l) in preds.iter().zip(labels) {
        c.add(p, l);
    }
    Ok(c)
}

pub fn average_accuracy(preds: &[u8], labels: &[u8]) -> Result<Accuracy, MetricError> {
    confusion(preds, labels)?.accuracy()
}
