use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{HarnessError, Scheme};
use crate::metrics::Confusion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Idm,
    Svm,
    SvmFuture,
    Lstm,
    /// Bidirectional model fed the real future.
    BilstmReal,
    /// Bidirectional model fed IDM-predicted futures.
    BilstmIdm,
}

impl ModelName {
    pub const ALL: [ModelName; 6] = [
        ModelName::Idm,
        ModelName::Svm,
        ModelName::SvmFuture,
        ModelName::Lstm,
        ModelName::BilstmReal,
        ModelName::BilstmIdm,
    ];

    /// Column heading in reports.
    pub fn label(self) -> &'static str {
        match self {
            ModelName::Idm => "IDM",
            ModelName::Svm => "SVM",
            ModelName::SvmFuture => "SVM*",
            ModelName::Lstm => "LSTM",
            ModelName::BilstmReal => "Bi-LSTM*",
            ModelName::BilstmIdm => "Bi-LSTM",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ModelName::Idm => "idm",
            ModelName::Svm => "svm",
            ModelName::SvmFuture => "svm_future",
            ModelName::Lstm => "lstm",
            ModelName::BilstmReal => "bilstm_real",
            ModelName::BilstmIdm => "bilstm_idm",
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, ModelName::Lstm | ModelName::BilstmReal | ModelName::BilstmIdm)
    }
}

impl std::str::FromStr for ModelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelName::ALL
            .into_iter()
            .find(|m| m.key().eq_ignore_ascii_case(s) || m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub acc_p: f64,
    pub acc_n: f64,
    pub acc: f64,
    pub confusion: Confusion,
}

impl FoldResult {
    pub fn new(fold: usize, confusion: Confusion) -> Result<Self, HarnessError> {
        let a = confusion.accuracy()?;
        Ok(Self {
            fold,
            acc_p: a.acc_p,
            acc_n: a.acc_n,
            acc: a.acc,
            confusion,
        })
    }
}

/// One model on one dataset. The headline numbers are fold means, and
/// `acc = (acc_p + acc_n) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: Scheme,
    pub model: ModelName,
    pub folds: Vec<FoldResult>,
    pub acc_p: f64,
    pub acc_n: f64,
    pub acc: f64,
    /// Summed over folds.
    pub confusion: Confusion,
}

impl EvalReport {
    pub fn from_folds(dataset: Scheme, model: ModelName, folds: Vec<FoldResult>) -> Self {
        let n = folds.len().max(1) as f64;
        let acc_p = folds.iter().map(|f| f.acc_p).sum::<f64>() / n;
        let acc_n = folds.iter().map(|f| f.acc_n).sum::<f64>() / n;
        let mut confusion = Confusion::default();
        for f in &folds {
            confusion.merge(&f.confusion);
        }
        Self {
            dataset,
            model,
            folds,
            acc_p,
            acc_n,
            acc: (acc_p + acc_n) / 2.0,
            confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub reports: Vec<EvalReport>,
}

impl ExperimentReport {
    pub fn get(&self, dataset: Scheme, model: ModelName) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.dataset == dataset && r.model == model)
    }

    /// One row per model and dataset, plus one row per fold.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "dataset",
            "model",
            "fold",
            "acc_p",
            "acc_n",
            "acc",
            "true_pos",
            "false_neg",
            "true_neg",
            "false_pos",
        ])?;
        let mut row = |r: &EvalReport, fold: String, p: f64, n: f64, a: f64, c: &Confusion| {
            w.write_record([
                r.dataset.as_str().to_string(),
                r.model.label().to_string(),
                fold,
                p.to_string(),
                n.to_string(),
                a.to_string(),
                c.true_pos.to_string(),
                c.false_neg.to_string(),
                c.true_neg.to_string(),
                c.false_pos.to_string(),
            ])
        };
        for r in &self.reports {
            row(r, "mean".into(), r.acc_p, r.acc_n, r.acc, &r.confusion)?;
            for f in &r.folds {
                row(r, f.fold.to_string(), f.acc_p, f.acc_n, f.acc, &f.confusion)?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Datasets as rows, models as columns, average accuracy in percent.
    pub fn summary(&self) -> String {
        let mut models: Vec<ModelName> = self.reports.iter().map(|r| r.model).collect();
        models.sort();
        models.dedup();
        let mut datasets: Vec<Scheme> = self.reports.iter().map(|r| r.dataset).collect();
        datasets.sort();
        datasets.dedup();

        let mut out = String::new();
        let _ = write!(out, "{:<14}", "dataset");
        for m in &models {
            let _ = write!(out, "{:>10}", m.label());
        }
        out.push('\n');
        for d in &datasets {
            let _ = write!(out, "{:<14}", d.as_str());
            for m in &models {
                match self.get(*d, *m) {
                    Some(r) => {
                        let _ = write!(out, "{:>10.2}", 100.0 * r.acc);
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
        for r in &self.reports {
            let folds: Vec<String> = r.folds.iter().map(|f| format!("{:.4}", f.acc)).collect();
            let _ = writeln!(
                out,
                "{} {}: acc {:.4} (acc_p {:.4}, acc_n {:.4}); folds [{}]",
                r.dataset.as_str(),
                r.model.label(),
                r.acc,
                r.acc_p,
                r.acc_n,
                folds.join(", ")
            );
        }
        out
    }
}
