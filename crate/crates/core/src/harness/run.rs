use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig};
use super::dataset::{check_files, label_recordings, load_ngsim, load_store, Dataset};
use super::eval::{eval_idm, eval_predicted, eval_svm, fit_svm};
use super::report::{EvalReport, ExperimentReport, FoldResult, ModelName};
use super::split::{groups_of, make_split, validation_split, Fold, GroupKey, SplitKind};
use super::synthetic::generate;
use super::{HarnessError, Scheme};
use crate::labeling::GapSequence;
use crate::metrics::Confusion;
use crate::neural::{evaluate, train, ModelKind, TrainConfig};

/// Independent streams of the master seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum SeedTag {
    Data = 1,
    Augment = 2,
    KFold = 3,
    Holdout = 4,
    Validation = 5,
    Init = 6,
    Sampling = 7,
}

pub fn derive_seed(master: u64, tag: SeedTag, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((tag as u64) << 32) | index);
    rng.next_u64()
}

/// Loads and labels the configured data, one dataset per scheme. Missing
/// files fail here, before any training.
pub fn prepare_datasets(cfg: &ExperimentConfig) -> Result<Vec<Dataset>, HarnessError> {
    let recordings = match &cfg.data {
        DataSource::Synthetic(s) => {
            return Ok(vec![generate(s, &cfg.labels, derive_seed(cfg.seed, SeedTag::Data, 0))]);
        }
        DataSource::Ngsim { files, units } => {
            check_files(files)?;
            load_ngsim(files, *units)?
        }
        DataSource::Store { path } => load_store(path)?,
    };
    let layout = cfg.layout.layout();
    Ok(cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let aug = (scheme == Scheme::Action && cfg.augment_action).then_some(&cfg.augment);
            label_recordings(
                &recordings,
                scheme,
                &layout,
                &cfg.labels,
                aug,
                derive_seed(cfg.seed, SeedTag::Augment, 0),
            )
        })
        .collect())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let datasets = prepare_datasets(cfg)?;
    let mut reports = Vec::new();
    for d in &datasets {
        log::info!("{} dataset: {} sequences", d.scheme.as_str(), d.sequences.len());
        reports.extend(run_dataset(d, cfg)?);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        reports,
    })
}

fn select<'a>(data: &'a [GapSequence], groups: &[GroupKey]) -> Vec<&'a GapSequence> {
    let keep: std::collections::BTreeSet<&GroupKey> = groups.iter().collect();
    data.iter().filter(|s| keep.contains(&GroupKey::of(s))).collect()
}

fn owned(v: &[&GapSequence]) -> Vec<GapSequence> {
    v.iter().map(|s| (*s).clone()).collect()
}

fn limit(folds: Vec<Fold>, max: usize) -> Vec<Fold> {
    if max == 0 {
        folds
    } else {
        folds.into_iter().take(max).collect()
    }
}

/// Every requested model on one dataset.
pub fn run_dataset(d: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<EvalReport>, HarnessError> {
    let groups = groups_of(&d.sequences);
    let wants = |m: ModelName| cfg.models.contains(&m);
    let mut per_model: BTreeMap<ModelName, Vec<FoldResult>> = BTreeMap::new();

    let kfold = limit(
        make_split(
            &groups,
            SplitKind::KFold { k: cfg.split.folds },
            derive_seed(cfg.seed, SeedTag::KFold, 0),
        )
        .folds,
        cfg.split.max_folds,
    );
    if cfg.models.iter().any(|m| m.is_recurrent() || *m == ModelName::Idm) {
        let results: Result<Vec<Vec<(ModelName, Confusion)>>, HarnessError> = kfold
            .par_iter()
            .enumerate()
            .map(|(i, fold)| run_kfold(d, cfg, i, fold))
            .collect();
        for (i, fold) in results?.into_iter().enumerate() {
            for (m, c) in fold {
                per_model.entry(m).or_default().push(FoldResult::new(i, c)?);
            }
        }
    }

    let svms: Vec<ModelName> = [ModelName::Svm, ModelName::SvmFuture]
        .into_iter()
        .filter(|m| wants(*m))
        .collect();
    if !svms.is_empty() {
        let runs = limit(
            make_split(
                &groups,
                SplitKind::Holdout {
                    train_fraction: cfg.split.train_fraction,
                    runs: cfg.split.holdout_runs,
                },
                derive_seed(cfg.seed, SeedTag::Holdout, 0),
            )
            .folds,
            cfg.split.max_folds,
        );
        let stride = match d.scheme {
            Scheme::Automatic => cfg.svm.frame_stride,
            Scheme::Action => 1,
        };
        let jobs: Vec<(usize, ModelName)> = (0..runs.len())
            .flat_map(|r| svms.iter().map(move |&m| (r, m)))
            .collect();
        let results: Result<Vec<(usize, ModelName, Confusion)>, HarnessError> = jobs
            .par_iter()
            .map(|&(r, m)| {
                let run = &runs[r];
                let (train_g, val_g) = validation_split(
                    &run.train,
                    cfg.split.validation_fraction,
                    derive_seed(cfg.seed, SeedTag::Validation, 1000 + r as u64),
                );
                let offsets = if m == ModelName::SvmFuture {
                    cfg.svm.future_offsets()
                } else {
                    Vec::new()
                };
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SeedTag::Sampling, r as u64));
                let fit = fit_svm(
                    &select(&d.sequences, &train_g),
                    &select(&d.sequences, &val_g),
                    &offsets,
                    stride,
                    &cfg.svm,
                    &mut rng,
                )?;
                log::info!(
                    "{} run {r}: C={} gamma={} validation {:.4}",
                    m.label(),
                    fit.c,
                    fit.gamma,
                    fit.validation_acc
                );
                Ok((r, m, eval_svm(&fit.model, &offsets, &select(&d.sequences, &run.test))))
            })
            .collect();
        for (r, m, c) in results? {
            per_model.entry(m).or_default().push(FoldResult::new(r, c)?);
        }
    }

    Ok(cfg
        .models
        .iter()
        .filter_map(|m| {
            per_model
                .remove(m)
                .map(|folds| EvalReport::from_folds(d.scheme, *m, folds))
        })
        .collect())
}

fn train_config(cfg: &ExperimentConfig, scheme: Scheme, fold: usize) -> TrainConfig {
    TrainConfig {
        seed: derive_seed(cfg.seed, SeedTag::Init, fold as u64),
        class_weights: cfg.train.class_weights || (scheme == Scheme::Automatic && cfg.automatic_class_weights),
        ..cfg.train
    }
}

fn run_kfold(
    d: &Dataset,
    cfg: &ExperimentConfig,
    i: usize,
    fold: &Fold,
) -> Result<Vec<(ModelName, Confusion)>, HarnessError> {
    let wants = |m: ModelName| cfg.models.contains(&m);
    let (train_g, val_g) = validation_split(
        &fold.train,
        cfg.split.validation_fraction,
        derive_seed(cfg.seed, SeedTag::Validation, i as u64),
    );
    let train_set = owned(&select(&d.sequences, &train_g));
    let val_set = owned(&select(&d.sequences, &val_g));
    let test = select(&d.sequences, &fold.test);
    let tc = train_config(cfg, d.scheme, i);
    let mut out = Vec::new();

    if wants(ModelName::Idm) {
        out.push((ModelName::Idm, eval_idm(d, &test, &cfg.idm, &cfg.labels)?));
    }
    if wants(ModelName::Lstm) {
        let o = train(&train_set, &val_set, ModelKind::Lstm, &tc)?;
        log::info!("fold {i}: LSTM best epoch {}", o.best_epoch);
        out.push((ModelName::Lstm, evaluate(&o.weights, &owned(&test), &tc)));
    }
    if wants(ModelName::BilstmReal) || wants(ModelName::BilstmIdm) {
        let o = train(&train_set, &val_set, ModelKind::BiLstm, &tc)?;
        log::info!("fold {i}: Bi-LSTM best epoch {}", o.best_epoch);
        if wants(ModelName::BilstmReal) {
            out.push((ModelName::BilstmReal, evaluate(&o.weights, &owned(&test), &tc)));
        }
        if wants(ModelName::BilstmIdm) {
            out.push((
                ModelName::BilstmIdm,
                eval_predicted(&o.weights, d, &test, &tc, &cfg.idm)?,
            ));
        }
    }
    Ok(out)
}

/// Writes `report.csv`, `summary.txt`, `report.json` and the resolved
/// `config.toml` into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<(), HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let p = dir.join("report.csv");
    report.write_csv(BufWriter::new(File::create(&p).map_err(io(&p))?))?;
    let p = dir.join("summary.txt");
    std::fs::write(&p, report.summary()).map_err(io(&p))?;
    let p = dir.join("report.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&p).map_err(io(&p))?), report)?;
    let p = dir.join("config.toml");
    std::fs::write(&p, report.config.to_toml()).map_err(io(&p))?;
    Ok(())
}
