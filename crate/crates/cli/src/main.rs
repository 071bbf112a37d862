use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lanegap::baselines::SvmCheckpoint;
use lanegap::harness::{
    derive_seed, eval_idm, eval_predicted, eval_svm, export_timeline, fit_svm, groups_of, label_recordings, load_ngsim,
    load_store, run_dataset, run_experiment, validation_split, write_outputs, write_timeline, DataSource, Dataset,
    EvalReport, ExperimentConfig, ExperimentReport, FoldResult, GroupKey, ModelName, Scheme, SeedTag, TimelineModels,
};
use lanegap::labeling::{read_sequences, write_gap_sequences, GapSequence};
use lanegap::neural::{evaluate, train, Checkpoint, ModelKind};
use lanegap::ngsim::{write_store, FrameId, Recording, Side, Units};

#[derive(Parser)]
#[command(name = "lanegap", version, about = "Lane-change situation assessment toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainModel {
    Lstm,
    Bilstm,
    Svm,
    SvmFuture,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw trajectory files into a normalized track store.
    Ingest {
        files: Vec<PathBuf>,
        #[arg(long, default_value = "feet")]
        units: Units,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label a track store (or the config's data source) with one scheme.
    Label {
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Track store; overrides the config's data source.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on labeled sequences and write a checkpoint.
    Train {
        #[arg(long, value_enum)]
        model: TrainModel,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint, or run the SVM / IDM protocol, on labeled sequences.
    Eval {
        /// Checkpoint path, `svm`, `svm_future` or `idm`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// Track store the sequences were cut from; needed for IDM futures.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Feed a bidirectional checkpoint IDM-predicted futures.
        #[arg(long)]
        predicted: bool,
        #[arg(long, default_value = "automatic")]
        scheme: Scheme,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Per-frame outputs of a recurrent checkpoint for one track, as CSV on stdout.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        track: u32,
        #[arg(long)]
        side: Side,
        #[arg(long, default_value_t = 0)]
        recording: u32,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Ground truth, SVM decision and recurrent output over a frame window.
    ExportTimeline {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        track: u32,
        #[arg(long)]
        side: Side,
        #[arg(long, default_value_t = 0)]
        recording: u32,
        #[arg(long)]
        from: FrameId,
        #[arg(long)]
        to: FrameId,
        #[arg(long)]
        recurrent: Option<PathBuf>,
        #[arg(long)]
        svm: Option<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full protocol: label, split, train and evaluate every configured model.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn read_seqs(path: &Path) -> Result<Vec<GapSequence>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_sequences(BufReader::new(f))?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Sequences plus the scenes of `store`, if one is given.
fn dataset(data: &Path, store: Option<&Path>, scheme: Scheme) -> Result<Dataset> {
    let sequences = read_seqs(data)?;
    let scenes = match store {
        Some(p) => load_store(p)?.into_iter().map(|r| (r.id, r.scenes())).collect(),
        None => Default::default(),
    };
    Ok(Dataset {
        scheme,
        sequences,
        scenes,
    })
}

fn recordings(cfg: &ExperimentConfig, store: Option<&Path>) -> Result<Vec<Recording>> {
    if let Some(p) = store {
        return Ok(load_store(p)?);
    }
    match &cfg.data {
        DataSource::Ngsim { files, units } => Ok(load_ngsim(files, *units)?),
        DataSource::Store { path } => Ok(load_store(path)?),
        DataSource::Synthetic(_) => bail!("synthetic data is labeled on generation; use `run`"),
    }
}

fn train_val(data: &[GapSequence], cfg: &ExperimentConfig) -> (Vec<GapSequence>, Vec<GapSequence>) {
    let (train_g, _) = validation_split(
        &groups_of(data),
        cfg.split.validation_fraction,
        derive_seed(cfg.seed, SeedTag::Validation, 0),
    );
    let keep: std::collections::BTreeSet<GroupKey> = train_g.into_iter().collect();
    data.iter().cloned().partition(|s| keep.contains(&GroupKey::of(s)))
}

fn write_report(path: &Path, cfg: &ExperimentConfig, reports: Vec<EvalReport>) -> Result<()> {
    let report = ExperimentReport {
        config: cfg.clone(),
        reports,
    };
    print!("{}", report.summary());
    report.write_csv(create(path)?)?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest { files, units, out } => {
            let recs = load_ngsim(&files, units)?;
            write_store(create(&out)?, &recs)?;
            let tracks: usize = recs.iter().map(|r| r.tracks.len()).sum();
            log::info!("wrote {} recordings, {tracks} tracks to {}", recs.len(), out.display());
        }
        Command::Label {
            scheme,
            config,
            store,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let recs = recordings(&cfg, store.as_deref())?;
            let aug = (scheme == Scheme::Action && cfg.augment_action).then_some(&cfg.augment);
            let d = label_recordings(
                &recs,
                scheme,
                &cfg.layout.layout(),
                &cfg.labels,
                aug,
                derive_seed(cfg.seed, SeedTag::Augment, 0),
            );
            write_gap_sequences(create(&out)?, &d.sequences)?;
            log::info!("wrote {} sequences to {}", d.sequences.len(), out.display());
        }
        Command::Train {
            model,
            data,
            config,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let seqs = read_seqs(&data)?;
            let (tr, val) = train_val(&seqs, &cfg);
            match model {
                TrainModel::Lstm | TrainModel::Bilstm => {
                    let kind = if matches!(model, TrainModel::Lstm) {
                        ModelKind::Lstm
                    } else {
                        ModelKind::BiLstm
                    };
                    let o = train(&tr, &val, kind, &cfg.train)?;
                    log::info!("best epoch {} of {}", o.best_epoch, o.history.len());
                    Checkpoint::new(o.weights, cfg.train).write(create(&out)?)?;
                }
                TrainModel::Svm | TrainModel::SvmFuture => {
                    let offsets = if matches!(model, TrainModel::SvmFuture) {
                        cfg.svm.future_offsets()
                    } else {
                        Vec::new()
                    };
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SeedTag::Sampling, 0));
                    let tr: Vec<&GapSequence> = tr.iter().collect();
                    let val: Vec<&GapSequence> = val.iter().collect();
                    let fit = fit_svm(&tr, &val, &offsets, cfg.svm.frame_stride, &cfg.svm, &mut rng)?;
                    log::info!("C={} gamma={} validation {:.4}", fit.c, fit.gamma, fit.validation_acc);
                    SvmCheckpoint::new(fit.model, offsets).write(create(&out)?)?;
                }
            }
            log::info!("wrote {}", out.display());
        }
        Command::Eval {
            model,
            data,
            store,
            predicted,
            scheme,
            config,
            report,
        } => {
            let cfg = load_config(config.as_deref())?;
            let d = dataset(&data, store.as_deref(), scheme)?;
            let all: Vec<&GapSequence> = d.sequences.iter().collect();
            let reports = match model.parse::<ModelName>() {
                Ok(m @ (ModelName::Svm | ModelName::SvmFuture)) => run_dataset(
                    &d,
                    &ExperimentConfig {
                        models: vec![m],
                        ..cfg.clone()
                    },
                )?,
                Ok(ModelName::Idm) => {
                    let c = eval_idm(&d, &all, &cfg.idm, &cfg.labels)?;
                    vec![EvalReport::from_folds(
                        scheme,
                        ModelName::Idm,
                        vec![FoldResult::new(0, c)?],
                    )]
                }
                Ok(other) => bail!("`{}` needs training; pass a checkpoint path", other.key()),
                Err(_) => {
                    let path = PathBuf::from(&model);
                    let text = std::fs::read(&path).with_context(|| format!("reading {model}"))?;
                    if let Ok(ck) = Checkpoint::read(text.as_slice()) {
                        let (name, c) = match (ck.weights.is_bidirectional(), predicted) {
                            (false, _) => (ModelName::Lstm, evaluate(&ck.weights, &d.sequences, &ck.train_config)),
                            (true, false) => (
                                ModelName::BilstmReal,
                                evaluate(&ck.weights, &d.sequences, &ck.train_config),
                            ),
                            (true, true) => (
                                ModelName::BilstmIdm,
                                eval_predicted(&ck.weights, &d, &all, &ck.train_config, &cfg.idm)?,
                            ),
                        };
                        vec![EvalReport::from_folds(scheme, name, vec![FoldResult::new(0, c)?])]
                    } else {
                        let ck = SvmCheckpoint::read(text.as_slice())
                            .with_context(|| format!("{model} is neither a recurrent nor an SVM checkpoint"))?;
                        let name = if ck.future_offsets.is_empty() {
                            ModelName::Svm
                        } else {
                            ModelName::SvmFuture
                        };
                        let c = eval_svm(&ck.model, &ck.future_offsets, &all);
                        vec![EvalReport::from_folds(scheme, name, vec![FoldResult::new(0, c)?])]
                    }
                }
            };
            write_report(&report, &cfg, reports)?;
        }
        Command::Predict {
            model,
            data,
            track,
            side,
            recording,
            store,
        } => {
            let ck = Checkpoint::read(BufReader::new(File::open(&model)?))?;
            let d = dataset(&data, store.as_deref(), Scheme::Automatic)?;
            let idm = lanegap::idm::IdmConfig::default();
            let models = TimelineModels {
                svm: None,
                recurrent: Some(&ck.weights),
                predictor: store.is_some().then_some(&idm as _),
                block_frames: ck.train_config.block_frames(),
            };
            let rows = export_timeline(&d, recording, track, side, FrameId::MIN..=FrameId::MAX, &models)?;
            if rows.is_empty() {
                bail!("no {side} sequence of track {track} in recording {recording}");
            }
            write_timeline(std::io::stdout().lock(), &rows)?;
        }
        Command::ExportTimeline {
            data,
            track,
            side,
            recording,
            from,
            to,
            recurrent,
            svm,
            store,
            out,
        } => {
            let d = dataset(&data, store.as_deref(), Scheme::Automatic)?;
            let rec = recurrent
                .map(|p| Checkpoint::read(BufReader::new(File::open(p)?)).map_err(anyhow::Error::from))
                .transpose()?;
            let svm = svm
                .map(|p| SvmCheckpoint::read(BufReader::new(File::open(p)?)).map_err(anyhow::Error::from))
                .transpose()?;
            let idm = lanegap::idm::IdmConfig::default();
            let models = TimelineModels {
                svm: svm.as_ref().map(|s| (&s.model, s.future_offsets.as_slice())),
                recurrent: rec.as_ref().map(|c| &c.weights),
                predictor: store.is_some().then_some(&idm as _),
                block_frames: rec.as_ref().map_or(1, |c| c.train_config.block_frames()),
            };
            let rows = export_timeline(&d, recording, track, side, from..=to, &models)?;
            write_timeline(create(&out)?, &rows)?;
            log::info!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg)?;
            write_outputs(&report, &cfg.output_dir)?;
            print!("{}", report.summary());
        }
        Command::DefaultConfig => print!("{}", ExperimentConfig::default().to_toml()),
    }
    Ok(())
}
