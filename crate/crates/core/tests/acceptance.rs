//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero when any criterion fails.
//!
//! Criteria 3 and 4 need the NGSIM trajectory files. Set `LANEGAP_NGSIM_FILES`
//! to a list of paths separated by the platform path separator, and
//! optionally `LANEGAP_NGSIM_UNITS` (`feet` by default).
//! `LANEGAP_ACCEPTANCE_CRITERIA=1,2` restricts the run to the listed criteria.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lanegap::baselines::{kkt_gap, svm_fit, svm_predict, SvmParams};
use lanegap::grid::{encode_gaps, GRID_CELLS};
use lanegap::harness::synthetic::SyntheticConfig;
use lanegap::harness::*;
use lanegap::idm::{idm_accel, rollout, step_scene, Behavior, IdmConfig, IdmParams, Leader, SimVehicle};
use lanegap::labeling::{
    agreement, automatic_label, filter_pair, label_map, situation_distances, FilterParams, LabelConfig,
};
use lanegap::linalg::Matrix;
use lanegap::metrics::average_accuracy;
use lanegap::neural::{
    evaluate, forward_bidir, loss, loss_and_gradient, make_samples, train, LossConfig, ModelKind, ModelWeights,
    TrainConfig, TrainSample,
};
use lanegap::ngsim::{build_scenes, Gaps, LaneLayout, Role, Side, Units};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

const PROPERTY_BUDGET: Duration = Duration::from_secs(5 * 60);
const BENCHMARK_BUDGET: Duration = Duration::from_secs(30 * 60);
const BENCHMARK_SEED: u64 = 20190;

type Check = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn report(&mut self, name: &str, result: Check) -> bool {
        match result {
            Ok(detail) => {
                println!("PASS  {name}: {detail}");
                true
            }
            Err(detail) => {
                println!("FAIL  {name}: {detail}");
                self.failures += 1;
                false
            }
        }
    }

    fn run(&mut self, name: &str, f: impl FnOnce() -> Check) -> bool {
        let t = Instant::now();
        let r = f().map(|d| format!("{d} ({:.1} s)", t.elapsed().as_secs_f64()));
        self.report(name, r)
    }

    fn skip(&self, name: &str, why: &str) {
        println!("SKIP  {name}: {why}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaps(d: [f64; 4]) -> Gaps {
    Gaps {
        distance: d,
        rel_speed: [0.0; 4],
    }
}

// ---------------------------------------------------------------------------
// criterion 1

fn idm_equilibrium() -> Check {
    let p = IdmParams::default();
    let mut worst: f64 = 0.0;
    for v in [5.0, 10.0, 15.0, 20.0, 25.0] {
        let s_eq = (p.min_spacing + v * p.time_headway) / (1.0 - (v / p.desired_speed).powf(p.exponent)).sqrt();
        let leader = Leader {
            pos: s_eq,
            speed: v,
            length: 0.0,
        };
        let a = idm_accel(0.0, v, Some(leader), &p).map_err(|e| e.to_string())?;
        worst = worst.max(a.abs());
    }
    ensure(worst < 1e-9, || format!("max |accel| {worst:e}"))?;
    Ok(format!("max |accel| {worst:.1e} < 1e-9"))
}

fn idm_convergence() -> Check {
    let p = IdmParams::default();
    let mut cars = vec![SimVehicle {
        pos: 0.0,
        speed: 0.0,
        length: 5.0,
        params: p,
        behavior: Behavior::Idm { leader: None },
    }];
    let mut steps = 0;
    while (cars[0].speed - p.desired_speed).abs() >= 0.01 {
        ensure(steps < 2000, || format!("speed {} after 200 s", cars[0].speed))?;
        cars = step_scene(&cars, 0.1);
        steps += 1;
    }
    Ok(format!("within 0.01 m/s of v0 after {:.1} s", steps as f64 * 0.1))
}

/// 1000 rollouts of 10 s from scenes of the synthetic generator, each with
/// freshly drawn speeds and gaps.
fn idm_collision_free() -> Check {
    let data = lanegap::harness::synthetic::generate(
        &SyntheticConfig {
            sequences: 50,
            frames: 120,
            ..SyntheticConfig::default()
        },
        &LabelConfig::default(),
        3,
    );
    let obs: Vec<_> = data
        .sequences
        .iter()
        .flat_map(|s| data.observations(s).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = IdmConfig::default();
    for trial in 0..1000 {
        let mut o = obs[rng.gen_range(0..obs.len())].clone();
        o.context.ego.speed = rng.gen_range(0.0..35.0);
        for f in o.context.neighbors.iter_mut().flatten() {
            f.speed = rng.gen_range(0.0..35.0);
        }
        let pred = rollout(&o, &cfg, 100);
        for c in &pred.contexts {
            let ego = c.ego;
            let ahead = |f: Option<&lanegap::ngsim::TrajectoryFrame>| {
                f.is_none_or(|f| f.longitudinal_pos - f.length - ego.longitudinal_pos > 0.0)
            };
            let behind = |f: Option<&lanegap::ngsim::TrajectoryFrame>| {
                f.is_none_or(|f| ego.longitudinal_pos - ego.length - f.longitudinal_pos > 0.0)
            };
            let target = match (c.plv(), c.pfv()) {
                (Some(l), Some(f)) => l.longitudinal_pos - l.length - f.longitudinal_pos > 0.0,
                _ => true,
            };
            let speeds = [Some(&ego), c.pv(), c.rv(), c.plv(), c.pfv()]
                .into_iter()
                .flatten()
                .all(|f| f.speed >= 0.0 && f.speed.is_finite());
            ensure(ahead(c.pv()) && behind(c.rv()) && target && speeds, || {
                format!("trial {trial}, frame {}", c.frame_id)
            })?;
        }
    }
    Ok("1000 rollouts of 100 steps".into())
}

fn random_grid(rng: &mut ChaCha8Rng) -> lanegap::grid::OccupancyGrid {
    let mut g = Gaps::EMPTY;
    for k in 0..4 {
        if rng.gen_bool(0.85) {
            g.distance[k] = rng.gen_range(0.0..105.0);
        }
    }
    encode_gaps(&g)
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> TrainSample {
    use lanegap::labeling::Label;
    TrainSample {
        grids: (0..n).map(|_| random_grid(rng)).collect(),
        labels: (0..n)
            .map(|_| match rng.gen_range(0..5) {
                0 => Label::Ignore,
                1 | 2 => Label::Positive,
                _ => Label::Negative,
            })
            .collect(),
    }
}

fn random_model(kind: ModelKind, rng: &mut ChaCha8Rng) -> ModelWeights {
    let mut w = ModelWeights::init(kind, 2, 4, 0.6, 0.8, rng);
    w.output_weight = Matrix::from_fn(2, w.output_weight.cols(), |_, _| rng.gen_range(-1.0..1.0));
    w.output_bias = vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    w
}

/// Largest relative error of the analytic gradient against central
/// differences, over every entry of every tensor.
fn gradient_error(kind: ModelKind, seed: u64, block_frames: usize) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_model(kind, &mut rng);
    let batch = vec![random_sample(&mut rng, 5), random_sample(&mut rng, 8)];
    let cfg = LossConfig {
        l2: 0.01,
        class_weights: [0.8, 1.3],
        block_frames,
    };
    let (_, grad) = loss_and_gradient(&w, &batch, &cfg);
    let analytic: Vec<(String, Vec<f64>)> = grad
        .tensors()
        .iter()
        .map(|t| (t.name.to_string(), t.data.to_vec()))
        .collect();
    let eps = 1e-5;
    let mut worst = (0.0, String::new());
    for (ti, (name, values)) in analytic.iter().enumerate() {
        for (k, &a) in values.iter().enumerate() {
            let mut wp = w.clone();
            wp.tensors_mut()[ti][k] += eps;
            let mut wm = w.clone();
            wm.tensors_mut()[ti][k] -= eps;
            let numeric = (loss(&wp, &batch, &cfg) - loss(&wm, &batch, &cfg)) / (2.0 * eps);
            let denom = a.abs().max(numeric.abs());
            let rel = if denom < 1e-7 {
                (a - numeric).abs()
            } else {
                (a - numeric).abs() / denom
            };
            if rel > worst.0 {
                worst = (rel, name.clone());
            }
        }
    }
    worst
}

fn gradient_checks() -> Check {
    let mut lines = Vec::new();
    for (kind, block) in [(ModelKind::Lstm, 1), (ModelKind::BiLstm, 3), (ModelKind::BiLstm, 100)] {
        for seed in 0..3 {
            let (err, name) = gradient_error(kind, seed, block);
            ensure(err < 1e-4, || {
                format!("{kind:?} seed {seed}: {name} has relative error {err:e}")
            })?;
            lines.push(err);
        }
    }
    let worst = lines.iter().cloned().fold(0.0, f64::max);
    Ok(format!("max relative error {worst:.1e} < 1e-4"))
}

fn reset_block_independence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..100 {
        let w = ModelWeights::init(ModelKind::BiLstm, 3, 5, 0.6, 0.8, &mut rng);
        let mut w = w;
        w.output_weight = Matrix::from_fn(2, w.output_weight.cols(), |_, _| rng.gen_range(-1.0..1.0));
        let n: usize = rng.gen_range(2..60);
        let block: usize = rng.gen_range(1..15);
        let seq: Vec<_> = (0..n).map(|_| random_grid(&mut rng)).collect();
        let mut perturbed = seq.clone();
        let t = rng.gen_range(0..n);
        let cut = (t / block + 1) * block;
        for g in perturbed.iter_mut().skip(cut) {
            *g = random_grid(&mut rng);
        }
        let a = forward_bidir(&seq, &w, block);
        let b = forward_bidir(&perturbed, &w, block);
        for i in 0..cut.min(n) {
            let same = a[i]
                .probs
                .iter()
                .zip(&b[i].probs)
                .all(|(x, y)| x.to_bits() == y.to_bits());
            ensure(same, || {
                format!("trial {trial}: frame {i} changed, block {block}, cut {cut}")
            })?;
        }
    }
    Ok("100 trials bitwise identical".into())
}

fn automatic_label_oracle() -> Check {
    let cfg = LabelConfig::default();
    let layout = LaneLayout::ngsim();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut labels = 0;
    for scene in 0..1000 {
        let tracks = common::random_tracks(&mut rng);
        let scenes = build_scenes(&tracks);
        for side in Side::BOTH {
            let got = automatic_label(&tracks[0], &scenes, side, &layout, &cfg);
            let want = common::oracle_labels(&tracks[0], &scenes, side, &cfg);
            ensure(got == want, || format!("scene {scene}, side {side}"))?;
            labels += got.len();
        }
    }
    Ok(format!("1000 scenes, {labels} labels identical"))
}

fn stated_examples() -> Check {
    let acc = |p: &[u8], l: &[u8]| average_accuracy(p, l).map(|a| (a.acc_p, a.acc_n, a.acc));
    ensure(acc(&[1, 0, 1, 0], &[1, 0, 1, 0]) == Ok((1.0, 1.0, 1.0)), || {
        "all correct".into()
    })?;
    ensure(acc(&[1; 6], &[1, 0, 0, 1, 0, 1]) == Ok((1.0, 0.0, 0.5)), || {
        "all-positive predictor".into()
    })?;
    let labels: Vec<u8> = [[1u8; 10].as_slice(), &[0; 5]].concat();
    let preds: Vec<u8> = [[1u8; 9].as_slice(), &[0], &[0, 0, 0, 1, 1]].concat();
    ensure(acc(&preds, &labels) == Ok((0.9, 0.6, 0.75)), || {
        "counting example".into()
    })?;

    let inf = f64::INFINITY;
    let g = encode_gaps(&gaps([25.0, inf, inf, inf]));
    let mut want = [0u8; GRID_CELLS];
    want[2] = 1;
    ensure(g.part(Role::Pv) == &want, || "d_pv = 25 m".into())?;
    let g = encode_gaps(&gaps([inf, inf, 105.0, inf]));
    ensure(g.part(Role::Plv) == &[0; GRID_CELLS], || "d_plv = 105 m".into())?;
    ensure(encode_gaps(&Gaps::EMPTY).is_empty(), || "all absent".into())?;

    let p = FilterParams::default();
    let q = |d| situation_distances(&gaps(d), &p).map(|q| (q.ad, q.sd));
    ensure(q([30.0, 20.0, 40.0, 25.0]) == Ok((180.0, -180.0)), || "ad 180".into())?;
    ensure(q([50.0, 30.0, 60.0, 40.0]) == Ok((280.0, -280.0)), || "ad 280".into())?;
    ensure(q([0.0; 4]) == Ok((0.0, 0.0)), || "zero case".into())?;
    let n = gaps([30.0, 20.0, 40.0, 25.0]);
    ensure(filter_pair(&n, &gaps([50.0, 30.0, 60.0, 40.0]), &p) == Ok(true), || {
        "180 -> 280".into()
    })?;
    ensure(
        filter_pair(&n, &gaps([30.0, 40.0, 40.0, 25.0]), &p) == Ok(false),
        || "180 -> 200".into(),
    )?;
    ensure(filter_pair(&n, &n, &p) == Ok(false), || "identical contexts".into())?;
    Ok("metric, grid and filter examples exact".into())
}

fn svm_toys() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..80 {
        let (cx, label) = if i % 2 == 0 { (-2.0, -1) } else { (2.0, 1) };
        x.push(vec![cx + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        y.push(label);
    }
    let xor_x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let xor_y = vec![-1, -1, 1, 1];
    let mut gaps_seen = Vec::new();
    for (name, x, y, params) in [
        (
            "separable",
            &x,
            &y,
            SvmParams {
                c: 10.0,
                gamma: 0.5,
                tolerance: 1e-3,
            },
        ),
        (
            "xor",
            &xor_x,
            &xor_y,
            SvmParams {
                c: 100.0,
                gamma: 1.0,
                tolerance: 1e-3,
            },
        ),
    ] {
        let fit = svm_fit(x, y, &params).map_err(|e| format!("{name}: {e}"))?;
        let correct = x
            .iter()
            .zip(y.iter())
            .filter(|(r, &l)| svm_predict(&fit.model, r) == u8::from(l > 0))
            .count();
        ensure(correct == x.len(), || format!("{name}: {correct}/{} correct", x.len()))?;
        let xs: Vec<Vec<f64>> = x.iter().map(|r| fit.model.standardizer.transform(r)).collect();
        let gap = kkt_gap(&xs, y, &fit.alpha, params.gamma, params.c);
        ensure(gap <= params.tolerance, || format!("{name}: KKT violation {gap:e}"))?;
        ensure(fit.alpha.iter().all(|a| (0.0..=params.c).contains(a)), || {
            format!("{name}: box constraint")
        })?;
        gaps_seen.push(gap);
    }
    Ok(format!(
        "100% on both toys, KKT violation ≤ {:.1e}",
        gaps_seen.iter().cloned().fold(0.0, f64::max)
    ))
}

fn criterion_1(suite: &mut Suite) {
    let t = Instant::now();
    let checks: [(&str, fn() -> Check); 8] = [
        ("1a IDM equilibrium", idm_equilibrium),
        ("1b IDM free-road convergence", idm_convergence),
        ("1c IDM rollouts collision-free", idm_collision_free),
        ("1d LSTM and Bi-LSTM gradient checks", gradient_checks),
        ("1e Bi-LSTM reset-block independence", reset_block_independence),
        ("1f automatic labels against the direct oracle", automatic_label_oracle),
        ("1g metric, grid and filter examples", stated_examples),
        ("1h SMO on separable and XOR toys", svm_toys),
    ];
    let mut ok = true;
    for (name, f) in checks {
        ok &= suite.run(name, f);
    }
    let elapsed = t.elapsed();
    let r = if !ok {
        Err("a property check failed".to_string())
    } else if elapsed > PROPERTY_BUDGET {
        Err(format!(
            "took {:.0} s, budget {} s",
            elapsed.as_secs_f64(),
            PROPERTY_BUDGET.as_secs()
        ))
    } else {
        Ok(format!("all checks in {:.1} s", elapsed.as_secs_f64()))
    };
    suite.report("1  property suite", r);
}

// ---------------------------------------------------------------------------
// criterion 2

/// The seed-fixed synthetic benchmark.
pub fn benchmark_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        seed: BENCHMARK_SEED,
        ..ExperimentConfig::default()
    };
    cfg.data = DataSource::Synthetic(SyntheticConfig {
        sequences: 2000,
        speed_noise: 4.0,
        ..SyntheticConfig::default()
    });
    cfg.models = ModelName::ALL.to_vec();
    cfg.labels.min_time_gap = 1.0;
    cfg.train.hidden = 32;
    cfg.train.embed_dim = 8;
    cfg.train.epochs = 30;
    cfg.train.t_b = 1.5;
    cfg.train.class_weights = true;
    cfg.svm.per_class = 500;
    cfg.split.max_folds = 1;
    cfg.split.holdout_runs = 1;
    cfg
}

fn criterion_2(suite: &mut Suite) {
    let t = Instant::now();
    let cfg = benchmark_config();
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            suite.report("2  synthetic benchmark", Err(e.to_string()));
            return;
        }
    };
    let acc = |m: ModelName| report.get(Scheme::Automatic, m).map_or(f64::NAN, |r| r.acc);
    for m in ModelName::ALL {
        println!("      {:>9}  acc {:.4}", m.label(), acc(m));
    }
    let (bi_real, bi_idm, lstm, svm) = (
        acc(ModelName::BilstmReal),
        acc(ModelName::BilstmIdm),
        acc(ModelName::Lstm),
        acc(ModelName::Svm),
    );
    let mut ok = true;
    ok &= suite.report(
        "2a Bi-LSTM* ≥ Bi-LSTM",
        if bi_real >= bi_idm {
            Ok(format!("{bi_real:.4} ≥ {bi_idm:.4}"))
        } else {
            Err(format!("{bi_real:.4} < {bi_idm:.4}"))
        },
    );
    ok &= suite.report(
        "2b Bi-LSTM ≥ LSTM − 0.02",
        if bi_idm >= lstm - 0.02 {
            Ok(format!("{bi_idm:.4} ≥ {:.4}", lstm - 0.02))
        } else {
            Err(format!("{bi_idm:.4} < {:.4}", lstm - 0.02))
        },
    );
    ok &= suite.report(
        "2c LSTM > SVM",
        if lstm > svm {
            Ok(format!("{lstm:.4} > {svm:.4}"))
        } else {
            Err(format!("{lstm:.4} ≤ {svm:.4}"))
        },
    );
    let learned = [
        ModelName::Svm,
        ModelName::SvmFuture,
        ModelName::Lstm,
        ModelName::BilstmReal,
        ModelName::BilstmIdm,
    ];
    let low: Vec<String> = learned
        .iter()
        .filter(|&&m| !(acc(m) > 0.6))
        .map(|m| format!("{} {:.4}", m.label(), acc(*m)))
        .collect();
    ok &= suite.report(
        "2d every learned model > 0.6",
        if low.is_empty() {
            Ok(format!(
                "min {:.4}",
                learned.iter().map(|&m| acc(m)).fold(1.0, f64::min)
            ))
        } else {
            Err(low.join(", "))
        },
    );
    ok &= suite.run("2e Bi-LSTM* training accuracy on 20 sequences ≥ 0.99", overfit);
    let elapsed = t.elapsed();
    let r = if !ok {
        Err("an ordering or sanity check failed".to_string())
    } else if elapsed > BENCHMARK_BUDGET {
        Err(format!(
            "took {:.0} s, budget {} s",
            elapsed.as_secs_f64(),
            BENCHMARK_BUDGET.as_secs()
        ))
    } else {
        Ok(format!("benchmark in {:.0} s", elapsed.as_secs_f64()))
    };
    suite.report("2  synthetic benchmark", r);
}

/// Training accuracy of the Bi-LSTM given the real future, on a 20-sequence
/// subset of the benchmark data. The LSTM is reported alongside together
/// with the best accuracy any causal model can reach on the same frames:
/// frames whose grid history since the window start is identical but whose
/// labels differ cannot all be fit without the future.
fn overfit() -> Check {
    let mut cfg = benchmark_config();
    if let DataSource::Synthetic(s) = &mut cfg.data {
        s.sequences = 20;
    }
    let data = prepare_datasets(&cfg).map_err(|e| e.to_string())?.remove(0);
    let train_cfg = TrainConfig {
        epochs: 200,
        learning_rate: 5e-3,
        l2: 0.0,
        patience: 0,
        ..cfg.train
    };
    let fit = |kind| -> Result<f64, String> {
        let outcome = train(&data.sequences, &data.sequences, kind, &train_cfg).map_err(|e| e.to_string())?;
        let acc = evaluate(&outcome.weights, &data.sequences, &train_cfg).accuracy();
        acc.map(|a| a.acc).map_err(|e| e.to_string())
    };
    let bi = fit(ModelKind::BiLstm)?;
    let lstm = fit(ModelKind::Lstm)?;
    let bound = causal_bound(&data.sequences, train_cfg.window_frames());
    let detail = format!("Bi-LSTM {bi:.4}; LSTM {lstm:.4}, causal plain-accuracy bound {bound:.4}");
    ensure(bi >= 0.99, || detail.clone())?;
    Ok(detail)
}

fn causal_bound(data: &[lanegap::labeling::GapSequence], window: usize) -> f64 {
    let mut groups: HashMap<Vec<String>, [usize; 2]> = HashMap::new();
    for s in make_samples(data, window) {
        let mut history = Vec::new();
        for (g, l) in s.grids.iter().zip(&s.labels) {
            history.push(g.to_bit_rows());
            if let Some(c) = l.class() {
                groups.entry(history.clone()).or_default()[c] += 1;
            }
        }
    }
    let best: usize = groups.values().map(|c| c[0].max(c[1])).sum();
    let total: usize = groups.values().map(|c| c[0] + c[1]).sum();
    best as f64 / total as f64
}

// ---------------------------------------------------------------------------
// criteria 3 and 4

fn ngsim_files() -> Option<(Vec<PathBuf>, Units)> {
    let files = std::env::var_os("LANEGAP_NGSIM_FILES")?;
    let files: Vec<PathBuf> = std::env::split_paths(&files)
        .filter(|p| !p.as_os_str().is_empty())
        .collect();
    if files.is_empty() {
        return None;
    }
    let units = match std::env::var("LANEGAP_NGSIM_UNITS").as_deref() {
        Ok("meters") => Units::Meters,
        _ => Units::Feet,
    };
    Some((files, units))
}

const TABLE: [(Scheme, ModelName, f64); 11] = [
    (Scheme::Action, ModelName::Svm, 77.24),
    (Scheme::Action, ModelName::SvmFuture, 78.62),
    (Scheme::Action, ModelName::Lstm, 88.76),
    (Scheme::Action, ModelName::BilstmReal, 92.59),
    (Scheme::Action, ModelName::BilstmIdm, 88.19),
    (Scheme::Automatic, ModelName::Idm, 61.10),
    (Scheme::Automatic, ModelName::Svm, 80.70),
    (Scheme::Automatic, ModelName::SvmFuture, 57.90),
    (Scheme::Automatic, ModelName::Lstm, 83.08),
    (Scheme::Automatic, ModelName::BilstmReal, 88.49),
    (Scheme::Automatic, ModelName::BilstmIdm, 87.03),
];

fn criterion_3(suite: &mut Suite, files: &[PathBuf], units: Units) {
    let cfg = ExperimentConfig {
        data: DataSource::Ngsim {
            files: files.to_vec(),
            units,
        },
        ..ExperimentConfig::default()
    };
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            suite.report("3  NGSIM reproduction", Err(e.to_string()));
            return;
        }
    };
    let acc = |s: Scheme, m: ModelName| report.get(s, m).map_or(f64::NAN, |r| 100.0 * r.acc);
    let mut ok = true;
    for s in [Scheme::Action, Scheme::Automatic] {
        let (lstm, svm) = (acc(s, ModelName::Lstm), acc(s, ModelName::Svm));
        ok &= suite.report(
            &format!("3a {} LSTM beats SVM by ≥ 5 points", s.as_str()),
            if lstm - svm >= 5.0 {
                Ok(format!("{lstm:.2} vs {svm:.2}"))
            } else {
                Err(format!("{lstm:.2} vs {svm:.2}"))
            },
        );
        let best = acc(s, ModelName::BilstmReal);
        let others = [ModelName::Lstm, ModelName::BilstmIdm].map(|m| acc(s, m));
        ok &= suite.report(
            &format!("3a {} Bi-LSTM* best recurrent model", s.as_str()),
            if others.iter().all(|&o| best >= o) {
                Ok(format!("{best:.2} vs {others:.2?}"))
            } else {
                Err(format!("{best:.2} vs {others:.2?}"))
            },
        );
    }
    let idm = acc(Scheme::Automatic, ModelName::Idm);
    let rest: Vec<f64> = TABLE
        .iter()
        .filter(|(s, m, _)| *s == Scheme::Automatic && *m != ModelName::Idm)
        .map(|&(s, m, _)| acc(s, m))
        .collect();
    ok &= suite.report(
        "3a automatic IDM-only worst",
        if rest.iter().all(|&r| idm <= r) {
            Ok(format!("{idm:.2} vs {rest:.2?}"))
        } else {
            Err(format!("{idm:.2} vs {rest:.2?}"))
        },
    );
    for (s, m, target) in TABLE {
        let got = acc(s, m);
        let msg = format!("{got:.2} vs {target:.2}");
        ok &= suite.report(
            &format!("3b {} {} within ±5 points", s.as_str(), m.label()),
            if (got - target).abs() <= 5.0 { Ok(msg) } else { Err(msg) },
        );
    }
    suite.report(
        "3  NGSIM reproduction",
        if ok {
            Ok("all cells".into())
        } else {
            Err("see above".into())
        },
    );
}

fn criterion_4(suite: &mut Suite, files: &[PathBuf], units: Units) {
    let cfg = ExperimentConfig {
        data: DataSource::Ngsim {
            files: files.to_vec(),
            units,
        },
        augment_action: false,
        ..ExperimentConfig::default()
    };
    let r = prepare_datasets(&cfg).map_err(|e| e.to_string()).and_then(|d| {
        let action = d
            .iter()
            .find(|d| d.scheme == Scheme::Action)
            .ok_or("no action-based dataset")?;
        let auto = d
            .iter()
            .find(|d| d.scheme == Scheme::Automatic)
            .ok_or("no automatic dataset")?;
        let a = agreement(&label_map(&action.sequences), &label_map(&auto.sequences)).ok_or("no shared frames")?;
        let msg = format!("agreement {a:.3}");
        if (0.70..=0.80).contains(&a) {
            Ok(msg)
        } else {
            Err(msg)
        }
    });
    suite.report("4  labeling agreement in 0.70–0.80", r);
}

fn selected(n: u32) -> bool {
    match std::env::var("LANEGAP_ACCEPTANCE_CRITERIA") {
        Ok(list) => list.split(',').any(|c| c.trim() == n.to_string()),
        Err(_) => true,
    }
}

fn main() -> ExitCode {
    let mut suite = Suite { failures: 0 };
    let not_selected = "not selected in LANEGAP_ACCEPTANCE_CRITERIA";
    if selected(1) {
        criterion_1(&mut suite);
    } else {
        suite.skip("1  property suite", not_selected);
    }
    if selected(2) {
        criterion_2(&mut suite);
    } else {
        suite.skip("2  synthetic benchmark", not_selected);
    }
    match ngsim_files() {
        Some((files, units)) => {
            if selected(4) {
                criterion_4(&mut suite, &files, units);
            }
            if selected(3) {
                criterion_3(&mut suite, &files, units);
            }
        }
        None => {
            suite.skip("3  NGSIM reproduction", "LANEGAP_NGSIM_FILES not set");
            suite.skip("4  labeling agreement", "LANEGAP_NGSIM_FILES not set");
        }
    }
    if suite.failures == 0 {
        println!("acceptance: no failures");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} check(s) failed", suite.failures);
        ExitCode::FAILURE
    }
}
