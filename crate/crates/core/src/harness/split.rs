use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::labeling::GapSequence;
use crate::ngsim::VehicleId;

/// Unit of assignment: one vehicle track of one recording, with all its
/// maneuvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub recording: u32,
    pub vehicle_id: VehicleId,
}

impl GroupKey {
    pub fn of(s: &GapSequence) -> Self {
        Self {
            recording: s.recording,
            vehicle_id: s.vehicle_id,
        }
    }
}

/// Distinct groups of `data`, sorted.
pub fn groups_of(data: &[GapSequence]) -> Vec<GroupKey> {
    data.iter()
        .map(GroupKey::of)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    KFold { k: usize },
    Holdout { train_fraction: f64, runs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<GroupKey>,
    pub test: Vec<GroupKey>,
}

impl Fold {
    pub fn split<'a>(&self, data: &'a [GapSequence]) -> (Vec<&'a GapSequence>, Vec<&'a GapSequence>) {
        let test: BTreeSet<GroupKey> = self.test.iter().copied().collect();
        data.iter().partition(|s| !test.contains(&GroupKey::of(s)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    /// One entry per fold (k-fold) or per run (holdout).
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    /// Test fold of `g` under k-fold.
    pub fn fold_of(&self, g: &GroupKey) -> Option<usize> {
        match self.kind {
            SplitKind::KFold { .. } => self.folds.iter().position(|f| f.test.contains(g)),
            SplitKind::Holdout { .. } => None,
        }
    }
}

/// Shuffles the groups under `seed` and deals them into folds, or draws
/// independent holdout runs.
pub fn make_split(groups: &[GroupKey], kind: SplitKind, seed: u64) -> SplitPlan {
    let mut sorted: Vec<GroupKey> = groups.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let folds = match kind {
        SplitKind::KFold { k } => {
            assert!(k >= 1, "k-fold needs at least one fold");
            sorted.shuffle(&mut rng);
            let mut test: Vec<Vec<GroupKey>> = vec![Vec::new(); k];
            for (j, g) in sorted.iter().enumerate() {
                test[j % k].push(*g);
            }
            test.into_iter()
                .map(|mut t| {
                    t.sort();
                    let held: BTreeSet<GroupKey> = t.iter().copied().collect();
                    let train = groups_sorted(&sorted)
                        .into_iter()
                        .filter(|g| !held.contains(g))
                        .collect();
                    Fold { train, test: t }
                })
                .collect()
        }
        SplitKind::Holdout { train_fraction, runs } => {
            assert!((0.0..=1.0).contains(&train_fraction), "train fraction outside [0, 1]");
            let n_train = (train_fraction * sorted.len() as f64).round() as usize;
            (0..runs)
                .map(|_| {
                    let mut order = sorted.clone();
                    order.shuffle(&mut rng);
                    let (a, b) = order.split_at(n_train);
                    let (mut train, mut test) = (a.to_vec(), b.to_vec());
                    train.sort();
                    test.sort();
                    Fold { train, test }
                })
                .collect()
        }
    };
    SplitPlan { kind, seed, folds }
}

fn groups_sorted(g: &[GroupKey]) -> Vec<GroupKey> {
    let mut v = g.to_vec();
    v.sort();
    v
}

/// Moves about `fraction` of `train` (at least one group when there are two
/// or more) into a validation set.
pub fn validation_split(train: &[GroupKey], fraction: f64, seed: u64) -> (Vec<GroupKey>, Vec<GroupKey>) {
    let mut order = groups_sorted(train);
    if fraction <= 0.0 || order.len() < 2 {
        return (order, Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_val = ((fraction * order.len() as f64).round() as usize).clamp(1, order.len() - 1);
    let mut val = order.split_off(order.len() - n_val);
    order.sort();
    val.sort();
    (order, val)
}
