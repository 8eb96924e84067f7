use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Trial;
use crate::error::{contract_err, Result};

/// Assignment of whole trials to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, trial_id: &str) -> Option<usize> {
        self.assignment.get(trial_id).copied()
    }

    pub fn held_out(&self, fold: usize) -> BTreeSet<&str> {
        self.assignment.iter().filter(|(_, &f)| f == fold).map(|(id, _)| id.as_str()).collect()
    }

    /// `(training, held-out)` trials of `fold`, each in input order.
    pub fn split<'a>(&self, trials: &'a [Trial], fold: usize) -> (Vec<&'a Trial>, Vec<&'a Trial>) {
        trials.iter().partition(|t| self.fold_of(&t.id) != Some(fold))
    }

    /// Trial counts indexed `[fold][class]`.
    pub fn class_counts(&self, trials: &[Trial], num_classes: usize) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; num_classes]; self.k];
        for t in trials {
            if let Some(f) = self.fold_of(&t.id) {
                counts[f][t.label] += 1;
            }
        }
        counts
    }
}

/// Class-stratified k-fold over trials: each class's trials are shuffled with
/// `seed` and dealt round-robin into the folds. The dealing cursor carries
/// over between classes so fold totals stay balanced as well.
pub fn stratified_trial_kfold(trials: &[Trial], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return contract_err(format!("need at least 2 folds, got {k}"));
    }
    let mut by_class: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for t in trials {
        by_class.entry(t.label).or_default().push(&t.id);
    }
    if let Some((label, ids)) = by_class.iter().find(|(_, ids)| ids.len() < k) {
        return contract_err(format!("class {label} has {} trials, fewer than {k} folds", ids.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut cursor = 0;
    for ids in by_class.values_mut() {
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            if assignment.insert(id.to_string(), cursor % k).is_some() {
                return contract_err(format!("duplicate trial id `{id}`"));
            }
            cursor += 1;
        }
    }
    Ok(FoldPlan { k, seed, assignment })
}
