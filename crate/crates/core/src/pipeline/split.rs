//! Sentence-disjoint train/valid/test splitting.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;

use super::{PairSet, PipelineError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitConfig {
    pub valid_size: usize,
    pub test_size: usize,
    pub shuffle_seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            valid_size: 10_000,
            test_size: 10_000,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: PairSet,
    pub valid: PairSet,
    pub test: PairSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

/// Which split each sentence goes to, and the resulting pair counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub assignment: HashMap<u64, SplitName>,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Assigns whole sentence groups to splits. Groups are visited in a seeded
/// shuffle; each goes to valid if it still fits there, else to test if it
/// fits there, else to train. Both held-out splits must end up exactly full.
pub fn plan_split(groups: &[(u64, usize)], cfg: &SplitConfig) -> Result<SplitPlan, PipelineError> {
    let total: usize = groups.iter().map(|g| g.1).sum();
    if cfg.valid_size + cfg.test_size >= total {
        return Err(PipelineError::InvalidSplit(format!(
            "valid ({}) + test ({}) must be smaller than the {total} pairs available",
            cfg.valid_size, cfg.test_size
        )));
    }
    let mut order: Vec<(u64, usize)> = groups.to_vec();
    order.sort_unstable();
    order.shuffle(&mut seed::rng(cfg.shuffle_seed));

    let mut plan = SplitPlan {
        assignment: HashMap::with_capacity(order.len()),
        train: 0,
        valid: 0,
        test: 0,
    };
    for (sentence_id, size) in order {
        let name = if plan.valid + size <= cfg.valid_size {
            plan.valid += size;
            SplitName::Valid
        } else if plan.test + size <= cfg.test_size {
            plan.test += size;
            SplitName::Test
        } else {
            plan.train += size;
            SplitName::Train
        };
        plan.assignment.insert(sentence_id, name);
    }
    for (split, requested, reached) in [
        ("valid", cfg.valid_size, plan.valid),
        ("test", cfg.test_size, plan.test),
    ] {
        if reached != requested {
            return Err(PipelineError::SplitShortfall {
                split,
                requested,
                reached,
            });
        }
    }
    Ok(plan)
}

/// Splits a pair set so that no sentence appears in more than one split.
/// Each output keeps the input's order.
pub fn split_dataset(pairs: &PairSet, cfg: &SplitConfig) -> Result<Splits, PipelineError> {
    let mut groups: BTreeMap<u64, usize> = BTreeMap::new();
    for p in &pairs.pairs {
        *groups.entry(p.sentence_id).or_default() += 1;
    }
    let groups: Vec<(u64, usize)> = groups.into_iter().collect();
    let plan = plan_split(&groups, cfg)?;
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for p in &pairs.pairs {
        match plan.assignment[&p.sentence_id] {
            SplitName::Train => train.push(p.clone()),
            SplitName::Valid => valid.push(p.clone()),
            SplitName::Test => test.push(p.clone()),
        }
    }
    Ok(Splits {
        train: pairs.with_pairs(train),
        valid: pairs.with_pairs(valid),
        test: pairs.with_pairs(test),
    })
}

/// Stream label the CLI uses to derive the shuffle seed from the run seed.
pub const SPLIT_SEED_LABEL: &str = "split";

pub fn shuffle_seed_for(run_seed: u64) -> u64 {
    seed::labeled(run_seed, SPLIT_SEED_LABEL)
}
