use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tasks::{apply_denoising, make_task_oriented_pair};
use super::{NoiseError, NoisedPair, NoisingConfig, Task};
use crate::corpus::{Dialogue, ParallelExample};
use crate::seed::derive_rng;

/// Task sampling weights. Tasks missing from `weights` have weight 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskMix {
    pub weights: BTreeMap<Task, f64>,
    pub seed: u64,
}

impl TaskMix {
    /// Equal weight on the five reconstruction objectives.
    pub fn denoising(seed: u64) -> Self {
        Self {
            weights: Task::DENOISING.iter().map(|t| (*t, 1.0)).collect(),
            seed,
        }
    }

    pub fn single(task: Task, seed: u64) -> Self {
        Self {
            weights: [(task, 1.0)].into_iter().collect(),
            seed,
        }
    }

    pub fn weight(&self, task: Task) -> f64 {
        self.weights.get(&task).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if let Some((t, w)) = self
            .weights
            .iter()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(NoiseError::InvalidMix(format!(
                "weight for {} must be a non-negative number, got {w}",
                t.name()
            )));
        }
        if !self.weights.values().any(|w| *w > 0.0) {
            return Err(NoiseError::InvalidMix(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Where pairs are drawn from.
#[derive(Debug, Clone, Copy)]
pub enum MixSource<'a> {
    Dialogues(&'a [Dialogue]),
    Parallel(&'a [ParallelExample]),
}

impl MixSource<'_> {
    pub fn len(&self) -> usize {
        match self {
            MixSource::Dialogues(d) => d.len(),
            MixSource::Parallel(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dialogue(&self, i: usize) -> &Dialogue {
        match self {
            MixSource::Dialogues(d) => &d[i],
            MixSource::Parallel(p) => &p[i].dialogue,
        }
    }
}

/// Validated pair generator. Pair `ordinal` depends only on the inputs and
/// the ordinal, so any subset of ordinals can be produced in any order.
pub struct Mixer<'a> {
    source: MixSource<'a>,
    mix: &'a TaskMix,
    cfg: &'a NoisingConfig,
    dist: WeightedIndex<f64>,
}

impl<'a> Mixer<'a> {
    pub fn new(
        source: MixSource<'a>,
        mix: &'a TaskMix,
        cfg: &'a NoisingConfig,
    ) -> Result<Self, NoiseError> {
        mix.validate()?;
        cfg.validate()?;
        if source.is_empty() {
            return Err(NoiseError::EmptySource);
        }
        if mix.weight(Task::TaskOriented) > 0.0 {
            match source {
                MixSource::Dialogues(_) => return Err(NoiseError::NeedsSummaries),
                MixSource::Parallel(p) => {
                    if let Some(ex) = p.iter().find(|ex| ex.summaries.is_empty()) {
                        return Err(NoiseError::NoSummary(ex.dialogue.id.clone()));
                    }
                }
            }
        }
        let dist = WeightedIndex::new(Task::ALL.iter().map(|t| mix.weight(*t)))
            .map_err(|e| NoiseError::InvalidMix(e.to_string()))?;
        Ok(Self {
            source,
            mix,
            cfg,
            dist,
        })
    }

    /// Task and source index for one ordinal.
    pub fn draw(&self, ordinal: u64) -> (Task, usize) {
        let mut rng = derive_rng(self.mix.seed, "mix", ordinal);
        let task = Task::ALL[self.dist.sample(&mut rng)];
        let idx = rng.random_range(0..self.source.len());
        (task, idx)
    }

    pub fn pair(&self, ordinal: u64) -> NoisedPair {
        let (task, idx) = self.draw(ordinal);
        match (task, self.source) {
            (Task::TaskOriented, MixSource::Parallel(p)) => {
                make_task_oriented_pair(&p[idx]).expect("summaries checked in Mixer::new")
            }
            _ => {
                let d = self.source.dialogue(idx);
                let mut rng = derive_rng(self.cfg.seed, &d.id, ordinal);
                apply_denoising(task, d, self.cfg, &mut rng)
            }
        }
    }

    /// Pairs for `ordinals`, generated in parallel, returned in order.
    pub fn generate(&self, ordinals: std::ops::Range<u64>) -> Vec<NoisedPair> {
        ordinals.into_par_iter().map(|o| self.pair(o)).collect()
    }
}

/// Generates `count` pairs for ordinals `0..count`.
pub fn mix_tasks(
    source: MixSource<'_>,
    mix: &TaskMix,
    cfg: &NoisingConfig,
    count: u64,
) -> Result<Vec<NoisedPair>, NoiseError> {
    if count == 0 {
        mix.validate()?;
        cfg.validate()?;
        return Ok(Vec::new());
    }
    Ok(Mixer::new(source, mix, cfg)?.generate(0..count))
}
