//! Denoising pre-training pairs.
//!
//! Five reconstruction objectives corrupt a serialized dialogue and ask for
//! the clean serialization back; the task-oriented pair maps a clean dialogue
//! to its summary. [`Mixer`] samples tasks and dialogues for a pair stream.

mod gap;
mod mix;
mod poisson;
mod serialize;
mod tasks;

use serde::{Deserialize, Serialize};

use crate::corpus::SummaryOrigin;
use crate::metrics::NgramCounting;

pub use gap::select_gap_utterances;
pub use mix::{mix_tasks, MixSource, Mixer, TaskMix};
pub use poisson::sample_poisson;
pub use serialize::{
    assign_speaker_ids, canonicalize, check_speaker_track, deserialize_dialogue, parse_segments,
    serialize_dialogue, Segment, SerializeError, SerializedInput, BOS, EOR, EOS, EOU, MASK,
    UTTR_MASK,
};
pub use tasks::{
    apply_denoising, apply_infill_spans, make_task_oriented_pair, sample_infill_spans,
    token_deletion, token_masking, utterance_infilling, utterance_masking, utterance_permutation,
    uttr_mask_count, InfillSpan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    TokenMask,
    TokenDelete,
    UttrInfill,
    UttrPermute,
    UttrMask,
    TaskOriented,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::TokenMask,
        Task::TokenDelete,
        Task::UttrInfill,
        Task::UttrPermute,
        Task::UttrMask,
        Task::TaskOriented,
    ];

    pub const DENOISING: [Task; 5] = [
        Task::TokenMask,
        Task::TokenDelete,
        Task::UttrInfill,
        Task::UttrPermute,
        Task::UttrMask,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::TokenMask => "token_mask",
            Task::TokenDelete => "token_delete",
            Task::UttrInfill => "uttr_infill",
            Task::UttrPermute => "uttr_permute",
            Task::UttrMask => "uttr_mask",
            Task::TaskOriented => "task_oriented",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisingConfig {
    pub token_mask_rate: f64,
    pub token_delete_rate: f64,
    pub infill_lambda: f64,
    /// Share of turns removed by infilling spans.
    pub infill_utterance_budget_rate: f64,
    pub uttr_mask_rate: f64,
    /// Unigram counting used when scoring gap utterances.
    pub gap_counting: NgramCounting,
    pub seed: u64,
}

impl Default for NoisingConfig {
    fn default() -> Self {
        Self {
            token_mask_rate: 0.2,
            token_delete_rate: 0.2,
            infill_lambda: 3.0,
            infill_utterance_budget_rate: 0.2,
            uttr_mask_rate: 0.2,
            gap_counting: NgramCounting::Set,
            seed: crate::seed::DEFAULT_SEEDS[0],
        }
    }
}

impl NoisingConfig {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let rates = [
            ("token_mask_rate", self.token_mask_rate),
            ("token_delete_rate", self.token_delete_rate),
            (
                "infill_utterance_budget_rate",
                self.infill_utterance_budget_rate,
            ),
            ("uttr_mask_rate", self.uttr_mask_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(NoiseError::InvalidConfig(format!(
                    "{name} must be in [0, 1], got {r}"
                )));
            }
        }
        if !(self.infill_lambda > 0.0 && self.infill_lambda.is_finite()) {
            return Err(NoiseError::InvalidConfig(format!(
                "infill_lambda must be positive, got {}",
                self.infill_lambda
            )));
        }
        Ok(())
    }
}

/// Rounds halves up. A tiny slack absorbs products like `0.7 * 5` that land
/// just below the half in binary floating point.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Dialogue(SerializedInput),
    Summary(Vec<String>),
}

impl Target {
    pub fn tokens(&self) -> &[String] {
        match self {
            Target::Dialogue(s) => &s.tokens,
            Target::Summary(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisedPair {
    pub task: Task,
    pub dialogue_id: String,
    pub source: SerializedInput,
    pub target: Target,
    /// Origin of the target summary for task-oriented pairs.
    pub summary_origin: Option<SummaryOrigin>,
}

impl NoisedPair {
    /// True for a task-oriented pair whose target is not an annotated summary.
    pub fn is_fallback(&self) -> bool {
        self.summary_origin
            .is_some_and(|o| o != SummaryOrigin::Annotated)
    }

    pub fn to_record(&self) -> PairRecord {
        PairRecord {
            task: self.task,
            source_tokens: self.source.tokens.clone(),
            source_speaker_ids: self.source.speaker_ids.clone(),
            target_tokens: self.target.tokens().to_vec(),
            dialogue_id: self.dialogue_id.clone(),
            target_speaker_ids: match &self.target {
                Target::Dialogue(s) => Some(s.speaker_ids.clone()),
                Target::Summary(_) => None,
            },
            summary_origin: self.summary_origin,
            fallback: self.is_fallback(),
        }
    }
}

/// Line format for emitted pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub task: Task,
    pub source_tokens: Vec<String>,
    pub source_speaker_ids: Vec<u8>,
    pub target_tokens: Vec<String>,
    pub dialogue_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_speaker_ids: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_origin: Option<SummaryOrigin>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NoiseError {
    #[error("invalid noising config: {0}")]
    InvalidConfig(String),
    #[error("invalid task mix: {0}")]
    InvalidMix(String),
    #[error("no examples to draw pairs from")]
    EmptySource,
    #[error("task_oriented pairs need a parallel corpus")]
    NeedsSummaries,
    #[error("example {0} has no summary")]
    NoSummary(String),
}
