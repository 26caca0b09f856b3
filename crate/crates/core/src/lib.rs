//! Corpus building and denoising pair generation for
//! multi-scenario dialogue summarization.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`corpus`]: canonical dialogue / parallel-example records and their
//!   line-delimited on-disk format.
//! - [`ingest`]: text normalization, same-speaker merging and generic source
//!   adapters.
//! - [`dedup`]: Jaccard near-duplicate removal, evaluation-set leakage removal
//!   and size filters.
//! - [`roles`]: role-group assignment from a name pool and role-replaced
//!   augmentation.
//! - [`annotate`]: summarization prompts and a resumable, rate-limited
//!   chat-completion client.
//! - [`noise`]: the five dialogue reconstruction objectives, the
//!   dialogue-to-summary pairs and multi-task mixing.
//! - [`metrics`]: tokenizer, ROUGE-1/2/L, extractive fragments, corpus
//!   statistics and evaluation protocols.

pub mod annotate;
pub mod corpus;
pub mod dedup;
pub mod ingest;
pub mod metrics;
pub mod noise;
pub mod roles;
pub mod seed;

pub use corpus::{
    CorpusError, CorpusKind, CorpusManifest, Dialogue, ParallelExample, SummaryOrigin,
    SummaryRecord, Turn, Violation,
};
