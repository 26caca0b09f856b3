//! Tokenizer, ROUGE, extractive fragments, corpus statistics and the
//! evaluation protocols built on them.

mod fragments;
mod protocol;
mod rouge;
mod stats;
mod tokenize;

pub use fragments::{extractive_fragments, Fragment, FragmentSet};
pub use protocol::{
    multi_reference_rouge, multi_reference_rouge_tokens, rouge_avg, select_training_reference,
    truncate_summary,
};
pub use rouge::{
    lcs_len, ngram_counts, rouge_l, rouge_l_tokens, rouge_n, rouge_n_tokens, rouge_n_with,
    rouge_triple, rouge_triple_tokens, NgramCounting, RougeScore, RougeTriple,
};
pub use stats::{
    corpus_report, dataset_stats, example_stats, CorpusStats, DatasetStats, DialogueView,
    ExampleStats, NgramBasis, StatsConfig, StatsError,
};
pub use tokenize::{tokenize_for_metrics, TOKENIZER_LABEL};

/// Mean that does not depend on the order of `values`: the values are sorted
/// and summed pairwise.
pub fn stable_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    pairwise_sum(&sorted) / sorted.len() as f64
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
