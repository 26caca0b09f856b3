use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize_for_metrics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const PERFECT: RougeScore = RougeScore {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };
    pub const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    /// Both sides empty scores 1, one side empty scores 0.
    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        match (candidate_total, reference_total) {
            (0, 0) => Self::PERFECT,
            (0, _) | (_, 0) => Self::ZERO,
            (c, r) => Self::from_pr(overlap as f64 / c as f64, overlap as f64 / r as f64),
        }
    }
}

/// How repeated n-grams are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramCounting {
    /// Clipped counts: an n-gram matches at most as often as it occurs on
    /// the other side.
    #[default]
    Multiset,
    /// Each distinct n-gram counts once.
    Set,
}

pub fn ngram_counts<T: Hash + Eq>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-N over pre-tokenized sequences.
pub fn rouge_n_with<T: Hash + Eq>(
    candidate: &[T],
    reference: &[T],
    n: usize,
    counting: NgramCounting,
) -> RougeScore {
    assert!(n >= 1, "ROUGE-N needs n >= 1");
    // Emptiness is judged on tokens; texts too short for any n-gram score 0.
    match (candidate.is_empty(), reference.is_empty()) {
        (true, true) => return RougeScore::PERFECT,
        (true, false) | (false, true) => return RougeScore::ZERO,
        _ => {}
    }
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let (overlap, cand_total, ref_total) = match counting {
        NgramCounting::Multiset => {
            let overlap = cand
                .iter()
                .map(|(g, c)| refs.get(g).map_or(0, |r| (*c).min(*r)))
                .sum();
            (overlap, cand.values().sum(), refs.values().sum())
        }
        NgramCounting::Set => {
            let overlap = cand.keys().filter(|g| refs.contains_key(*g)).count();
            (overlap, cand.len(), refs.len())
        }
    };
    if cand_total == 0 || ref_total == 0 {
        return RougeScore::ZERO;
    }
    RougeScore::from_counts(overlap, cand_total, ref_total)
}

pub fn rouge_n_tokens<T: Hash + Eq>(candidate: &[T], reference: &[T], n: usize) -> RougeScore {
    rouge_n_with(candidate, reference, n, NgramCounting::Multiset)
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScore {
    rouge_n_tokens(
        &tokenize_for_metrics(candidate),
        &tokenize_for_metrics(reference),
        n,
    )
}

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens<T: Eq>(candidate: &[T], reference: &[T]) -> RougeScore {
    let l = lcs_len(candidate, reference);
    RougeScore::from_counts(l, candidate.len(), reference.len())
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(
        &tokenize_for_metrics(candidate),
        &tokenize_for_metrics(reference),
    )
}

/// ROUGE-1, ROUGE-2 and ROUGE-L for one candidate/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeTriple {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

impl RougeTriple {
    /// Mean of the three F1 values.
    pub fn avg_f1(&self) -> f64 {
        (self.rouge1.f1 + self.rouge2.f1 + self.rouge_l.f1) / 3.0
    }
}

pub fn rouge_triple_tokens<T: Hash + Eq>(candidate: &[T], reference: &[T]) -> RougeTriple {
    RougeTriple {
        rouge1: rouge_n_tokens(candidate, reference, 1),
        rouge2: rouge_n_tokens(candidate, reference, 2),
        rouge_l: rouge_l_tokens(candidate, reference),
    }
}

pub fn rouge_triple(candidate: &str, reference: &str) -> RougeTriple {
    rouge_triple_tokens(
        &tokenize_for_metrics(candidate),
        &tokenize_for_metrics(reference),
    )
}
