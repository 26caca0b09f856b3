use std::collections::HashMap;

use crate::corpus::Dialogue;
use crate::metrics::{tokenize_for_metrics, NgramCounting};

/// Non-negative fraction `num / den`, compared exactly.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    fn gt(self, other: Ratio) -> bool {
        self.num as u128 * other.den as u128 > other.num as u128 * self.den as u128
    }
}

/// ROUGE-1 F1 as the exact fraction `2·overlap / (|a| + |b|)`, with the
/// same empty-side conventions as the float scorer.
fn unigram_f1(a: &[u32], b: &[u32], counting: NgramCounting) -> Ratio {
    if a.is_empty() || b.is_empty() {
        let both = a.is_empty() && b.is_empty();
        return Ratio {
            num: both as u64,
            den: 1,
        };
    }
    let count = |xs: &[u32]| {
        let mut m: HashMap<u32, u64> = HashMap::new();
        for &x in xs {
            *m.entry(x).or_default() += 1;
        }
        m
    };
    let (ca, cb) = (count(a), count(b));
    let (overlap, ta, tb) = match counting {
        NgramCounting::Set => (
            ca.keys().filter(|g| cb.contains_key(g)).count() as u64,
            ca.len() as u64,
            cb.len() as u64,
        ),
        NgramCounting::Multiset => (
            ca.iter()
                .map(|(g, c)| cb.get(g).map_or(0, |d| (*c).min(*d)))
                .sum(),
            a.len() as u64,
            b.len() as u64,
        ),
    };
    Ratio {
        num: 2 * overlap,
        den: ta + tb,
    }
}

/// Greedy gap-utterance selection.
///
/// Runs `k` rounds; each round adds the unselected turn that maximizes
/// ROUGE-1 F1 between the concatenated selected utterances and the
/// concatenated remaining ones (both in dialogue order). Scores are compared
/// as exact fractions and ties go to the lowest index. Returns the selected
/// indices in ascending order.
///
/// Panics if `k` exceeds the number of turns.
pub fn select_gap_utterances(d: &Dialogue, k: usize, counting: NgramCounting) -> Vec<usize> {
    let n = d.turns.len();
    assert!(k <= n, "cannot select {k} of {n} utterances");

    // Interning keeps the inner loop on integers.
    let mut vocab: HashMap<String, u32> = HashMap::new();
    let per_turn: Vec<Vec<u32>> = d
        .turns
        .iter()
        .map(|t| {
            tokenize_for_metrics(&t.text)
                .into_iter()
                .map(|w| {
                    let next = vocab.len() as u32;
                    *vocab.entry(w).or_insert(next)
                })
                .collect()
        })
        .collect();

    let mut selected = vec![false; n];
    let mut sel_buf = Vec::new();
    let mut rest_buf = Vec::new();
    for _ in 0..k {
        let mut best: Option<(usize, Ratio)> = None;
        for cand in (0..n).filter(|&i| !selected[i]) {
            sel_buf.clear();
            rest_buf.clear();
            for (i, toks) in per_turn.iter().enumerate() {
                if selected[i] || i == cand {
                    sel_buf.extend_from_slice(toks);
                } else {
                    rest_buf.extend_from_slice(toks);
                }
            }
            let f1 = unigram_f1(&sel_buf, &rest_buf, counting);
            if best.is_none_or(|(_, b)| f1.gt(b)) {
                best = Some((cand, f1));
            }
        }
        if let Some((i, _)) = best {
            selected[i] = true;
        }
    }
    (0..n).filter(|&i| selected[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::rouge_n_with;

    fn dlg(utts: &[&str]) -> Dialogue {
        let pairs: Vec<(String, &str)> = utts
            .iter()
            .enumerate()
            .map(|(i, u)| (if i % 2 == 0 { "A" } else { "B" }.to_string(), *u))
            .collect();
        Dialogue::from_pairs("g", "t", &pairs)
    }

    #[test]
    fn three_utterance_example() {
        let d = dlg(&["alice books", "bob books", "weather today"]);
        assert_eq!(select_gap_utterances(&d, 1, NgramCounting::Set), vec![0]);

        // Index 0 and 1 tie; index 2 shares nothing with the rest.
        let score = |sel: &[&str], rest: &[&str]| {
            let a = tokenize_for_metrics(&sel.join(" "));
            let b = tokenize_for_metrics(&rest.join(" "));
            rouge_n_with(&a, &b, 1, NgramCounting::Set).f1
        };
        let s0 = score(&["alice books"], &["bob books", "weather today"]);
        let s1 = score(&["bob books"], &["alice books", "weather today"]);
        let s2 = score(&["weather today"], &["alice books", "bob books"]);
        assert_eq!(s0, s1);
        assert_eq!(s2, 0.0);
        assert!((s0 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_selection_and_empty() {
        let d = dlg(&["a b", "b c", "c d", "d e"]);
        assert_eq!(
            select_gap_utterances(&d, 4, NgramCounting::Set),
            vec![0, 1, 2, 3]
        );
        assert!(select_gap_utterances(&d, 0, NgramCounting::Set).is_empty());
    }

    #[test]
    fn case_does_not_matter() {
        let a = dlg(&["Alice BOOKS", "bob books", "Weather today", "books today"]);
        let b = dlg(&["alice books", "BOB books", "weather TODAY", "books today"]);
        for k in 1..=4 {
            assert_eq!(
                select_gap_utterances(&a, k, NgramCounting::Set),
                select_gap_utterances(&b, k, NgramCounting::Set)
            );
        }
    }
}
