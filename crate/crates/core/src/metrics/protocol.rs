//! Evaluation protocols: multi-reference averaging, training-reference
//! selection and summary length limits.

use super::rouge::{rouge_triple_tokens, RougeScore, RougeTriple};
use super::tokenize::tokenize_for_metrics;

fn mean_score(scores: &[RougeScore]) -> RougeScore {
    let n = scores.len() as f64;
    RougeScore {
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
    }
}

/// Averages ROUGE-1/2/L (precision, recall and F1 separately) of one
/// candidate over every reference.
///
/// Panics when `references` is empty.
pub fn multi_reference_rouge_tokens(
    candidate: &[String],
    references: &[Vec<String>],
) -> RougeTriple {
    assert!(!references.is_empty(), "at least one reference is required");
    let triples: Vec<RougeTriple> = references
        .iter()
        .map(|r| rouge_triple_tokens(candidate, r))
        .collect();
    let collect = |f: fn(&RougeTriple) -> RougeScore| triples.iter().map(f).collect::<Vec<_>>();
    RougeTriple {
        rouge1: mean_score(&collect(|t| t.rouge1)),
        rouge2: mean_score(&collect(|t| t.rouge2)),
        rouge_l: mean_score(&collect(|t| t.rouge_l)),
    }
}

pub fn multi_reference_rouge<S: AsRef<str>>(candidate: &str, references: &[S]) -> RougeTriple {
    let refs: Vec<Vec<String>> = references
        .iter()
        .map(|r| tokenize_for_metrics(r.as_ref()))
        .collect();
    multi_reference_rouge_tokens(&tokenize_for_metrics(candidate), &refs)
}

/// Mean of ROUGE-1, ROUGE-2 and ROUGE-L F1.
pub fn rouge_avg(candidate: &[String], reference: &[String]) -> f64 {
    rouge_triple_tokens(candidate, reference).avg_f1()
}

/// Index of the reference with the highest ROUGE-Avg against the dialogue
/// text (the dialogue is the candidate). Lowest index wins ties.
///
/// Panics when `references` is empty.
pub fn select_training_reference<S: AsRef<str>>(dialogue_text: &str, references: &[S]) -> usize {
    assert!(!references.is_empty(), "at least one reference is required");
    let dialogue = tokenize_for_metrics(dialogue_text);
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, r) in references.iter().enumerate() {
        let score = rouge_avg(&dialogue, &tokenize_for_metrics(r.as_ref()));
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// First `max_length` tokens.
pub fn truncate_summary(tokens: &[String], max_length: usize) -> Vec<String> {
    assert!(max_length >= 1, "max_length must be at least 1");
    tokens[..tokens.len().min(max_length)].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::rouge::rouge_triple;

    #[test]
    fn identical_and_disjoint_average_to_half() {
        let t = multi_reference_rouge("alice met bob", &["alice met bob", "zzz yyy xxx"]);
        assert_eq!(t.rouge1.f1, 0.5);
        assert_eq!(t.rouge2.f1, 0.5);
        assert_eq!(t.rouge_l.f1, 0.5);
    }

    #[test]
    fn single_reference_is_plain_rouge() {
        let c = "the cat sat on the mat";
        let r = "a cat sat on a mat";
        assert_eq!(multi_reference_rouge(c, &[r]), rouge_triple(c, r));
    }

    #[test]
    fn reference_order_does_not_matter() {
        let refs = ["one two three", "two three four", "five"];
        let a = multi_reference_rouge("two three", &refs);
        let b = multi_reference_rouge("two three", &[refs[2], refs[0], refs[1]]);
        for (x, y) in [
            (a.rouge1, b.rouge1),
            (a.rouge2, b.rouge2),
            (a.rouge_l, b.rouge_l),
        ] {
            assert!((x.f1 - y.f1).abs() < 1e-12);
        }
    }

    #[test]
    fn training_reference_selection() {
        assert_eq!(
            select_training_reference("alice went home", &["alice went home", "zzz yyy"]),
            0
        );
        assert_eq!(select_training_reference("x", &["y"]), 0);
        assert_eq!(select_training_reference("a b", &["a b", "a b"]), 0);
        assert_eq!(select_training_reference("a b c", &["zzz", "a b c"]), 1);
    }

    #[test]
    fn strictly_worse_reference_does_not_change_choice() {
        let d = "alice booked a table for two at eight";
        let refs = vec!["alice booked a table", "bob cooked"];
        let i = select_training_reference(d, &refs);
        let mut more = refs.clone();
        more.push("qqq");
        assert_eq!(select_training_reference(d, &more), i);
    }

    #[test]
    fn truncation() {
        let toks: Vec<String> = (0..100).map(|i| i.to_string()).collect();
        assert_eq!(truncate_summary(&toks, 60).len(), 60);
        assert_eq!(truncate_summary(&toks[..10], 60).len(), 10);
        let once = truncate_summary(&toks, 40);
        assert_eq!(truncate_summary(&once, 40), once);
    }
}
