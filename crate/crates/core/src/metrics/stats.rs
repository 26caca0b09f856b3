//! Corpus statistics: compression, coverage, density, novel and redundant
//! n-grams per dialogue/summary pair, plus per-dataset size statistics.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fragments::extractive_fragments;
use super::rouge::ngram_counts;
use super::stable_mean;
use super::tokenize::{tokenize_for_metrics, TOKENIZER_LABEL};
use crate::annotate::render_dialogue_text;
use crate::corpus::{Dialogue, ParallelExample};

/// Which dialogue text the summary is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DialogueView {
    /// `"{role}: {utterance}"` lines, so speaker names count as dialogue text.
    #[default]
    Rendered,
    /// Utterance texts only.
    Utterances,
}

/// Instance-based n-gram percentages count every occurrence; type-based ones
/// count distinct n-grams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramBasis {
    #[default]
    Instance,
    Type,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub dialogue_view: DialogueView,
    pub ngram_basis: NgramBasis,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("example {id}: summary has no tokens")]
    EmptySummary { id: String },
    #[error("example {id}: no summary at index {index}")]
    NoSuchSummary { id: String, index: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleStats {
    pub dialogue_tokens: usize,
    pub summary_tokens: usize,
    pub compression: f64,
    pub coverage: f64,
    pub density: f64,
    /// Percentages for n = 1, 2, 3.
    pub novel_ngram_pct: [f64; 3],
    pub redundant_ngram_pct: [f64; 3],
}

pub(crate) fn dialogue_tokens(d: &Dialogue, view: DialogueView) -> Vec<String> {
    match view {
        DialogueView::Rendered => tokenize_for_metrics(&render_dialogue_text(d)),
        DialogueView::Utterances => d
            .turns
            .iter()
            .flat_map(|t| tokenize_for_metrics(&t.text))
            .collect(),
    }
}

fn novel_pct(dialogue: &[String], summary: &[String], n: usize, basis: NgramBasis) -> f64 {
    let source: HashSet<&[String]> = dialogue.windows(n).collect();
    let counts = ngram_counts(summary, n);
    let (novel, total) = match basis {
        NgramBasis::Instance => (
            counts
                .iter()
                .filter(|(g, _)| !source.contains(*g))
                .map(|(_, c)| *c)
                .sum::<usize>(),
            counts.values().sum::<usize>(),
        ),
        NgramBasis::Type => (
            counts.keys().filter(|g| !source.contains(*g)).count(),
            counts.len(),
        ),
    };
    if total == 0 {
        0.0
    } else {
        100.0 * novel as f64 / total as f64
    }
}

fn redundant_pct(summary: &[String], n: usize, basis: NgramBasis) -> f64 {
    let counts = ngram_counts(summary, n);
    if counts.is_empty() {
        return 0.0;
    }
    match basis {
        NgramBasis::Instance => {
            let total: usize = counts.values().sum();
            100.0 * (1.0 - counts.len() as f64 / total as f64)
        }
        NgramBasis::Type => {
            let repeated = counts.values().filter(|c| **c > 1).count();
            100.0 * repeated as f64 / counts.len() as f64
        }
    }
}

/// Statistics of one dialogue against the summary at `summary_index`.
pub fn example_stats(
    ex: &ParallelExample,
    summary_index: usize,
    cfg: &StatsConfig,
) -> Result<ExampleStats, StatsError> {
    let id = &ex.dialogue.id;
    let summary = ex
        .summaries
        .get(summary_index)
        .ok_or_else(|| StatsError::NoSuchSummary {
            id: id.clone(),
            index: summary_index,
        })?;
    let dialogue = dialogue_tokens(&ex.dialogue, cfg.dialogue_view);
    let summary = tokenize_for_metrics(&summary.text);
    if summary.is_empty() {
        return Err(StatsError::EmptySummary { id: id.clone() });
    }
    let fragments = extractive_fragments(&dialogue, &summary);
    let per_n = |f: &dyn Fn(usize) -> f64| [f(1), f(2), f(3)];
    Ok(ExampleStats {
        dialogue_tokens: dialogue.len(),
        summary_tokens: summary.len(),
        compression: dialogue.len() as f64 / summary.len() as f64,
        coverage: fragments.coverage(),
        density: fragments.density(),
        novel_ngram_pct: per_n(&|n| novel_pct(&dialogue, &summary, n, cfg.ngram_basis)),
        redundant_ngram_pct: per_n(&|n| redundant_pct(&summary, n, cfg.ngram_basis)),
    })
}

/// Corpus-level means of [`ExampleStats`], one row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub tokenizer: String,
    pub dialogue_view: DialogueView,
    pub ngram_basis: NgramBasis,
    pub n_dialogues: usize,
    pub mean_dialogue_tokens: f64,
    pub mean_summary_tokens: f64,
    pub compression: f64,
    pub coverage: f64,
    pub density: f64,
    pub novel_1: f64,
    pub novel_2: f64,
    pub novel_3: f64,
    pub redundant_1: f64,
    pub redundant_2: f64,
    pub redundant_3: f64,
}

impl CorpusStats {
    pub fn to_table(&self) -> String {
        let rows: [(&str, String); 13] = [
            ("dialogues", self.n_dialogues.to_string()),
            (
                "tokens/dialogue",
                format!("{:.2}", self.mean_dialogue_tokens),
            ),
            ("tokens/summary", format!("{:.2}", self.mean_summary_tokens)),
            ("compression", format!("{:.2}", self.compression)),
            ("coverage", format!("{:.4}", self.coverage)),
            ("density", format!("{:.4}", self.density)),
            ("novel 1-gram %", format!("{:.2}", self.novel_1)),
            ("novel 2-gram %", format!("{:.2}", self.novel_2)),
            ("novel 3-gram %", format!("{:.2}", self.novel_3)),
            ("redundant 1-gram %", format!("{:.2}", self.redundant_1)),
            ("redundant 2-gram %", format!("{:.2}", self.redundant_2)),
            ("redundant 3-gram %", format!("{:.2}", self.redundant_3)),
            ("tokenizer", self.tokenizer.clone()),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<20} {v}\n"));
        }
        out
    }
}

/// Unweighted mean of per-example statistics over `exs`, using each
/// example's first summary.
pub fn corpus_report(
    exs: &[ParallelExample],
    cfg: &StatsConfig,
) -> Result<CorpusStats, StatsError> {
    if exs.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let per: Vec<ExampleStats> = exs
        .par_iter()
        .map(|ex| example_stats(ex, 0, cfg))
        .collect::<Result<_, _>>()?;
    let mean = |f: &dyn Fn(&ExampleStats) -> f64| {
        let values: Vec<f64> = per.iter().map(f).collect();
        stable_mean(&values)
    };
    Ok(CorpusStats {
        tokenizer: TOKENIZER_LABEL.to_string(),
        dialogue_view: cfg.dialogue_view,
        ngram_basis: cfg.ngram_basis,
        n_dialogues: exs.len(),
        mean_dialogue_tokens: mean(&|s| s.dialogue_tokens as f64),
        mean_summary_tokens: mean(&|s| s.summary_tokens as f64),
        compression: mean(&|s| s.compression),
        coverage: mean(&|s| s.coverage),
        density: mean(&|s| s.density),
        novel_1: mean(&|s| s.novel_ngram_pct[0]),
        novel_2: mean(&|s| s.novel_ngram_pct[1]),
        novel_3: mean(&|s| s.novel_ngram_pct[2]),
        redundant_1: mean(&|s| s.redundant_ngram_pct[0]),
        redundant_2: mean(&|s| s.redundant_ngram_pct[1]),
        redundant_3: mean(&|s| s.redundant_ngram_pct[2]),
    })
}

/// Size statistics of one source dataset.
///
/// Token counts use the metrics tokenizer over utterance text only.
/// `tokens_per_turn` is total tokens over total turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub dataset: String,
    pub dialogues: usize,
    pub utterances: usize,
    pub turns_per_dialogue: f64,
    pub tokens_per_dialogue: f64,
    pub tokens_per_turn: f64,
    pub tokens_per_summary: Option<f64>,
}

/// Per-dataset statistics, sorted by dataset tag. `summaries`, when given,
/// must be aligned with `dialogues` and holds the summary text per dialogue.
pub fn dataset_stats(dialogues: &[Dialogue], summaries: Option<&[&str]>) -> Vec<DatasetStats> {
    struct Acc {
        dialogues: usize,
        turns: usize,
        tokens: usize,
        summary_tokens: usize,
    }
    let mut groups: BTreeMap<&str, Acc> = BTreeMap::new();
    for (i, d) in dialogues.iter().enumerate() {
        let tokens: usize = d
            .turns
            .iter()
            .map(|t| tokenize_for_metrics(&t.text).len())
            .sum();
        let acc = groups.entry(&d.source_dataset).or_insert(Acc {
            dialogues: 0,
            turns: 0,
            tokens: 0,
            summary_tokens: 0,
        });
        acc.dialogues += 1;
        acc.turns += d.turns.len();
        acc.tokens += tokens;
        if let Some(s) = summaries {
            acc.summary_tokens += tokenize_for_metrics(s[i]).len();
        }
    }
    groups
        .into_iter()
        .map(|(name, a)| {
            let n = a.dialogues as f64;
            DatasetStats {
                dataset: name.to_string(),
                dialogues: a.dialogues,
                utterances: a.turns,
                turns_per_dialogue: a.turns as f64 / n,
                tokens_per_dialogue: a.tokens as f64 / n,
                tokens_per_turn: if a.turns == 0 {
                    0.0
                } else {
                    a.tokens as f64 / a.turns as f64
                },
                tokens_per_summary: summaries.map(|_| a.summary_tokens as f64 / n),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SummaryOrigin, SummaryRecord};

    fn example(id: &str, utterance: &str, summary: &str) -> ParallelExample {
        ParallelExample::new(
            Dialogue::from_pairs(id, "t", &[("A", utterance)]),
            vec![SummaryRecord::new(summary, SummaryOrigin::Annotated)],
        )
    }

    fn utterance_cfg() -> StatsConfig {
        StatsConfig {
            dialogue_view: DialogueView::Utterances,
            ngram_basis: NgramBasis::Instance,
        }
    }

    #[test]
    fn compression_ratio() {
        let words: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        let ex = example("a", &words.join(" "), &words[..25].join(" "));
        let s = example_stats(&ex, 0, &utterance_cfg()).unwrap();
        assert_eq!(s.compression, 4.0);
        assert_eq!(s.coverage, 1.0);
        assert_eq!(s.density, 25.0);
    }

    #[test]
    fn redundant_bigrams() {
        let ex = example("a", "a b", "a b a b");
        let s = example_stats(&ex, 0, &utterance_cfg()).unwrap();
        assert!((s.redundant_ngram_pct[1] - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(s.redundant_ngram_pct[0], 50.0);
    }

    #[test]
    fn novel_bigrams() {
        let ex = example("a", "a b", "a b x");
        let s = example_stats(&ex, 0, &utterance_cfg()).unwrap();
        assert_eq!(s.novel_ngram_pct[1], 50.0);
        assert!((s.novel_ngram_pct[0] - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(s.novel_ngram_pct[2], 100.0);
    }

    #[test]
    fn type_basis() {
        let ex = example("a", "a b", "a b a b x");
        let cfg = StatsConfig {
            dialogue_view: DialogueView::Utterances,
            ngram_basis: NgramBasis::Type,
        };
        let s = example_stats(&ex, 0, &cfg).unwrap();
        // bigram types {ab, ba, bx}: ab repeats
        assert!((s.redundant_ngram_pct[1] - 100.0 / 3.0).abs() < 1e-9);
        // novel types {ba, bx} of 3
        assert!((s.novel_ngram_pct[1] - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn rendered_view_counts_speaker_names() {
        let ex = example("a", "hello there", "A said hello");
        let rendered = example_stats(&ex, 0, &StatsConfig::default()).unwrap();
        let plain = example_stats(&ex, 0, &utterance_cfg()).unwrap();
        assert_eq!(rendered.dialogue_tokens, 3);
        assert_eq!(plain.dialogue_tokens, 2);
        assert!(rendered.coverage > plain.coverage);
    }

    #[test]
    fn empty_summary_and_corpus() {
        let ex = example("a", "x y", "!!!");
        assert_eq!(
            example_stats(&ex, 0, &StatsConfig::default()),
            Err(StatsError::EmptySummary { id: "a".into() })
        );
        assert_eq!(
            corpus_report(&[], &StatsConfig::default()),
            Err(StatsError::EmptyCorpus)
        );
    }

    #[test]
    fn report_means() {
        let a = example("a", "w1 w2 w3 w4", "w1");
        let b = example("b", "w1 w2 w3 w4 w5 w6", "w1");
        let cfg = utterance_cfg();
        let r = corpus_report(&[a.clone(), b.clone()], &cfg).unwrap();
        assert_eq!(r.compression, 5.0);
        assert_eq!(r.n_dialogues, 2);
        let single = corpus_report(std::slice::from_ref(&a), &cfg).unwrap();
        let s = example_stats(&a, 0, &cfg).unwrap();
        assert_eq!(single.compression, s.compression);
        assert_eq!(single.density, s.density);
        let swapped = corpus_report(&[b, a], &cfg).unwrap();
        assert_eq!(swapped, r);
    }

    #[test]
    fn per_dataset_sizes() {
        let d1 = Dialogue::from_pairs("1", "x", &[("A", "a b"), ("B", "c")]);
        let d2 = Dialogue::from_pairs("2", "x", &[("A", "a b c d")]);
        let d3 = Dialogue::from_pairs("3", "y", &[("A", "a")]);
        let stats = dataset_stats(&[d1, d2, d3], Some(&["s t", "u", "v"]));
        assert_eq!(stats.len(), 2);
        let x = &stats[0];
        assert_eq!(x.dataset, "x");
        assert_eq!(x.dialogues, 2);
        assert_eq!(x.utterances, 3);
        assert_eq!(x.turns_per_dialogue, 1.5);
        assert_eq!(x.tokens_per_dialogue, 3.5);
        assert!((x.tokens_per_turn - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(x.tokens_per_summary, Some(1.5));
    }
}
