use std::fmt::Write as _;

use serde::Serialize;

use dialsum_core::corpus::{Corpus, Dialogue};
use dialsum_core::metrics::{
    corpus_report, dataset_stats, CorpusStats, DatasetStats, DialogueView, NgramBasis, StatsConfig,
    TOKENIZER_LABEL,
};

use super::{load, parse_name, to_value, write_pretty};
use crate::manifest::{ensure_dir, write_file, Manifest};
use crate::{data, CliError, StatsArgs};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

#[derive(Debug, Serialize)]
struct Report {
    tokenizer: &'static str,
    config: StatsConfig,
    datasets: Vec<DatasetStats>,
    /// Summary statistics, present for parallel corpora.
    corpus: Option<CorpusStats>,
}

fn dataset_table(rows: &[DatasetStats]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:>9} {:>10} {:>11} {:>11} {:>10} {:>11}",
        "dataset",
        "dialogues",
        "utterances",
        "turns/dlg",
        "tokens/dlg",
        "tokens/utt",
        "tokens/summ"
    );
    for r in rows {
        let summ = r
            .tokens_per_summary
            .map_or("-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            s,
            "{:<24} {:>9} {:>10} {:>11.2} {:>11.2} {:>10.2} {:>11}",
            r.dataset,
            r.dialogues,
            r.utterances,
            r.turns_per_dialogue,
            r.tokens_per_dialogue,
            r.tokens_per_turn,
            summ
        );
    }
    s
}

pub fn run(a: StatsArgs) -> Result<(), CliError> {
    let cfg = StatsConfig {
        dialogue_view: parse_name::<DialogueView>("view", &a.view)?,
        ngram_basis: parse_name::<NgramBasis>("basis", &a.basis)?,
    };
    ensure_dir(&a.out)?;
    let corpus = load(&a.input)?;
    let (datasets, summary_stats) = match &corpus {
        Corpus::Dialogues(ds) => (dataset_stats(ds, None), None),
        Corpus::Parallel(ps) => {
            let ds: Vec<Dialogue> = ps.iter().map(|p| p.dialogue.clone()).collect();
            let summaries: Vec<&str> = ps.iter().map(|p| p.summaries[0].text.as_str()).collect();
            let report = corpus_report(ps, &cfg).map_err(data)?;
            (dataset_stats(&ds, Some(&summaries)), Some(report))
        }
    };
    let mut text = format!("tokenizer: {TOKENIZER_LABEL}\n\n");
    text.push_str(&dataset_table(&datasets));
    if let Some(c) = &summary_stats {
        text.push('\n');
        text.push_str(&c.to_table());
    }
    let report = Report {
        tokenizer: TOKENIZER_LABEL,
        config: cfg,
        datasets,
        corpus: summary_stats,
    };
    write_pretty(&a.out.join(REPORT_JSON), &report)?;
    write_file(&a.out.join(REPORT_TXT), text.as_bytes())?;

    Manifest::new("stats", to_value(&cfg), None)
        .input(&a.input)?
        .write(&a.out, &[REPORT_JSON, REPORT_TXT])?;
    print!("{text}");
    Ok(())
}
