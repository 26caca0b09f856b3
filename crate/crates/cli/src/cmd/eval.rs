use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use dialsum_core::annotate::render_dialogue_text;
use dialsum_core::corpus::{write_json_lines, Corpus};
use dialsum_core::metrics::{
    multi_reference_rouge_tokens, select_training_reference, stable_mean, tokenize_for_metrics,
    truncate_summary, RougeScore, RougeTriple,
};

use super::{load, write_pretty};
use crate::manifest::{ensure_dir, Manifest};
use crate::{data, CliError, EvalArgs};

pub const REPORT: &str = "eval.json";
pub const SELECTED: &str = "selected.jsonl";

#[derive(Debug, Deserialize)]
struct Candidate {
    id: String,
    text: String,
}

#[derive(Debug, Deserialize)]
struct References {
    id: String,
    references: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Scored {
    id: String,
    #[serde(flatten)]
    scores: RougeTriple,
}

#[derive(Debug, Serialize)]
struct Selected {
    id: String,
    index: usize,
    text: String,
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn id_mismatch(missing: &[&str], extra: &[&str]) -> CliError {
    let mut msg = String::from("candidate and reference ids differ");
    if !missing.is_empty() {
        msg.push_str(&format!("; no references for: {}", missing.join(", ")));
    }
    if !extra.is_empty() {
        msg.push_str(&format!("; no candidate for: {}", extra.join(", ")));
    }
    data(msg)
}

fn mean_triple(rows: &[Scored]) -> RougeTriple {
    let mean = |f: fn(&RougeTriple) -> RougeScore| {
        let col = |g: fn(&RougeScore) -> f64| {
            stable_mean(&rows.iter().map(|r| g(&f(&r.scores))).collect::<Vec<_>>())
        };
        RougeScore {
            precision: col(|s| s.precision),
            recall: col(|s| s.recall),
            f1: col(|s| s.f1),
        }
    };
    RougeTriple {
        rouge1: mean(|t| t.rouge1),
        rouge2: mean(|t| t.rouge2),
        rouge_l: mean(|t| t.rouge_l),
    }
}

fn select(a: &EvalArgs, refs: &[References]) -> Result<(), CliError> {
    let path = a.dialogues.as_ref().expect("clap requires --dialogues");
    let dialogues = match load(path)? {
        Corpus::Dialogues(d) => d,
        Corpus::Parallel(ps) => ps.into_iter().map(|p| p.dialogue).collect(),
    };
    let by_id: HashMap<&str, _> = dialogues.iter().map(|d| (d.id.as_str(), d)).collect();
    let missing: Vec<&str> = refs
        .iter()
        .filter(|r| !by_id.contains_key(r.id.as_str()))
        .map(|r| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(data(format!("no dialogue for: {}", missing.join(", "))));
    }
    let mut out = Vec::with_capacity(refs.len());
    for r in refs {
        if r.references.is_empty() {
            return Err(data(format!("{}: empty reference list", r.id)));
        }
        let text = render_dialogue_text(by_id[r.id.as_str()]);
        let index = select_training_reference(&text, &r.references);
        out.push(Selected {
            id: r.id.clone(),
            index,
            text: r.references[index].clone(),
        });
    }
    write_json_lines(&out, &a.out.join(SELECTED)).map_err(data)?;
    Manifest::new("eval", json!({ "mode": "select_train_ref" }), None)
        .input(&a.references)?
        .input(path)?
        .write(&a.out, &[SELECTED])?;
    println!(
        "eval: selected training references for {} examples",
        out.len()
    );
    Ok(())
}

pub fn run(a: EvalArgs) -> Result<(), CliError> {
    ensure_dir(&a.out)?;
    let refs: Vec<References> = read_jsonl(&a.references)?;
    if a.select_train_ref {
        return select(&a, &refs);
    }
    let cand_path = a.candidates.as_ref().expect("clap requires --candidates");
    let cands: Vec<Candidate> = read_jsonl(cand_path)?;

    let ref_by_id: HashMap<&str, &References> = refs.iter().map(|r| (r.id.as_str(), r)).collect();
    let cand_ids: BTreeSet<&str> = cands.iter().map(|c| c.id.as_str()).collect();
    let missing: Vec<&str> = cand_ids
        .iter()
        .copied()
        .filter(|id| !ref_by_id.contains_key(id))
        .collect();
    let extra: Vec<&str> = refs
        .iter()
        .map(|r| r.id.as_str())
        .filter(|id| !cand_ids.contains(id))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(id_mismatch(&missing, &extra));
    }
    if cand_ids.len() != cands.len() || ref_by_id.len() != refs.len() {
        return Err(data("ids must be unique within each file"));
    }

    let mut rows = Vec::with_capacity(cands.len());
    for c in &cands {
        let r = ref_by_id[c.id.as_str()];
        if r.references.is_empty() {
            return Err(data(format!("{}: empty reference list", c.id)));
        }
        if !a.multi_ref && r.references.len() != 1 {
            return Err(data(format!(
                "{}: {} references; pass --multi-ref to average over them",
                c.id,
                r.references.len()
            )));
        }
        let mut tokens = tokenize_for_metrics(&c.text);
        if let Some(max) = a.max_length {
            tokens = truncate_summary(&tokens, max as usize);
        }
        let ref_tokens: Vec<Vec<String>> = r
            .references
            .iter()
            .map(|t| tokenize_for_metrics(t))
            .collect();
        rows.push(Scored {
            id: c.id.clone(),
            scores: multi_reference_rouge_tokens(&tokens, &ref_tokens),
        });
    }
    let mean = mean_triple(&rows);
    let report = json!({
        "examples": rows.len(),
        "max_length": a.max_length,
        "multi_ref": a.multi_ref,
        "mean": mean,
        "per_example": rows,
    });
    write_pretty(&a.out.join(REPORT), &report)?;
    let config = json!({ "max_length": a.max_length, "multi_ref": a.multi_ref });
    Manifest::new("eval", config, None)
        .input(cand_path)?
        .input(&a.references)?
        .write(&a.out, &[REPORT])?;
    println!(
        "eval: {} examples  R-1 {:.4}  R-2 {:.4}  R-L {:.4}",
        rows.len(),
        mean.rouge1.f1,
        mean.rouge2.f1,
        mean.rouge_l.f1
    );
    Ok(())
}
