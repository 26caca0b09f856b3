use dialsum_core::corpus::{save_corpus, write_json_lines, Corpus, CorpusRecord, Dialogue};
use dialsum_core::dedup::{
    dedup_corpus, filter_min_size, remove_eval_overlap, DedupConfig, HasDialogue, Removal, Shingle,
};

use super::{load, load_toml, to_value};
use crate::manifest::{ensure_dir, Manifest};
use crate::{data, usage, CleanArgs, CliError};

pub const OUTPUT: &str = "cleaned.jsonl";
pub const REMOVED: &str = "removed.jsonl";

/// Size filter, then duplicate removal, then evaluation-overlap removal.
fn clean<T: HasDialogue>(
    items: &[T],
    evals: &[Vec<Dialogue>],
    cfg: &DedupConfig,
) -> (Vec<T>, Vec<Removal>) {
    let (sized, mut removed) = filter_min_size(items, cfg);
    let (unique, dups) = dedup_corpus(&sized, cfg);
    removed.extend(dups);
    let eval_refs: Vec<&[Dialogue]> = evals.iter().map(Vec::as_slice).collect();
    let (kept, overlap) = remove_eval_overlap(&unique, &eval_refs, cfg);
    removed.extend(overlap);
    (kept, removed)
}

fn finish<T: HasDialogue + CorpusRecord>(
    items: &[T],
    evals: &[Vec<Dialogue>],
    cfg: &DedupConfig,
    a: &CleanArgs,
) -> Result<(usize, usize), CliError> {
    let (kept, removed) = clean(items, evals, cfg);
    save_corpus(&kept, &a.out.join(OUTPUT)).map_err(data)?;
    write_json_lines(&removed, &a.out.join(REMOVED)).map_err(data)?;
    Ok((kept.len(), removed.len()))
}

pub fn run(a: CleanArgs) -> Result<(), CliError> {
    let mut cfg: DedupConfig = match &a.config {
        Some(p) => load_toml(p)?,
        None => DedupConfig::default(),
    };
    if let Some(t) = a.threshold {
        cfg.jaccard_threshold = t;
    }
    if let Some(k) = a.shingle {
        if k == 0 {
            return Err(usage("--shingle must be at least 1"));
        }
        cfg.shingle = Shingle::from_size(k);
    }
    if let Some(n) = a.min_turns {
        cfg.min_turns = n;
    }
    if let Some(n) = a.min_tokens {
        cfg.min_tokens = n;
    }
    cfg.minhash |= a.minhash;
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    ensure_dir(&a.out)?;
    let corpus = load(&a.input)?;
    let mut evals = Vec::new();
    for p in &a.eval {
        evals.push(match load(p)? {
            Corpus::Dialogues(d) => d,
            Corpus::Parallel(ps) => ps.into_iter().map(|p| p.dialogue).collect(),
        });
    }
    let (kept, removed) = match &corpus {
        Corpus::Dialogues(ds) => finish(ds, &evals, &cfg, &a)?,
        Corpus::Parallel(ps) => finish(ps, &evals, &cfg, &a)?,
    };

    let mut m = Manifest::new("clean", to_value(&cfg), None).input(&a.input)?;
    for p in &a.eval {
        m = m.input(p)?;
    }
    m.write(&a.out, &[OUTPUT, REMOVED])?;
    println!("clean: kept {kept}, removed {removed}");
    Ok(())
}
