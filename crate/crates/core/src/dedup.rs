//! Near-duplicate and evaluation-leakage removal, plus size filters.
//!
//! Similarity is the Jaccard index of shingle sets built from the metrics
//! tokenizer over utterance text (speaker names are ignored, so the same
//! conversation exported with different speaker labels still matches). The
//! exact path compares each dialogue with every earlier kept one. The MinHash
//! path only narrows the candidates: every candidate pair is re-scored
//! exactly, so it can never remove something the exact path would keep.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dialogue, ParallelExample};
use crate::metrics::tokenize_for_metrics;
use crate::seed::{fnv1a64, splitmix64};

/// Shingle granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shingle {
    Unigram,
    Tokens { k: usize },
}

impl Shingle {
    pub fn from_size(k: usize) -> Self {
        if k <= 1 {
            Shingle::Unigram
        } else {
            Shingle::Tokens { k }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Shingle::Unigram => 1,
            Shingle::Tokens { k } => *k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    pub jaccard_threshold: f64,
    pub shingle: Shingle,
    pub min_turns: usize,
    pub min_tokens: usize,
    /// Use the banded MinHash candidate filter before exact scoring.
    pub minhash: bool,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            jaccard_threshold: 0.8,
            shingle: Shingle::Unigram,
            min_turns: 4,
            min_tokens: 32,
            minhash: false,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("jaccard_threshold must be in (0, 1], got {0}")]
    Threshold(f64),
    #[error("{0} must be at least 1")]
    TooSmall(&'static str),
}

impl DedupConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = self.jaccard_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ConfigError::Threshold(t));
        }
        if self.min_turns < 1 {
            return Err(ConfigError::TooSmall("min_turns"));
        }
        if self.min_tokens < 1 {
            return Err(ConfigError::TooSmall("min_tokens"));
        }
        if self.shingle.size() < 1 {
            return Err(ConfigError::TooSmall("shingle size"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    Duplicate,
    EvalOverlap,
    TooFewTurns,
    TooFewTokens,
}

/// One line of a removal report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub removed_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub reason: RemovalReason,
}

/// Anything that carries a dialogue; lets cleaning run on parallel corpora
/// without dropping their summaries.
pub trait HasDialogue: Clone + Send + Sync {
    fn dialogue(&self) -> &Dialogue;
}

impl HasDialogue for Dialogue {
    fn dialogue(&self) -> &Dialogue {
        self
    }
}

impl HasDialogue for ParallelExample {
    fn dialogue(&self) -> &Dialogue {
        &self.dialogue
    }
}

/// Sorted, de-duplicated shingle hashes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleSet(Vec<u64>);

impl ShingleSet {
    pub fn from_tokens(tokens: &[String], shingle: Shingle) -> Self {
        let k = shingle.size();
        let token_hashes: Vec<u64> = tokens.iter().map(|t| fnv1a64(t.as_bytes())).collect();
        let mut hashes: Vec<u64> = if token_hashes.len() < k {
            Vec::new()
        } else {
            token_hashes
                .windows(k)
                .map(|w| w.iter().fold(0u64, |acc, h| splitmix64(acc ^ h)))
                .collect()
        };
        hashes.sort_unstable();
        hashes.dedup();
        Self(hashes)
    }

    pub fn from_text(text: &str, shingle: Shingle) -> Self {
        Self::from_tokens(&tokenize_for_metrics(text), shingle)
    }

    pub fn of_dialogue(d: &Dialogue, shingle: Shingle) -> Self {
        let tokens: Vec<String> = d
            .turns
            .iter()
            .flat_map(|t| tokenize_for_metrics(&t.text))
            .collect();
        Self::from_tokens(&tokens, shingle)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Jaccard index; two empty sets are identical.
    pub fn jaccard(&self, other: &ShingleSet) -> f64 {
        let (a, b) = (&self.0, &other.0);
        if a.is_empty() && b.is_empty() {
            return 1.0;
        }
        let (mut i, mut j, mut inter) = (0, 0, 0usize);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    inter += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = a.len() + b.len() - inter;
        inter as f64 / union as f64
    }
}

pub fn jaccard_similarity(a: &str, b: &str, shingle: Shingle) -> f64 {
    ShingleSet::from_text(a, shingle).jaccard(&ShingleSet::from_text(b, shingle))
}

pub const MINHASH_PERMUTATIONS: usize = 128;

/// Banded MinHash index. The band/row split is the one with the most rows
/// per band whose probability of missing a pair at exactly the threshold
/// stays below one in a million.
pub struct MinHashIndex {
    seeds: Vec<u64>,
    pub bands: usize,
    pub rows: usize,
    buckets: Vec<HashMap<u64, Vec<usize>>>,
}

/// Probability that a pair with Jaccard `j` shares no band.
pub fn band_miss_probability(j: f64, bands: usize, rows: usize) -> f64 {
    (1.0 - j.powi(rows as i32)).powi(bands as i32)
}

impl MinHashIndex {
    pub fn for_threshold(threshold: f64) -> Self {
        let mut rows = 1;
        for r in [2usize, 4, 8, 16, 32, 64, 128] {
            if band_miss_probability(threshold, MINHASH_PERMUTATIONS / r, r) <= 1e-6 {
                rows = r;
            }
        }
        Self::with_split(MINHASH_PERMUTATIONS / rows, rows)
    }

    pub fn with_split(bands: usize, rows: usize) -> Self {
        assert_eq!(bands * rows, MINHASH_PERMUTATIONS);
        let seeds = (0..MINHASH_PERMUTATIONS as u64)
            .map(|i| splitmix64(i ^ 0x6d69_6e68_6173_6821))
            .collect();
        Self {
            seeds,
            bands,
            rows,
            buckets: vec![HashMap::new(); bands],
        }
    }

    pub fn signature(&self, set: &ShingleSet) -> Vec<u64> {
        self.seeds
            .iter()
            .map(|s| {
                set.0
                    .iter()
                    .map(|h| splitmix64(h ^ s))
                    .min()
                    .unwrap_or(u64::MAX)
            })
            .collect()
    }

    fn band_keys<'a>(&'a self, sig: &'a [u64]) -> impl Iterator<Item = u64> + 'a {
        sig.chunks(self.rows)
            .enumerate()
            .map(|(b, rows)| rows.iter().fold(b as u64, |acc, v| splitmix64(acc ^ v)))
    }

    pub fn insert(&mut self, item: usize, sig: &[u64]) {
        let keys: Vec<u64> = self.band_keys(sig).collect();
        for (band, key) in keys.into_iter().enumerate() {
            self.buckets[band].entry(key).or_default().push(item);
        }
    }

    /// Items sharing at least one band with `sig`, ascending.
    pub fn candidates(&self, sig: &[u64]) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .band_keys(sig)
            .enumerate()
            .filter_map(|(band, key)| self.buckets[band].get(&key))
            .flatten()
            .copied()
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn shingle_sets<T: HasDialogue>(ds: &[T], shingle: Shingle) -> Vec<ShingleSet> {
    ds.par_iter()
        .map(|x| ShingleSet::of_dialogue(x.dialogue(), shingle))
        .collect()
}

/// Removes dialogues similar to an earlier kept one. First occurrence wins;
/// each removal names the earliest kept dialogue at or above the threshold.
pub fn dedup_corpus<T: HasDialogue>(ds: &[T], cfg: &DedupConfig) -> (Vec<T>, Vec<Removal>) {
    let sets = shingle_sets(ds, cfg.shingle);
    let threshold = cfg.jaccard_threshold;
    let mut kept: Vec<usize> = Vec::new();
    let mut removed = Vec::new();
    let mut index = cfg.minhash.then(|| MinHashIndex::for_threshold(threshold));
    let signatures: Option<Vec<Vec<u64>>> = index
        .as_ref()
        .map(|idx| sets.par_iter().map(|s| idx.signature(s)).collect());

    for i in 0..ds.len() {
        let hit = match (&index, &signatures) {
            (Some(idx), Some(sigs)) => idx
                .candidates(&sigs[i])
                .into_iter()
                .map(|slot| kept[slot])
                .find_map(|k| {
                    let s = sets[i].jaccard(&sets[k]);
                    (s >= threshold).then_some((k, s))
                }),
            _ => first_match(&kept, |k| sets[i].jaccard(&sets[k]), threshold),
        };
        match hit {
            Some((k, score)) => removed.push(Removal {
                removed_id: ds[i].dialogue().id.clone(),
                matched_id: Some(ds[k].dialogue().id.clone()),
                score: Some(score),
                reason: RemovalReason::Duplicate,
            }),
            None => {
                if let (Some(idx), Some(sigs)) = (index.as_mut(), &signatures) {
                    idx.insert(kept.len(), &sigs[i]);
                }
                kept.push(i);
            }
        }
    }
    (kept.into_iter().map(|i| ds[i].clone()).collect(), removed)
}

fn first_match(
    pool: &[usize],
    score: impl Fn(usize) -> f64 + Sync,
    threshold: f64,
) -> Option<(usize, f64)> {
    let check = |&k: &usize| {
        let s = score(k);
        (s >= threshold).then_some((k, s))
    };
    if pool.len() < 512 {
        pool.iter().find_map(check)
    } else {
        pool.par_iter().find_map_first(check)
    }
}

/// Removes every dialogue whose similarity to any evaluation dialogue reaches
/// the threshold. Evaluation sets are only read.
pub fn remove_eval_overlap<T: HasDialogue>(
    ds: &[T],
    eval_sets: &[&[Dialogue]],
    cfg: &DedupConfig,
) -> (Vec<T>, Vec<Removal>) {
    let eval: Vec<&Dialogue> = eval_sets.iter().flat_map(|s| s.iter()).collect();
    let eval_sets_sh: Vec<ShingleSet> = eval
        .par_iter()
        .map(|d| ShingleSet::of_dialogue(d, cfg.shingle))
        .collect();
    let threshold = cfg.jaccard_threshold;
    let index = cfg.minhash.then(|| {
        let mut idx = MinHashIndex::for_threshold(threshold);
        for (i, s) in eval_sets_sh.iter().enumerate() {
            let sig = idx.signature(s);
            idx.insert(i, &sig);
        }
        idx
    });
    let all: Vec<usize> = (0..eval.len()).collect();

    let verdicts: Vec<Option<(usize, f64)>> = ds
        .par_iter()
        .map(|x| {
            let set = ShingleSet::of_dialogue(x.dialogue(), cfg.shingle);
            let pool = match &index {
                Some(idx) => idx.candidates(&idx.signature(&set)),
                None => all.clone(),
            };
            pool.iter().find_map(|&e| {
                let s = set.jaccard(&eval_sets_sh[e]);
                (s >= threshold).then_some((e, s))
            })
        })
        .collect();

    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (x, verdict) in ds.iter().zip(verdicts) {
        match verdict {
            Some((e, score)) => removed.push(Removal {
                removed_id: x.dialogue().id.clone(),
                matched_id: Some(eval[e].id.clone()),
                score: Some(score),
                reason: RemovalReason::EvalOverlap,
            }),
            None => kept.push(x.clone()),
        }
    }
    (kept, removed)
}

/// Utterance token count under the metrics tokenizer; speaker names excluded.
pub fn utterance_token_count(d: &Dialogue) -> usize {
    d.turns
        .iter()
        .map(|t| tokenize_for_metrics(&t.text).len())
        .sum()
}

/// Keeps dialogues with at least `min_turns` turns and `min_tokens` tokens.
pub fn filter_min_size<T: HasDialogue>(ds: &[T], cfg: &DedupConfig) -> (Vec<T>, Vec<Removal>) {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for x in ds {
        let d = x.dialogue();
        let reason = if d.turns.len() < cfg.min_turns {
            Some(RemovalReason::TooFewTurns)
        } else if utterance_token_count(d) < cfg.min_tokens {
            Some(RemovalReason::TooFewTokens)
        } else {
            None
        };
        match reason {
            Some(reason) => removed.push(Removal {
                removed_id: d.id.clone(),
                matched_id: None,
                score: None,
                reason,
            }),
            None => kept.push(x.clone()),
        }
    }
    (kept, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dlg(id: &str, a: &str, b: &str) -> Dialogue {
        Dialogue::from_pairs(id, "t", &[("A", a), ("B", b)])
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_similarity("a b c", "a b c", Shingle::Unigram), 1.0);
        assert_eq!(jaccard_similarity("a b c", "b c d", Shingle::Unigram), 0.5);
        assert_eq!(jaccard_similarity("a b", "c d", Shingle::Unigram), 0.0);
        assert_eq!(jaccard_similarity("", "", Shingle::Unigram), 1.0);
        assert_eq!(
            jaccard_similarity("a b c", "a b c d", Shingle::from_size(2)),
            2.0 / 3.0
        );
    }

    #[test]
    fn config_validation() {
        assert!(DedupConfig::default().validate().is_ok());
        let bad = DedupConfig {
            jaccard_threshold: 0.0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::Threshold(0.0)));
        let bad = DedupConfig {
            min_turns: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn exact_duplicate_is_removed() {
        let ds = vec![
            dlg("1", "hello there friend", "how are you"),
            dlg("2", "something else entirely", "yes"),
            dlg("3", "hello there friend", "how are you"),
        ];
        let (kept, removed) = dedup_corpus(&ds, &DedupConfig::default());
        assert_eq!(kept.len(), 2);
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].removed_id, "3");
        assert_eq!(removed[0].matched_id.as_deref(), Some("1"));
        assert_eq!(removed[0].score, Some(1.0));
    }

    #[test]
    fn dedup_is_idempotent() {
        let ds = vec![
            dlg("1", "a b c d e f g h i", "j"),
            dlg("2", "a b c d e f g h i", "k"),
            dlg("3", "p q r", "s"),
        ];
        let cfg = DedupConfig::default();
        let (kept, removed) = dedup_corpus(&ds, &cfg);
        assert_eq!(removed.len(), 1);
        let (again, removed_again) = dedup_corpus(&kept, &cfg);
        assert_eq!(again, kept);
        assert!(removed_again.is_empty());
    }

    #[test]
    fn eval_overlap() {
        let train = vec![
            dlg("t1", "we need to book the flight", "ok"),
            dlg("t2", "different words here", "fine"),
        ];
        let eval = vec![dlg("e1", "we need to book the flight", "ok")];
        let cfg = DedupConfig::default();
        let (kept, removed) = remove_eval_overlap(&train, &[&eval], &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(removed[0].matched_id.as_deref(), Some("e1"));
        let (kept, removed) = remove_eval_overlap(&train, &[], &cfg);
        assert_eq!(kept, train);
        assert!(removed.is_empty());
    }

    fn sized(id: &str, turns: usize, tokens: usize) -> Dialogue {
        let per = tokens / turns;
        let extra = tokens % turns;
        let pairs: Vec<(String, String)> = (0..turns)
            .map(|t| {
                let n = per + usize::from(t < extra);
                let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
                (
                    if t % 2 == 0 { "A" } else { "B" }.to_string(),
                    words.join(" "),
                )
            })
            .collect();
        Dialogue::from_pairs(id, "t", &pairs)
    }

    #[test]
    fn size_boundaries() {
        let cfg = DedupConfig::default();
        let ds = vec![
            sized("3x100", 3, 100),
            sized("4x32", 4, 32),
            sized("10x31", 10, 31),
        ];
        let (kept, removed) = filter_min_size(&ds, &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "4x32");
        assert_eq!(removed[0].reason, RemovalReason::TooFewTurns);
        assert_eq!(removed[1].reason, RemovalReason::TooFewTokens);
    }

    #[test]
    fn band_split_for_default_threshold() {
        let idx = MinHashIndex::for_threshold(0.8);
        assert_eq!((idx.bands, idx.rows), (32, 4));
        assert!(band_miss_probability(0.85, 32, 4) < 1e-8);
        let idx = MinHashIndex::for_threshold(0.5);
        assert_eq!(idx.rows, 2);
    }

    fn naive_jaccard(a: &[u8], b: &[u8]) -> f64 {
        use std::collections::HashSet;
        let sa: HashSet<_> = a.iter().collect();
        let sb: HashSet<_> = b.iter().collect();
        if sa.is_empty() && sb.is_empty() {
            return 1.0;
        }
        sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
    }

    fn text(tokens: &[u8]) -> String {
        tokens
            .iter()
            .map(|t| format!("t{t}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    proptest! {
        #[test]
        fn jaccard_properties(a in prop::collection::vec(0u8..10, 0..12),
                              b in prop::collection::vec(0u8..10, 0..12)) {
            let (ta, tb) = (text(&a), text(&b));
            let ab = jaccard_similarity(&ta, &tb, Shingle::Unigram);
            prop_assert_eq!(ab, jaccard_similarity(&tb, &ta, Shingle::Unigram));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - naive_jaccard(&a, &b)).abs() < 1e-12);
            if !a.is_empty() {
                prop_assert_eq!(jaccard_similarity(&ta, &ta, Shingle::Unigram), 1.0);
            }
        }
    }
}
