use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::gap::select_gap_utterances;
use super::poisson::sample_poisson;
use super::serialize::{serialize_dialogue, words, Builder, MASK, UTTR_MASK};
use super::{round_half_up, NoiseError, NoisedPair, NoisingConfig, Target, Task};
use crate::corpus::{Dialogue, ParallelExample, SummaryOrigin};

fn reconstruction(task: Task, d: &Dialogue, source: super::SerializedInput) -> NoisedPair {
    NoisedPair {
        task,
        dialogue_id: d.id.clone(),
        source,
        target: Target::Dialogue(serialize_dialogue(d)),
        summary_origin: None,
    }
}

fn role_words(d: &Dialogue, turn: usize) -> Vec<String> {
    words(d.speaker(&d.turns[turn]))
}

/// Replaces `round(rate·n)` tokens of each `n`-token utterance with `<mask>`.
pub fn token_masking<R: Rng + ?Sized>(
    d: &Dialogue,
    cfg: &NoisingConfig,
    rng: &mut R,
) -> NoisedPair {
    let mut b = Builder::new();
    for (i, t) in d.turns.iter().enumerate() {
        let mut utt = words(&t.text);
        let k = round_half_up(cfg.token_mask_rate * utt.len() as f64).min(utt.len());
        for pos in index::sample(rng, utt.len(), k) {
            utt[pos] = MASK.to_string();
        }
        b.turn(role_words(d, i), utt);
    }
    reconstruction(Task::TokenMask, d, b.finish())
}

/// Deletes `round(rate·N)` utterance tokens drawn over the whole dialogue.
pub fn token_deletion<R: Rng + ?Sized>(
    d: &Dialogue,
    cfg: &NoisingConfig,
    rng: &mut R,
) -> NoisedPair {
    let utts: Vec<Vec<String>> = d.turns.iter().map(|t| words(&t.text)).collect();
    let total: usize = utts.iter().map(Vec::len).sum();
    let k = round_half_up(cfg.token_delete_rate * total as f64).min(total);
    let mut deleted = vec![false; total];
    for pos in index::sample(rng, total, k) {
        deleted[pos] = true;
    }
    let mut b = Builder::new();
    let mut flat = 0;
    for (i, utt) in utts.into_iter().enumerate() {
        let mut kept = Vec::with_capacity(utt.len());
        for w in utt {
            if !deleted[flat] {
                kept.push(w);
            }
            flat += 1;
        }
        b.turn(role_words(d, i), kept);
    }
    reconstruction(Task::TokenDelete, d, b.finish())
}

/// A run of `len` consecutive turns starting at turn `start`. A zero-length
/// span marks an insertion point before turn `start` (`start == turns`
/// means after the last turn).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfillSpan {
    pub start: usize,
    pub len: usize,
}

/// Draws infilling spans for a dialogue with `turns` turns.
///
/// Lengths come from Poisson(λ) clipped to the unspent budget
/// `round(budget_rate·turns)`; positive spans are placed uniformly among the
/// positions where they do not overlap an earlier span (shortened to the
/// longest free run if none fits). Zero-length spans pick a boundary
/// uniformly. Sampling stops once the budget is spent or after a bounded
/// number of draws.
pub fn sample_infill_spans<R: Rng + ?Sized>(
    turns: usize,
    cfg: &NoisingConfig,
    rng: &mut R,
) -> Vec<InfillSpan> {
    let budget = round_half_up(cfg.infill_utterance_budget_rate * turns as f64).min(turns);
    let mut covered = vec![false; turns];
    let mut spans = Vec::new();
    let mut spent = 0;
    let max_draws = 8 * (turns + 1);
    let mut draws = 0;
    while spent < budget && draws < max_draws {
        draws += 1;
        let mut len = (sample_poisson(cfg.infill_lambda, rng) as usize).min(budget - spent);
        if len == 0 {
            spans.push(InfillSpan {
                start: rng.random_range(0..=turns),
                len: 0,
            });
            continue;
        }
        let longest = longest_free_run(&covered);
        len = len.min(longest);
        let starts: Vec<usize> = (0..=turns - len)
            .filter(|&s| covered[s..s + len].iter().all(|c| !c))
            .collect();
        let start = starts[rng.random_range(0..starts.len())];
        covered[start..start + len]
            .iter_mut()
            .for_each(|c| *c = true);
        spans.push(InfillSpan { start, len });
        spent += len;
    }
    spans.sort_by_key(|s| (s.start, s.len));
    spans
}

fn longest_free_run(covered: &[bool]) -> usize {
    let (mut best, mut run) = (0, 0);
    for &c in covered {
        run = if c { 0 } else { run + 1 };
        best = best.max(run);
    }
    best
}

/// Serializes `d` with each positive span collapsed to one `<mask>` and a
/// `<mask>` inserted for each zero-length span. An insertion point strictly
/// inside a removed span moves to that span's start, so every span still
/// contributes exactly one `<mask>`.
///
/// Panics if positive spans overlap or run past the last turn.
pub fn apply_infill_spans(d: &Dialogue, spans: &[InfillSpan]) -> super::SerializedInput {
    let n = d.turns.len();
    let mut span_len: Vec<Option<usize>> = vec![None; n];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for s in spans.iter().filter(|s| s.len > 0) {
        assert!(s.start + s.len <= n, "span {s:?} runs past {n} turns");
        for o in &mut owner[s.start..s.start + s.len] {
            assert!(o.is_none(), "overlapping infill spans");
            *o = Some(s.start);
        }
        span_len[s.start] = Some(s.len);
    }
    let mut inserts = vec![0usize; n + 1];
    for s in spans.iter().filter(|s| s.len == 0) {
        assert!(s.start <= n, "insertion point {} past {n} turns", s.start);
        let b = s.start;
        let pos = if b > 0 && b < n && owner[b].is_some() && owner[b] == owner[b - 1] {
            owner[b].unwrap()
        } else {
            b
        };
        inserts[pos] += 1;
    }

    let mut b = Builder::new();
    let mut i = 0;
    loop {
        for _ in 0..inserts[i] {
            b.bare(MASK);
        }
        if i == n {
            break;
        }
        match span_len[i] {
            Some(len) => {
                b.bare(MASK);
                i += len;
            }
            None => {
                b.turn(role_words(d, i), words(&d.turns[i].text));
                i += 1;
            }
        }
    }
    b.finish()
}

pub fn utterance_infilling<R: Rng + ?Sized>(
    d: &Dialogue,
    cfg: &NoisingConfig,
    rng: &mut R,
) -> NoisedPair {
    let spans = sample_infill_spans(d.turns.len(), cfg, rng);
    reconstruction(Task::UttrInfill, d, apply_infill_spans(d, &spans))
}

/// Shuffles utterances across turn slots; the role sequence stays put.
pub fn utterance_permutation<R: Rng + ?Sized>(
    d: &Dialogue,
    _cfg: &NoisingConfig,
    rng: &mut R,
) -> NoisedPair {
    let mut order: Vec<usize> = (0..d.turns.len()).collect();
    order.shuffle(rng);
    let mut b = Builder::new();
    for (slot, &from) in order.iter().enumerate() {
        b.turn(role_words(d, slot), words(&d.turns[from].text));
    }
    reconstruction(Task::UttrPermute, d, b.finish())
}

/// Number of gap utterances masked in a dialogue of `turns` turns.
pub fn uttr_mask_count(turns: usize, rate: f64) -> usize {
    round_half_up(rate * turns as f64).max(1).min(turns)
}

/// Replaces the greedily selected gap utterances with `<uttr-mask>`, keeping
/// their roles and markers. Selection is deterministic, so `rng` is unused.
pub fn utterance_masking<R: Rng + ?Sized>(
    d: &Dialogue,
    cfg: &NoisingConfig,
    _rng: &mut R,
) -> NoisedPair {
    let k = uttr_mask_count(d.turns.len(), cfg.uttr_mask_rate);
    let gaps = select_gap_utterances(d, k, cfg.gap_counting);
    let mut masked = vec![false; d.turns.len()];
    for g in gaps {
        masked[g] = true;
    }
    let mut b = Builder::new();
    for (i, t) in d.turns.iter().enumerate() {
        let utt = if masked[i] {
            vec![UTTR_MASK.to_string()]
        } else {
            words(&t.text)
        };
        b.turn(role_words(d, i), utt);
    }
    reconstruction(Task::UttrMask, d, b.finish())
}

/// Clean dialogue to summary. Uses the first annotated summary, falling back
/// to the first summary of any origin.
pub fn make_task_oriented_pair(ex: &ParallelExample) -> Result<NoisedPair, NoiseError> {
    let chosen = ex
        .summaries
        .iter()
        .find(|s| s.origin == SummaryOrigin::Annotated)
        .or_else(|| ex.summaries.first())
        .ok_or_else(|| NoiseError::NoSummary(ex.dialogue.id.clone()))?;
    Ok(NoisedPair {
        task: Task::TaskOriented,
        dialogue_id: ex.dialogue.id.clone(),
        source: serialize_dialogue(&ex.dialogue),
        target: Target::Summary(words(&chosen.text)),
        summary_origin: Some(chosen.origin),
    })
}

/// Runs one of the five reconstruction objectives.
///
/// Panics on [`Task::TaskOriented`], which needs a summary.
pub fn apply_denoising<R: Rng + ?Sized>(
    task: Task,
    d: &Dialogue,
    cfg: &NoisingConfig,
    rng: &mut R,
) -> NoisedPair {
    match task {
        Task::TokenMask => token_masking(d, cfg, rng),
        Task::TokenDelete => token_deletion(d, cfg, rng),
        Task::UttrInfill => utterance_infilling(d, cfg, rng),
        Task::UttrPermute => utterance_permutation(d, cfg, rng),
        Task::UttrMask => utterance_masking(d, cfg, rng),
        Task::TaskOriented => panic!("task_oriented is not a reconstruction objective"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SummaryRecord;
    use crate::noise::serialize::{check_speaker_track, parse_segments, Segment, EOR, EOU};
    use crate::seed::derive_rng;

    fn dlg(utts: &[&str]) -> Dialogue {
        let pairs: Vec<(&str, &str)> = utts
            .iter()
            .enumerate()
            .map(|(i, u)| (if i % 2 == 0 { "Ann" } else { "Bo" }, *u))
            .collect();
        Dialogue::from_pairs("d", "t", &pairs)
    }

    fn utterances(s: &super::super::SerializedInput) -> Vec<Vec<String>> {
        parse_segments(s)
            .unwrap()
            .into_iter()
            .filter_map(|seg| match seg {
                Segment::Turn { utterance, .. } => Some(utterance),
                Segment::Bare(_) => None,
            })
            .collect()
    }

    #[test]
    fn masking_counts() {
        let d = dlg(&["a b c d e f g h i j", "x y"]);
        let cfg = NoisingConfig::default();
        let p = token_masking(&d, &cfg, &mut derive_rng(1, "d", 0));
        let u = utterances(&p.source);
        assert_eq!(u[0].iter().filter(|t| *t == MASK).count(), 2);
        assert_eq!(u[1], vec!["x", "y"]);
        check_speaker_track(&p.source).unwrap();
        let zero = NoisingConfig {
            token_mask_rate: 0.0,
            ..cfg
        };
        let p = token_masking(&d, &zero, &mut derive_rng(1, "d", 0));
        assert_eq!(Target::Dialogue(p.source.clone()), p.target);
    }

    #[test]
    fn deletion_counts_and_empty_utterance() {
        let d = dlg(&["a b c d e f g h i j", "k l m n o p q r s t"]);
        let cfg = NoisingConfig::default();
        let p = token_deletion(&d, &cfg, &mut derive_rng(1, "d", 0));
        let Target::Dialogue(t) = &p.target else {
            panic!()
        };
        assert_eq!(p.source.len(), t.len() - 4);

        let d = dlg(&["gone", "a b c d"]);
        let all = NoisingConfig {
            token_delete_rate: 1.0,
            ..cfg
        };
        let p = token_deletion(&d, &all, &mut derive_rng(1, "d", 0));
        assert_eq!(
            p.source.tokens,
            ["<s>", "Ann", EOR, EOU, "Bo", EOR, EOU, "</s>"]
        );
    }

    #[test]
    fn infill_hand_span() {
        let d = dlg(&["one", "two", "three", "four", "five"]);
        // Turns 2 and 3 in one-based numbering.
        let s = apply_infill_spans(&d, &[InfillSpan { start: 1, len: 2 }]);
        let expect = "<s> Ann <eor> one <eou> <mask> Bo <eor> four <eou> Ann <eor> five <eou> </s>";
        assert_eq!(s.tokens.join(" "), expect);
        check_speaker_track(&s).unwrap();

        let s = apply_infill_spans(&d, &[InfillSpan { start: 5, len: 0 }]);
        assert_eq!(s.len(), serialize_dialogue(&d).len() + 1);
        assert_eq!(s.tokens[s.len() - 2], MASK);

        // An insertion inside a removed span lands at the span start.
        let s = apply_infill_spans(
            &d,
            &[
                InfillSpan { start: 1, len: 3 },
                InfillSpan { start: 2, len: 0 },
            ],
        );
        assert_eq!(
            s.tokens.join(" "),
            "<s> Ann <eor> one <eou> <mask> <mask> Ann <eor> five <eou> </s>"
        );
    }

    #[test]
    fn infill_budget() {
        let cfg = NoisingConfig::default();
        for seed in 0..200 {
            let spans = sample_infill_spans(10, &cfg, &mut derive_rng(seed, "d", 0));
            let spent: usize = spans.iter().map(|s| s.len).sum();
            assert_eq!(spent, 2);
        }
        let zero = NoisingConfig {
            infill_utterance_budget_rate: 0.0,
            ..cfg
        };
        assert!(sample_infill_spans(10, &zero, &mut derive_rng(0, "d", 0)).is_empty());
    }

    #[test]
    fn permutation_keeps_roles() {
        let d = dlg(&["u1", "u2", "u3", "u4", "u5", "u6"]);
        let p = utterance_permutation(&d, &NoisingConfig::default(), &mut derive_rng(4, "d", 0));
        let segs = parse_segments(&p.source).unwrap();
        let roles: Vec<String> = segs
            .iter()
            .map(|s| match s {
                Segment::Turn { role, .. } => role.join(" "),
                Segment::Bare(_) => unreachable!(),
            })
            .collect();
        assert_eq!(roles, ["Ann", "Bo", "Ann", "Bo", "Ann", "Bo"]);
        let mut got: Vec<String> = utterances(&p.source)
            .into_iter()
            .map(|u| u.join(" "))
            .collect();
        got.sort();
        assert_eq!(got, ["u1", "u2", "u3", "u4", "u5", "u6"]);
    }

    #[test]
    fn uttr_mask_minimum() {
        let cfg = NoisingConfig::default();
        assert_eq!(uttr_mask_count(5, 0.2), 1);
        assert_eq!(uttr_mask_count(1, 0.2), 1);
        assert_eq!(uttr_mask_count(13, 0.2), 3);
        let d = dlg(&["only one"]);
        let p = utterance_masking(&d, &cfg, &mut derive_rng(0, "d", 0));
        assert_eq!(
            p.source.tokens.join(" "),
            "<s> Ann <eor> <uttr-mask> <eou> </s>"
        );
    }

    #[test]
    fn task_oriented_fallback() {
        let d = dlg(&["hi", "hello"]);
        let ex = ParallelExample::new(
            d.clone(),
            vec![
                SummaryRecord::new("ref one", SummaryOrigin::Reference),
                SummaryRecord::new("gen one", SummaryOrigin::Annotated),
            ],
        );
        let p = make_task_oriented_pair(&ex).unwrap();
        assert_eq!(p.target, Target::Summary(vec!["gen".into(), "one".into()]));
        assert!(!p.is_fallback());
        let ex = ParallelExample::new(
            d.clone(),
            vec![SummaryRecord::new("ref one", SummaryOrigin::Reference)],
        );
        let p = make_task_oriented_pair(&ex).unwrap();
        assert!(p.is_fallback());
        assert_eq!(p.source, serialize_dialogue(&d));
        let ex = ParallelExample::new(d, vec![]);
        assert!(matches!(
            make_task_oriented_pair(&ex),
            Err(NoiseError::NoSummary(_))
        ));
    }
}
