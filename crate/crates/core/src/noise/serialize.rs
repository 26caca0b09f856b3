//! Flat token sequence with role/utterance markers and a speaker-id track.
//!
//! A dialogue serializes to `<s> R1 <eor> U1 <eou> ... Rm <eor> Um <eou> </s>`
//! with whitespace-split role and utterance tokens. Speaker ids are 0 for the
//! first turn and flip at every turn boundary; `<s>` takes the first turn's id
//! and `</s>` the last turn's. Bare tokens between turns (the infilling
//! `<mask>`) take the id of the turn before them.

use serde::{Deserialize, Serialize};

use crate::corpus::Dialogue;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const EOR: &str = "<eor>";
pub const EOU: &str = "<eou>";
pub const MASK: &str = "<mask>";
pub const UTTR_MASK: &str = "<uttr-mask>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedInput {
    pub tokens: Vec<String>,
    pub speaker_ids: Vec<u8>,
}

impl SerializedInput {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn count(&self, token: &str) -> usize {
        self.tokens.iter().filter(|t| *t == token).count()
    }
}

pub(crate) fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

/// Incremental serializer used by every objective.
pub(crate) struct Builder {
    tokens: Vec<String>,
    ids: Vec<u8>,
    turns: usize,
    current: u8,
}

impl Builder {
    pub fn new() -> Self {
        Self {
            tokens: vec![BOS.to_string()],
            ids: vec![0],
            turns: 0,
            current: 0,
        }
    }

    pub fn turn<R, U>(&mut self, role: R, utterance: U)
    where
        R: IntoIterator<Item = String>,
        U: IntoIterator<Item = String>,
    {
        let id = if self.turns == 0 { 0 } else { 1 - self.current };
        self.current = id;
        self.turns += 1;
        for t in role {
            self.push(t, id);
        }
        self.push(EOR.to_string(), id);
        for t in utterance {
            self.push(t, id);
        }
        self.push(EOU.to_string(), id);
    }

    pub fn bare(&mut self, token: &str) {
        let id = self.current;
        self.push(token.to_string(), id);
    }

    fn push(&mut self, token: String, id: u8) {
        self.tokens.push(token);
        self.ids.push(id);
    }

    pub fn finish(mut self) -> SerializedInput {
        let id = self.current;
        self.push(EOS.to_string(), id);
        SerializedInput {
            tokens: self.tokens,
            speaker_ids: self.ids,
        }
    }
}

/// Per-turn speaker ids: 0 for the first turn, flipping on every turn.
pub fn assign_speaker_ids(d: &Dialogue) -> Vec<u8> {
    (0..d.turns.len()).map(|i| (i % 2) as u8).collect()
}

pub fn serialize_dialogue(d: &Dialogue) -> SerializedInput {
    let mut b = Builder::new();
    for t in &d.turns {
        b.turn(words(d.speaker(t)), words(&t.text));
    }
    b.finish()
}

/// One structural unit of a serialized sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Turn {
        role: Vec<String>,
        utterance: Vec<String>,
        speaker_id: u8,
    },
    /// A token standing between turns.
    Bare(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SerializeError {
    #[error("sequence must start with <s> and end with </s>")]
    Frame,
    #[error("token {index}: {reason}")]
    Structure { index: usize, reason: String },
    #[error("speaker track has {ids} ids for {tokens} tokens")]
    TrackLength { tokens: usize, ids: usize },
    #[error("sequence contains corruption token {0}")]
    Corrupted(String),
}

fn is_marker(t: &str) -> bool {
    matches!(t, BOS | EOS | EOR | EOU | MASK | UTTR_MASK)
}

/// Splits a serialized sequence into turns and bare tokens, checking the
/// marker structure.
pub fn parse_segments(input: &SerializedInput) -> Result<Vec<Segment>, SerializeError> {
    let toks = &input.tokens;
    if toks.len() != input.speaker_ids.len() {
        return Err(SerializeError::TrackLength {
            tokens: toks.len(),
            ids: input.speaker_ids.len(),
        });
    }
    if toks.len() < 2 || toks[0] != BOS || toks[toks.len() - 1] != EOS {
        return Err(SerializeError::Frame);
    }
    let end = toks.len() - 1;
    let structure = |index: usize, reason: &str| SerializeError::Structure {
        index,
        reason: reason.to_string(),
    };
    let mut out = Vec::new();
    let mut i = 1;
    while i < end {
        if toks[i] == MASK {
            out.push(Segment::Bare(MASK.to_string()));
            i += 1;
            continue;
        }
        let speaker_id = input.speaker_ids[i];
        let mut role = Vec::new();
        while i < end && toks[i] != EOR {
            if is_marker(&toks[i]) {
                return Err(structure(i, "marker inside a role name"));
            }
            role.push(toks[i].clone());
            i += 1;
        }
        if i == end {
            return Err(structure(i, "role without <eor>"));
        }
        if role.is_empty() {
            return Err(structure(i, "empty role name"));
        }
        i += 1;
        let mut utterance = Vec::new();
        while i < end && toks[i] != EOU {
            if matches!(toks[i].as_str(), BOS | EOS | EOR) {
                return Err(structure(i, "unexpected marker inside an utterance"));
            }
            utterance.push(toks[i].clone());
            i += 1;
        }
        if i == end {
            return Err(structure(i, "utterance without <eou>"));
        }
        i += 1;
        out.push(Segment::Turn {
            role,
            utterance,
            speaker_id,
        });
    }
    Ok(out)
}

/// Rebuilds a dialogue from a clean serialization. The role table comes out
/// in order of first appearance.
pub fn deserialize_dialogue(
    input: &SerializedInput,
    id: &str,
    source_dataset: &str,
) -> Result<Dialogue, SerializeError> {
    let mut pairs = Vec::new();
    for seg in parse_segments(input)? {
        match seg {
            Segment::Bare(t) => return Err(SerializeError::Corrupted(t)),
            Segment::Turn {
                role, utterance, ..
            } => {
                if let Some(t) = utterance.iter().find(|t| is_marker(t)) {
                    return Err(SerializeError::Corrupted(t.clone()));
                }
                pairs.push((role.join(" "), utterance.join(" ")));
            }
        }
    }
    Ok(Dialogue::from_pairs(id, source_dataset, &pairs))
}

/// The form serialization preserves: whitespace-collapsed texts and role
/// names, role table in order of first use.
pub fn canonicalize(d: &Dialogue) -> Dialogue {
    let pairs: Vec<(String, String)> = d
        .turns
        .iter()
        .map(|t| (words(d.speaker(t)).join(" "), words(&t.text).join(" ")))
        .collect();
    Dialogue::from_pairs(d.id.clone(), d.source_dataset.clone(), &pairs)
}

/// Checks that ids flip exactly between consecutive turns, that every token
/// of a turn shares its id, that bare tokens carry the preceding id, and
/// that the frame tokens follow the first and last turn.
pub fn check_speaker_track(input: &SerializedInput) -> Result<(), SerializeError> {
    let segs = parse_segments(input)?;
    let bad = |reason: &str| SerializeError::Structure {
        index: 0,
        reason: reason.to_string(),
    };
    let mut pos = 1;
    let mut current: Option<u8> = None;
    for seg in &segs {
        match seg {
            Segment::Bare(_) => {
                if input.speaker_ids[pos] != current.unwrap_or(0) {
                    return Err(bad("bare token id differs from the preceding turn"));
                }
                pos += 1;
            }
            Segment::Turn {
                role,
                utterance,
                speaker_id,
            } => {
                let expected = current.map_or(0, |c| 1 - c);
                if *speaker_id != expected {
                    return Err(bad("speaker ids do not alternate"));
                }
                let width = role.len() + utterance.len() + 2;
                if input.speaker_ids[pos..pos + width]
                    .iter()
                    .any(|id| id != speaker_id)
                {
                    return Err(bad("speaker id changes inside a turn"));
                }
                current = Some(expected);
                pos += width;
            }
        }
    }
    let first = segs
        .iter()
        .find_map(|s| match s {
            Segment::Turn { speaker_id, .. } => Some(*speaker_id),
            Segment::Bare(_) => None,
        })
        .unwrap_or(0);
    if input.speaker_ids[0] != first || *input.speaker_ids.last().unwrap() != current.unwrap_or(0) {
        return Err(bad("frame token ids do not match the adjacent turns"));
    }
    Ok(())
}
