//! Canonical dialogue records and the line-delimited corpus format.
//!
//! A corpus file holds one JSON object per line. Dialogue records carry
//! `schema_version`, `id`, `source_dataset`, `roles` and `turns`; parallel
//! records add a non-empty `summaries` array. Turns reference speakers through
//! `role_index` so that renaming a speaker is a single edit of the role table.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Current on-disk schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Control tokens used by the serializer. Raw text may never contain them.
pub const RESERVED_MARKERS: [&str; 6] = ["<s>", "</s>", "<eor>", "<eou>", "<mask>", "<uttr-mask>"];

/// Returns the first reserved marker found in `text`, if any.
pub fn find_reserved_marker(text: &str) -> Option<&'static str> {
    RESERVED_MARKERS.iter().copied().find(|m| text.contains(m))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role_index: usize,
    pub text: String,
}

impl Turn {
    pub fn new(role_index: usize, text: impl Into<String>) -> Self {
        Self {
            role_index,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub source_dataset: String,
    pub roles: Vec<String>,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    pub fn new(
        id: impl Into<String>,
        source_dataset: impl Into<String>,
        roles: Vec<String>,
        turns: Vec<Turn>,
    ) -> Self {
        Self {
            id: id.into(),
            source_dataset: source_dataset.into(),
            roles,
            turns,
        }
    }

    /// Builds a dialogue from `(speaker, text)` pairs. The role table is the
    /// order of first appearance.
    pub fn from_pairs<S: AsRef<str>, T: AsRef<str>>(
        id: impl Into<String>,
        source_dataset: impl Into<String>,
        pairs: &[(S, T)],
    ) -> Self {
        let mut roles: Vec<String> = Vec::new();
        let mut turns = Vec::with_capacity(pairs.len());
        for (speaker, text) in pairs {
            let speaker = speaker.as_ref();
            let role_index = match roles.iter().position(|r| r == speaker) {
                Some(i) => i,
                None => {
                    roles.push(speaker.to_string());
                    roles.len() - 1
                }
            };
            turns.push(Turn::new(role_index, text.as_ref()));
        }
        Self::new(id, source_dataset, roles, turns)
    }

    /// Role name of the given turn.
    ///
    /// Panics if the turn's `role_index` is out of range; validated dialogues
    /// never trigger this.
    pub fn speaker(&self, turn: &Turn) -> &str {
        &self.roles[turn.role_index]
    }

    pub fn utterances(&self) -> impl Iterator<Item = &str> {
        self.turns.iter().map(|t| t.text.as_str())
    }

    /// Every violated invariant. `require_alternation` toggles the dual-turn
    /// rule so that pre-merge dialogues can be checked for everything else.
    pub fn violations(&self, require_alternation: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push(Violation::EmptyId);
        }
        if self.turns.is_empty() {
            out.push(Violation::NoTurns);
        }
        let mut seen = HashSet::new();
        for (index, role) in self.roles.iter().enumerate() {
            if role.trim().is_empty() {
                out.push(Violation::EmptyRoleName { index });
            } else if !seen.insert(role.as_str()) {
                out.push(Violation::DuplicateRoleName { name: role.clone() });
            }
            if let Some(marker) = find_reserved_marker(role) {
                out.push(Violation::ReservedMarkerInRole { index, marker });
            }
        }
        for (turn, t) in self.turns.iter().enumerate() {
            if t.role_index >= self.roles.len() {
                out.push(Violation::RoleIndexOutOfRange {
                    turn,
                    role_index: t.role_index,
                    roles: self.roles.len(),
                });
            }
            if t.text.trim().is_empty() {
                out.push(Violation::EmptyText { turn });
            }
            if let Some(marker) = find_reserved_marker(&t.text) {
                out.push(Violation::ReservedMarkerInText { turn, marker });
            }
            if require_alternation && turn > 0 && self.turns[turn - 1].role_index == t.role_index {
                out.push(Violation::ConsecutiveSameSpeaker { turn });
            }
        }
        out
    }
}

/// Checks every dialogue invariant, including the dual-turn rule.
pub fn validate_dialogue(d: &Dialogue) -> Result<(), Vec<Violation>> {
    let v = d.violations(true);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    NoTurns,
    EmptyRoleName {
        index: usize,
    },
    DuplicateRoleName {
        name: String,
    },
    ReservedMarkerInRole {
        index: usize,
        marker: &'static str,
    },
    RoleIndexOutOfRange {
        turn: usize,
        role_index: usize,
        roles: usize,
    },
    EmptyText {
        turn: usize,
    },
    ReservedMarkerInText {
        turn: usize,
        marker: &'static str,
    },
    ConsecutiveSameSpeaker {
        turn: usize,
    },
    NoSummaries,
    EmptySummary {
        index: usize,
    },
    ReservedMarkerInSummary {
        index: usize,
        marker: &'static str,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId => write!(f, "empty dialogue id"),
            Violation::NoTurns => write!(f, "dialogue has no turns"),
            Violation::EmptyRoleName { index } => write!(f, "empty role name at role {index}"),
            Violation::DuplicateRoleName { name } => write!(f, "duplicate role name {name:?}"),
            Violation::ReservedMarkerInRole { index, marker } => {
                write!(f, "reserved marker {marker} in role name {index}")
            }
            Violation::RoleIndexOutOfRange {
                turn,
                role_index,
                roles,
            } => write!(
                f,
                "role_index out of range at turn {turn}: {role_index} >= {roles} roles"
            ),
            Violation::EmptyText { turn } => write!(f, "empty text at turn {turn}"),
            Violation::ReservedMarkerInText { turn, marker } => {
                write!(f, "reserved marker in text at turn {turn}: {marker}")
            }
            Violation::ConsecutiveSameSpeaker { turn } => {
                write!(f, "consecutive turns share speaker at turn {turn}")
            }
            Violation::NoSummaries => write!(f, "parallel example has no summaries"),
            Violation::EmptySummary { index } => write!(f, "empty summary {index}"),
            Violation::ReservedMarkerInSummary { index, marker } => {
                write!(f, "reserved marker {marker} in summary {index}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryOrigin {
    Annotated,
    Reference,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub text: String,
    pub origin: SummaryOrigin,
}

impl SummaryRecord {
    pub fn new(text: impl Into<String>, origin: SummaryOrigin) -> Self {
        Self {
            text: text.into(),
            origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelExample {
    pub dialogue: Dialogue,
    pub summaries: Vec<SummaryRecord>,
}

impl ParallelExample {
    pub fn new(dialogue: Dialogue, summaries: Vec<SummaryRecord>) -> Self {
        Self {
            dialogue,
            summaries,
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.dialogue.violations(true);
        if self.summaries.is_empty() {
            out.push(Violation::NoSummaries);
        }
        for (index, s) in self.summaries.iter().enumerate() {
            if s.text.trim().is_empty() {
                out.push(Violation::EmptySummary { index });
            }
            if let Some(marker) = find_reserved_marker(&s.text) {
                out.push(Violation::ReservedMarkerInSummary { index, marker });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Dialogues,
    Parallel,
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusKind::Dialogues => "dialogues",
            CorpusKind::Parallel => "parallel",
        })
    }
}

/// A loaded corpus whose kind was detected from its records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Corpus {
    Dialogues(Vec<Dialogue>),
    Parallel(Vec<ParallelExample>),
}

impl Corpus {
    pub fn kind(&self) -> CorpusKind {
        match self {
            Corpus::Dialogues(_) => CorpusKind::Dialogues,
            Corpus::Parallel(_) => CorpusKind::Parallel,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Dialogues(d) => d.len(),
            Corpus::Parallel(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Wire shape of one line. Field order fixes the byte layout.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    schema_version: u32,
    id: String,
    source_dataset: String,
    roles: Vec<String>,
    turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    summaries: Option<Vec<SummaryRecord>>,
}

/// Types that can be stored as one corpus line.
pub trait CorpusRecord: Sized {
    const KIND: CorpusKind;
    fn to_line(&self) -> String;
    fn from_line(line: &str, line_no: usize) -> Result<Self, CorpusError>;
}

fn parse_record(line: &str, line_no: usize) -> Result<Record, CorpusError> {
    let record: Record = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
        line: line_no,
        reason: e.to_string(),
    })?;
    if record.schema_version != SCHEMA_VERSION {
        return Err(CorpusError::MalformedRecord {
            line: line_no,
            reason: format!("unsupported schema_version {}", record.schema_version),
        });
    }
    Ok(record)
}

fn malformed(line: usize, violations: &[Violation]) -> CorpusError {
    let reason = violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    CorpusError::MalformedRecord { line, reason }
}

fn dialogue_record(d: &Dialogue, summaries: Option<Vec<SummaryRecord>>) -> Record {
    Record {
        schema_version: SCHEMA_VERSION,
        id: d.id.clone(),
        source_dataset: d.source_dataset.clone(),
        roles: d.roles.clone(),
        turns: d.turns.clone(),
        summaries,
    }
}

fn record_dialogue(r: Record) -> (Dialogue, Option<Vec<SummaryRecord>>) {
    (
        Dialogue {
            id: r.id,
            source_dataset: r.source_dataset,
            roles: r.roles,
            turns: r.turns,
        },
        r.summaries,
    )
}

fn to_json_line(r: &Record) -> String {
    serde_json::to_string(r).expect("corpus records always serialize")
}

impl CorpusRecord for Dialogue {
    const KIND: CorpusKind = CorpusKind::Dialogues;

    fn to_line(&self) -> String {
        to_json_line(&dialogue_record(self, None))
    }

    fn from_line(line: &str, line_no: usize) -> Result<Self, CorpusError> {
        let (d, summaries) = record_dialogue(parse_record(line, line_no)?);
        if summaries.is_some() {
            return Err(CorpusError::MalformedRecord {
                line: line_no,
                reason: "expected a dialogue record, found `summaries`".into(),
            });
        }
        validate_dialogue(&d).map_err(|v| malformed(line_no, &v))?;
        Ok(d)
    }
}

impl CorpusRecord for ParallelExample {
    const KIND: CorpusKind = CorpusKind::Parallel;

    fn to_line(&self) -> String {
        to_json_line(&dialogue_record(
            &self.dialogue,
            Some(self.summaries.clone()),
        ))
    }

    fn from_line(line: &str, line_no: usize) -> Result<Self, CorpusError> {
        let (dialogue, summaries) = record_dialogue(parse_record(line, line_no)?);
        let Some(summaries) = summaries else {
            return Err(CorpusError::MalformedRecord {
                line: line_no,
                reason: "missing field `summaries`".into(),
            });
        };
        let ex = ParallelExample::new(dialogue, summaries);
        let v = ex.violations();
        if !v.is_empty() {
            return Err(malformed(line_no, &v));
        }
        Ok(ex)
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

/// Loads every record of `path`, validating each. Order is preserved.
pub fn load_corpus<T: CorpusRecord>(path: &Path) -> Result<Vec<T>, CorpusError> {
    read_lines(path)?
        .into_iter()
        .map(|(no, line)| T::from_line(&line, no))
        .collect()
}

/// Loads a corpus, deciding its kind from the first record. An empty file
/// loads as an empty dialogue corpus.
pub fn load_any(path: &Path) -> Result<Corpus, CorpusError> {
    let lines = read_lines(path)?;
    let Some((first_no, first)) = lines.first() else {
        return Ok(Corpus::Dialogues(Vec::new()));
    };
    let probe: serde_json::Value =
        serde_json::from_str(first).map_err(|e| CorpusError::MalformedRecord {
            line: *first_no,
            reason: e.to_string(),
        })?;
    if probe.get("summaries").is_some() {
        lines
            .iter()
            .map(|(no, l)| ParallelExample::from_line(l, *no))
            .collect::<Result<_, _>>()
            .map(Corpus::Parallel)
    } else {
        lines
            .iter()
            .map(|(no, l)| Dialogue::from_line(l, *no))
            .collect::<Result<_, _>>()
            .map(Corpus::Dialogues)
    }
}

/// Writes `records` one per line, replacing `path`. Returns the record count.
pub fn save_corpus<T: CorpusRecord>(records: &[T], path: &Path) -> Result<usize, CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}", r.to_line()).map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))?;
    Ok(records.len())
}

/// Writes any serializable items as JSON lines, replacing `path`.
pub fn write_json_lines<T: Serialize>(items: &[T], path: &Path) -> Result<usize, CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| CorpusError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))?;
    Ok(items.len())
}

pub fn save_any(corpus: &Corpus, path: &Path) -> Result<usize, CorpusError> {
    match corpus {
        Corpus::Dialogues(d) => save_corpus(d, path),
        Corpus::Parallel(p) => save_corpus(p, path),
    }
}

/// Append-only record writer; every record is flushed as soon as it is
/// written so an interrupted run leaves only complete lines behind.
pub struct AppendWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl AppendWriter {
    pub fn open(path: &Path) -> Result<Self, CorpusError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CorpusError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn append_line(&mut self, line: &str) -> Result<(), CorpusError> {
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| CorpusError::io(&self.path, e))
    }

    pub fn append<T: CorpusRecord>(&mut self, record: &T) -> Result<(), CorpusError> {
        self.append_line(&record.to_line())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    pub kind: String,
    pub examples: usize,
    pub created_with_seed: Option<u64>,
    pub source_datasets: Vec<String>,
}

impl CorpusManifest {
    pub fn describe(name: impl Into<String>, corpus: &Corpus, seed: Option<u64>) -> Self {
        let datasets: BTreeSet<String> = match corpus {
            Corpus::Dialogues(ds) => ds.iter().map(|d| d.source_dataset.clone()).collect(),
            Corpus::Parallel(ps) => ps
                .iter()
                .map(|p| p.dialogue.source_dataset.clone())
                .collect(),
        };
        Self {
            name: name.into(),
            kind: corpus.kind().to_string(),
            examples: corpus.len(),
            created_with_seed: seed,
            source_datasets: datasets.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_turn() -> Dialogue {
        Dialogue::from_pairs(
            "d1",
            "samsum",
            &[("Danny", "hi there"), ("Alejandra", "hello")],
        )
    }

    #[test]
    fn well_formed_dialogue_validates() {
        let d = Dialogue::new(
            "x",
            "t",
            vec!["A".into(), "B".into()],
            vec![Turn::new(0, "a"), Turn::new(1, "b"), Turn::new(0, "c")],
        );
        assert_eq!(validate_dialogue(&d), Ok(()));
    }

    #[test]
    fn consecutive_speaker_is_reported() {
        let d = Dialogue::new(
            "x",
            "t",
            vec!["A".into(), "B".into()],
            vec![Turn::new(0, "a"), Turn::new(0, "b")],
        );
        let v = validate_dialogue(&d).unwrap_err();
        assert_eq!(v, vec![Violation::ConsecutiveSameSpeaker { turn: 1 }]);
        assert!(v[0].to_string().contains("consecutive turns share speaker"));
    }

    #[test]
    fn reserved_marker_is_reported() {
        let d = Dialogue::from_pairs("x", "t", &[("A", "hello <eou> there")]);
        let v = validate_dialogue(&d).unwrap_err();
        assert!(v[0].to_string().contains("reserved marker in text"));
    }

    #[test]
    fn every_violation_is_listed() {
        let d = Dialogue::new(
            "",
            "t",
            vec!["A".into(), "A".into(), " ".into()],
            vec![
                Turn::new(0, "<mask>"),
                Turn::new(0, "  "),
                Turn::new(7, "ok"),
            ],
        );
        let v = d.violations(true);
        assert!(v.contains(&Violation::EmptyId));
        assert!(v.contains(&Violation::DuplicateRoleName { name: "A".into() }));
        assert!(v.contains(&Violation::EmptyRoleName { index: 2 }));
        assert!(v.contains(&Violation::ReservedMarkerInText {
            turn: 0,
            marker: "<mask>"
        }));
        assert!(v.contains(&Violation::EmptyText { turn: 1 }));
        assert!(v.contains(&Violation::ConsecutiveSameSpeaker { turn: 1 }));
        assert!(v.contains(&Violation::RoleIndexOutOfRange {
            turn: 2,
            role_index: 7,
            roles: 3
        }));
        assert!(d
            .violations(false)
            .iter()
            .all(|x| !matches!(x, Violation::ConsecutiveSameSpeaker { .. })));
    }

    #[test]
    fn save_load_roundtrip_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let ds = vec![two_turn()];
        assert_eq!(save_corpus(&ds, &a).unwrap(), 1);
        let back: Vec<Dialogue> = load_corpus(&a).unwrap();
        assert_eq!(back, ds);
        save_corpus(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn empty_corpus_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        assert_eq!(save_corpus::<Dialogue>(&[], &p).unwrap(), 0);
        assert_eq!(std::fs::read(&p).unwrap().len(), 0);
        assert!(load_corpus::<Dialogue>(&p).unwrap().is_empty());
    }

    #[test]
    fn missing_turns_field_is_malformed() {
        let line = r#"{"schema_version":1,"id":"a","source_dataset":"t","roles":["A"]}"#;
        match Dialogue::from_line(line, 3) {
            Err(CorpusError::MalformedRecord { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("turns"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_role_index_is_malformed() {
        let line = r#"{"schema_version":1,"id":"a","source_dataset":"t","roles":["A","B"],"turns":[{"role_index":5,"text":"hi"}]}"#;
        match Dialogue::from_line(line, 1) {
            Err(CorpusError::MalformedRecord { reason, .. }) => {
                assert!(reason.contains("role_index out of range"), "{reason}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kind_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        let ex = ParallelExample::new(
            two_turn(),
            vec![SummaryRecord::new(
                "Danny greets.",
                SummaryOrigin::Annotated,
            )],
        );
        save_corpus(std::slice::from_ref(&ex), &p).unwrap();
        assert_eq!(load_any(&p).unwrap(), Corpus::Parallel(vec![ex]));
        assert!(load_corpus::<Dialogue>(&p).is_err());
    }

    #[test]
    fn unknown_schema_version_is_rejected() {
        let line = r#"{"schema_version":9,"id":"a","source_dataset":"t","roles":["A"],"turns":[{"role_index":0,"text":"hi"}]}"#;
        assert!(matches!(
            Dialogue::from_line(line, 1),
            Err(CorpusError::MalformedRecord { .. })
        ));
    }
}
