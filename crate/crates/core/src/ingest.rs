//! Raw dataset exports to canonical dialogues.
//!
//! Sources are line-delimited JSON. Two layouts are accepted:
//!
//! - **row layout** (default): one utterance per line, with the dialogue id,
//!   speaker and utterance in the fields named by [`IngestSpec`]. Rows sharing
//!   an id form one dialogue; dialogues are emitted in order of first
//!   appearance and rows keep file order within a dialogue.
//! - **dialogue layout** (`turns_field` set): one dialogue per line, its turns
//!   stored as an array of objects holding the speaker and utterance fields.
//!
//! Every utterance goes through [`normalize_text`]; utterances that end up
//! empty are dropped, then consecutive turns of one speaker are merged with a
//! single space. The role table lists speakers in order of first appearance
//! after aliasing.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{find_reserved_marker, Dialogue, Turn};

/// Maps a source's fields onto the canonical record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSpec {
    pub dataset_tag: String,
    pub speaker_field: String,
    pub utterance_field: String,
    pub id_field: String,
    /// When set, each line is a whole dialogue and this field holds its turns.
    #[serde(default)]
    pub turns_field: Option<String>,
    /// Speaker renames applied before the role table is built.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

impl IngestSpec {
    pub fn new(
        dataset_tag: impl Into<String>,
        id_field: impl Into<String>,
        speaker_field: impl Into<String>,
        utterance_field: impl Into<String>,
    ) -> Self {
        Self {
            dataset_tag: dataset_tag.into(),
            speaker_field: speaker_field.into(),
            utterance_field: utterance_field.into(),
            id_field: id_field.into(),
            turns_field: None,
            aliases: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let fields = [
            ("dataset_tag", &self.dataset_tag),
            ("speaker_field", &self.speaker_field),
            ("utterance_field", &self.utterance_field),
            ("id_field", &self.id_field),
        ];
        for (key, value) in fields {
            if value.trim().is_empty() {
                return Err(IngestError::InvalidSpec(format!(
                    "`{key}` must be non-empty"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: field `{name}` not found")]
    UnmappedField { line: usize, name: String },
    #[error("invalid ingest spec: {0}")]
    InvalidSpec(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedDialogue {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub dataset_tag: String,
    pub records_read: usize,
    pub dialogues_out: usize,
    /// Utterances read before normalization and merging.
    pub utterances_in: usize,
    pub empty_utterances_dropped: usize,
    pub turns_merged: usize,
    pub dropped_dialogues: Vec<DroppedDialogue>,
}

fn plain_replacement(c: char) -> Option<&'static str> {
    Some(match c {
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' | '\u{02BC}' | '`' => "'",
        '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' | '\u{00AB}'
        | '\u{00BB}' => "\"",
        '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}'
        | '\u{2212}' => "-",
        '\u{2026}' => "...",
        '\u{200B}' | '\u{200C}' | '\u{200D}' | '\u{2060}' | '\u{FEFF}' | '\u{00AD}' => "",
        _ => return None,
    })
}

/// Normalizes punctuation and whitespace.
///
/// Curly quotes, primes and guillemets become `'` or `"`, every dash variant
/// becomes `-`, the ellipsis character becomes `...`, zero-width characters
/// and other control characters are removed, and whitespace runs collapse to
/// one space with both ends trimmed. Letter case is left alone.
pub fn normalize_text(raw: &str) -> String {
    let mut mapped = String::with_capacity(raw.len());
    for c in raw.chars() {
        if let Some(rep) = plain_replacement(c) {
            mapped.push_str(rep);
        } else if c.is_whitespace() {
            mapped.push(' ');
        } else if c.is_control() {
            continue;
        } else {
            mapped.push(c);
        }
    }
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Merges consecutive turns of the same speaker, joining their texts with a
/// single space.
pub fn merge_same_speaker(d: &Dialogue) -> Dialogue {
    let mut turns: Vec<Turn> = Vec::with_capacity(d.turns.len());
    for t in &d.turns {
        match turns.last_mut() {
            Some(prev) if prev.role_index == t.role_index => {
                prev.text.push(' ');
                prev.text.push_str(&t.text);
            }
            _ => turns.push(t.clone()),
        }
    }
    Dialogue {
        id: d.id.clone(),
        source_dataset: d.source_dataset.clone(),
        roles: d.roles.clone(),
        turns,
    }
}

struct RawDialogue {
    id: String,
    rows: Vec<(String, String)>,
}

fn field<'a>(obj: &'a Value, name: &str, line: usize) -> Result<&'a Value, IngestError> {
    obj.get(name).ok_or_else(|| IngestError::UnmappedField {
        line,
        name: name.to_string(),
    })
}

fn text_field(obj: &Value, name: &str, line: usize) -> Result<String, IngestError> {
    match field(obj, name, line)? {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Null => Ok(String::new()),
        other => Err(IngestError::MalformedRecord {
            line,
            reason: format!("field `{name}` must be text, found {other}"),
        }),
    }
}

fn id_field(obj: &Value, name: &str, line: usize) -> Result<String, IngestError> {
    let id = text_field(obj, name, line)?;
    if id.trim().is_empty() {
        return Err(IngestError::MalformedRecord {
            line,
            reason: format!("empty `{name}`"),
        });
    }
    Ok(id)
}

fn parse_line(line: &str, line_no: usize) -> Result<Value, IngestError> {
    let v: Value = serde_json::from_str(line).map_err(|e| IngestError::MalformedRecord {
        line: line_no,
        reason: e.to_string(),
    })?;
    if !v.is_object() {
        return Err(IngestError::MalformedRecord {
            line: line_no,
            reason: "record is not an object".into(),
        });
    }
    Ok(v)
}

fn collect_raw<R: BufRead>(
    reader: R,
    spec: &IngestSpec,
    report: &mut IngestReport,
) -> Result<Vec<RawDialogue>, IngestError> {
    let mut raws: Vec<RawDialogue> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IngestError::Io {
            path: PathBuf::from("<input>"),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.records_read += 1;
        let obj = parse_line(&line, line_no)?;
        let id = id_field(&obj, &spec.id_field, line_no)?;
        let slot = *by_id.entry(id.clone()).or_insert_with(|| {
            raws.push(RawDialogue {
                id,
                rows: Vec::new(),
            });
            raws.len() - 1
        });
        match &spec.turns_field {
            None => {
                let speaker = text_field(&obj, &spec.speaker_field, line_no)?;
                let text = text_field(&obj, &spec.utterance_field, line_no)?;
                raws[slot].rows.push((speaker, text));
            }
            Some(turns_name) => {
                let Value::Array(turns) = field(&obj, turns_name, line_no)? else {
                    return Err(IngestError::MalformedRecord {
                        line: line_no,
                        reason: format!("field `{turns_name}` must be an array"),
                    });
                };
                for t in turns {
                    let speaker = text_field(t, &spec.speaker_field, line_no)?;
                    let text = text_field(t, &spec.utterance_field, line_no)?;
                    raws[slot].rows.push((speaker, text));
                }
            }
        }
    }
    Ok(raws)
}

fn canonical_speaker(raw: &str, spec: &IngestSpec) -> String {
    let name = normalize_text(raw);
    spec.aliases.get(&name).cloned().unwrap_or(name)
}

fn build_dialogue(
    raw: RawDialogue,
    spec: &IngestSpec,
    report: &mut IngestReport,
) -> Result<Dialogue, String> {
    let id = format!("{}:{}", spec.dataset_tag, raw.id);
    let mut pairs: Vec<(String, String)> = Vec::with_capacity(raw.rows.len());
    for (speaker, text) in &raw.rows {
        report.utterances_in += 1;
        let text = normalize_text(text);
        if text.is_empty() {
            report.empty_utterances_dropped += 1;
            continue;
        }
        let speaker = canonical_speaker(speaker, spec);
        if speaker.is_empty() {
            return Err("empty speaker name".into());
        }
        if let Some(marker) = find_reserved_marker(&text).or_else(|| find_reserved_marker(&speaker))
        {
            return Err(format!("reserved marker {marker} in source text"));
        }
        pairs.push((speaker, text));
    }
    if pairs.is_empty() {
        return Err("no non-empty utterances".into());
    }
    let unmerged = Dialogue::from_pairs(id, spec.dataset_tag.clone(), &pairs);
    let merged = merge_same_speaker(&unmerged);
    report.turns_merged += unmerged.turns.len() - merged.turns.len();
    Ok(merged)
}

/// Ingests an already-open source.
pub fn ingest_reader<R: BufRead>(
    reader: R,
    spec: &IngestSpec,
) -> Result<(Vec<Dialogue>, IngestReport), IngestError> {
    spec.validate()?;
    let mut report = IngestReport {
        dataset_tag: spec.dataset_tag.clone(),
        ..Default::default()
    };
    let raws = collect_raw(reader, spec, &mut report)?;
    let mut out = Vec::with_capacity(raws.len());
    for raw in raws {
        let raw_id = raw.id.clone();
        match build_dialogue(raw, spec, &mut report) {
            Ok(d) => out.push(d),
            Err(reason) => report.dropped_dialogues.push(DroppedDialogue {
                id: format!("{}:{}", spec.dataset_tag, raw_id),
                reason,
            }),
        }
    }
    report.dialogues_out = out.len();
    Ok((out, report))
}

/// Ingests the source file at `path`.
pub fn ingest(
    path: &Path,
    spec: &IngestSpec,
) -> Result<(Vec<Dialogue>, IngestReport), IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    ingest_reader(BufReader::new(file), spec).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate_dialogue;

    fn spec() -> IngestSpec {
        IngestSpec::new("demo", "dialogue_id", "speaker", "text")
    }

    #[test]
    fn normalization_table() {
        assert_eq!(
            normalize_text("  Hello\u{2019}s   world\u{2014}ok "),
            "Hello's world-ok"
        );
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("Already fine."), "Already fine.");
        assert_eq!(
            normalize_text("\u{201C}Wait\u{2026}\u{201D}\tshe\u{00A0}said\u{0007}"),
            "\"Wait...\" she said"
        );
        assert_eq!(normalize_text("a\u{200B}b"), "ab");
    }

    #[test]
    fn merges_runs_of_one_speaker() {
        let d = Dialogue::from_pairs("x", "t", &[("A", "hi"), ("A", "there"), ("B", "yo")]);
        let m = merge_same_speaker(&d);
        assert_eq!(m.turns, vec![Turn::new(0, "hi there"), Turn::new(1, "yo")]);

        let d = Dialogue::from_pairs("x", "t", &[("A", "x"), ("B", "y"), ("B", "z"), ("A", "w")]);
        let m = merge_same_speaker(&d);
        assert_eq!(
            m.turns,
            vec![Turn::new(0, "x"), Turn::new(1, "y z"), Turn::new(0, "w")]
        );
        assert_eq!(validate_dialogue(&m), Ok(()));
        assert_eq!(merge_same_speaker(&m), m);
    }

    #[test]
    fn aliases_shape_the_role_table() {
        let mut s = spec();
        s.aliases.insert("agent".into(), "Agent".into());
        let src = r#"{"dialogue_id":"1","speaker":"agent","text":"Hello, how can I help?"}
{"dialogue_id":"1","speaker":"user","text":"My order is late."}
"#;
        let (ds, report) = ingest_reader(src.as_bytes(), &s).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].roles, vec!["Agent".to_string(), "user".to_string()]);
        assert_eq!(ds[0].id, "demo:1");
        assert_eq!(report.records_read, 2);
    }

    #[test]
    fn empty_utterances_are_dropped_before_merging() {
        let src = r#"{"dialogue_id":"1","speaker":"A","text":"one"}
{"dialogue_id":"1","speaker":"B","text":"   "}
{"dialogue_id":"1","speaker":"A","text":"two"}
{"dialogue_id":"2","speaker":"A","text":"\u200b"}
"#;
        let (ds, report) = ingest_reader(src.as_bytes(), &spec()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].turns, vec![Turn::new(0, "one two")]);
        assert_eq!(ds[0].roles, vec!["A".to_string()]);
        assert_eq!(report.empty_utterances_dropped, 2);
        assert_eq!(report.turns_merged, 1);
        assert_eq!(report.dropped_dialogues.len(), 1);
        assert_eq!(report.dropped_dialogues[0].id, "demo:2");
    }

    #[test]
    fn dialogue_layout() {
        let mut s = spec();
        s.turns_field = Some("turns".into());
        let src = r#"{"dialogue_id":7,"turns":[{"speaker":"A","text":"hey"},{"speaker":"B","text":"yo"}]}"#;
        let (ds, _) = ingest_reader(src.as_bytes(), &s).unwrap();
        assert_eq!(ds[0].id, "demo:7");
        assert_eq!(ds[0].turns.len(), 2);
    }

    #[test]
    fn missing_field_is_unmapped() {
        let src = r#"{"dialogue_id":"1","who":"A","text":"one"}"#;
        match ingest_reader(src.as_bytes(), &spec()) {
            Err(IngestError::UnmappedField { line, name }) => {
                assert_eq!(line, 1);
                assert_eq!(name, "speaker");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_json_is_malformed() {
        let src = "{\"dialogue_id\":\"1\"\n";
        assert!(matches!(
            ingest_reader(src.as_bytes(), &spec()),
            Err(IngestError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn reserved_markers_drop_the_dialogue() {
        let src = r#"{"dialogue_id":"1","speaker":"A","text":"see <mask> here"}"#;
        let (ds, report) = ingest_reader(src.as_bytes(), &spec()).unwrap();
        assert!(ds.is_empty());
        assert!(report.dropped_dialogues[0]
            .reason
            .contains("reserved marker"));
    }
}
