use serde::{Deserialize, Serialize};

use crate::corpus::Dialogue;

pub const PRECEDING_PROMPT: &str = "Summarize the following dialogue into a short summary:";
pub const INSTRUCT_PROMPT: &str = "Tl;dr:";
pub const SUBSEQUENT_PROMPT: &str = "Summarize the above dialogue into a short summary:";

/// Where the instruction sits relative to the dialogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptTemplate {
    /// Instruction, blank line, dialogue.
    Preceding,
    /// Dialogue followed by `Tl;dr:`. Scored best of the three.
    #[default]
    Instruct,
    /// Dialogue followed by an instruction referring back to it.
    Subsequent,
}

impl std::str::FromStr for PromptTemplate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preceding" => Ok(Self::Preceding),
            "instruct" => Ok(Self::Instruct),
            "subsequent" => Ok(Self::Subsequent),
            other => Err(format!(
                "unknown template {other:?} (expected preceding, instruct or subsequent)"
            )),
        }
    }
}

/// One `"{role}: {utterance}"` line per turn.
pub fn render_dialogue_text(d: &Dialogue) -> String {
    d.turns
        .iter()
        .map(|t| format!("{}: {}", d.speaker(t), t.text))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_prompt(d: &Dialogue, template: PromptTemplate) -> String {
    let body = render_dialogue_text(d);
    match template {
        PromptTemplate::Preceding => format!("{PRECEDING_PROMPT}\n\n{body}"),
        PromptTemplate::Instruct => format!("{body}\n{INSTRUCT_PROMPT}"),
        PromptTemplate::Subsequent => format!("{body}\n{SUBSEQUENT_PROMPT}"),
    }
}
