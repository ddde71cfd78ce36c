//! Shared data types: annotation items, task units, answers and submissions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(
    /// Identifier of a requester-uploaded item.
    ItemId
);
string_id!(
    /// Opaque worker identifier, supplied by the crowdsourcing platform.
    WorkerId
);
string_id!(
    /// Identifier of a task unit within a project.
    UnitId
);

/// One unit of requester-uploaded data.
///
/// For the intent and entity templates `text` is the utterance. For quality
/// annotation `context` holds the dialog context and `text` the response to
/// rate. For the interactive template `text` is the scenario shown to the
/// worker before chatting with the agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationItem {
    pub id: ItemId,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

/// An item with an expert-provided answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenItem {
    pub item: AnnotationItem,
    pub expected_answer: AnswerPayload,
}

/// A labeled character range `[start, end)` over an item's text.
///
/// Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub entity_type: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Worker,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

/// The content of one answer; the variant is fixed by the project template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnswerPayload {
    /// Intent classification: the chosen category name.
    Choice { label: String },
    /// Entity classification: typed spans over the item text.
    Spans { spans: Vec<Span> },
    /// Quality annotation: one scale label per rating question.
    Ratings { ratings: BTreeMap<String, String> },
    /// Interactive: the exchanged dialog turns.
    Transcript { turns: Vec<Turn> },
}

impl AnswerPayload {
    pub fn choice(label: impl Into<String>) -> Self {
        Self::Choice {
            label: label.into(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Choice { .. } => "choice",
            Self::Spans { .. } => "spans",
            Self::Ratings { .. } => "ratings",
            Self::Transcript { .. } => "transcript",
        }
    }

    /// Answer equality used by golden and duplicate checks. Span sets compare
    /// order-insensitively.
    pub fn same_answer(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Spans { spans: a }, Self::Spans { spans: b }) => {
                let mut a = a.clone();
                let mut b = b.clone();
                a.sort();
                a.dedup();
                b.sort();
                b.dedup();
                a == b
            }
            _ => self == other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Answer {
    pub position: usize,
    pub payload: AnswerPayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotKind {
    Fresh,
    Duplicate { of_position: usize },
    Golden { expected_answer: AnswerPayload },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub position: usize,
    pub item_ref: ItemId,
    #[serde(flatten)]
    pub kind: SlotKind,
}

/// An ordered sequence of slots served to one worker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskUnit {
    pub unit_id: UnitId,
    pub slots: Vec<Slot>,
}

impl TaskUnit {
    pub fn fresh_slots(&self) -> impl Iterator<Item = &Slot> {
        self.slots
            .iter()
            .filter(|s| matches!(s.kind, SlotKind::Fresh))
    }

    pub fn duplicate_count(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s.kind, SlotKind::Duplicate { .. }))
            .count()
    }

    pub fn golden_count(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s.kind, SlotKind::Golden { .. }))
            .count()
    }
}

/// One worker's answers for one task unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub submission_id: String,
    pub worker_id: WorkerId,
    pub unit_id: UnitId,
    pub answers: Vec<Answer>,
    /// Client-reported per-slot durations; advisory only.
    #[serde(default)]
    pub per_slot_ms: Vec<u64>,
    /// Server-measured time from claim issue to submission.
    pub total_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    pub consent_acknowledged: bool,
    /// Milliseconds since the Unix epoch.
    pub received_at: u64,
}

impl Submission {
    pub fn total_seconds(&self) -> f64 {
        self.total_ms as f64 / 1000.0
    }
}
