//! Export documents. JSON carries everything needed to rebuild the quality
//! report offline; CSV flattens submissions to one row per answer.

use serde::{Deserialize, Serialize};

use super::ProjectState;
use crate::analytics::ProjectData;
use crate::model::{AnswerPayload, SlotKind, Turn, WorkerId};
use crate::planner::DeploymentPlan;

pub(crate) const EXPORT_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 11] = [
    "unit_id",
    "worker_id",
    "submission_id",
    "position",
    "item_id",
    "slot_kind",
    "duplicate_of",
    "answer",
    "answer_json",
    "total_ms",
    "received_at",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptExport {
    pub worker_id: WorkerId,
    pub session_id: String,
    pub turns: Vec<Turn>,
}

/// Full project export. Submissions are ordered by unit, then worker; answers
/// keep slot order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportDocument {
    pub schema: u32,
    pub project_id: String,
    pub state: ProjectState,
    pub plan: Option<DeploymentPlan>,
    pub project: ProjectData,
    #[serde(default)]
    pub transcripts: Vec<TranscriptExport>,
}

impl ExportDocument {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("export serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let doc: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if doc.schema != EXPORT_SCHEMA_VERSION {
            return Err(format!("unsupported export schema {}", doc.schema));
        }
        Ok(doc)
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER).expect("in-memory write");
        let data = &self.project;
        for sub in &data.submissions {
            let unit = data.units.iter().find(|u| u.unit_id == sub.unit_id);
            for answer in &sub.answers {
                let slot = unit.and_then(|u| u.slots.get(answer.position));
                let (kind, dup_of) = match slot.map(|s| &s.kind) {
                    Some(SlotKind::Fresh) => ("fresh", String::new()),
                    Some(SlotKind::Duplicate { of_position }) => ("duplicate", of_position.to_string()),
                    Some(SlotKind::Golden { .. }) => ("golden", String::new()),
                    None => ("", String::new()),
                };
                let short = match &answer.payload {
                    AnswerPayload::Choice { label } => label.clone(),
                    _ => String::new(),
                };
                writer
                    .write_record([
                        sub.unit_id.as_str(),
                        sub.worker_id.as_str(),
                        &sub.submission_id,
                        &answer.position.to_string(),
                        slot.map_or("", |s| s.item_ref.as_str()),
                        kind,
                        &dup_of,
                        &short,
                        &serde_json::to_string(&answer.payload).expect("payload serializes"),
                        &sub.total_ms.to_string(),
                        &sub.received_at.to_string(),
                    ])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}
