//! Item and golden-pool uploads in JSON or CSV form.
//!
//! JSON payloads are an array of objects with `text`, optional `id`, optional
//! `context` and, for golden uploads, `expected_answer`. CSV payloads carry the
//! same names as header columns. In CSV an `expected_answer` cell holds either
//! a category name (intent template) or a JSON-encoded answer payload.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::answers::check_payload;
use crate::config::{TaskConfig, Template};
use crate::model::{AnnotationItem, AnswerPayload, GoldenItem, ItemId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadFormat {
    Json,
    Csv,
}

impl PayloadFormat {
    /// Guesses the format from a file name; anything but `.csv` is JSON.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Json,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed payload: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 0-based index of the data row.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ingested {
    pub items: Vec<AnnotationItem>,
    pub golden: Vec<GoldenItem>,
    pub rejected: Vec<RejectedRow>,
}

/// Context for one upload.
pub struct Upload<'a> {
    pub config: &'a TaskConfig,
    /// Golden uploads require `expected_answer` on every row.
    pub golden: bool,
    /// Ids already used in the project.
    pub existing: &'a BTreeSet<ItemId>,
}

struct RawRow {
    id: Option<String>,
    text: Option<String>,
    context: Option<String>,
    expected_answer: Option<Value>,
}

pub fn parse_items(
    payload: &str,
    format: PayloadFormat,
    upload: &Upload<'_>,
) -> Result<Ingested, IngestError> {
    let rows = match format {
        PayloadFormat::Json => json_rows(payload)?,
        PayloadFormat::Csv => csv_rows(payload, upload.config.template)?,
    };

    let mut out = Ingested::default();
    let mut taken = upload.existing.clone();
    let prefix = if upload.golden { "golden" } else { "item" };
    let mut next_generated = taken.len();

    for (row, raw) in rows.into_iter().enumerate() {
        let raw = match raw {
            Ok(raw) => raw,
            Err(reason) => {
                out.rejected.push(RejectedRow { row, reason });
                continue;
            }
        };
        match build_row(raw, upload) {
            Ok((id, text, context, expected)) => {
                let id = match id {
                    Some(id) if taken.contains(&ItemId(id.clone())) => {
                        out.rejected.push(RejectedRow {
                            row,
                            reason: format!("duplicate id {id:?}"),
                        });
                        continue;
                    }
                    Some(id) => ItemId(id),
                    None => loop {
                        let candidate = ItemId(format!("{prefix}-{next_generated}"));
                        next_generated += 1;
                        if !taken.contains(&candidate) {
                            break candidate;
                        }
                    },
                };
                taken.insert(id.clone());
                let item = AnnotationItem { id, text, context };
                match expected {
                    Some(expected_answer) => out.golden.push(GoldenItem {
                        item,
                        expected_answer,
                    }),
                    None => out.items.push(item),
                }
            }
            Err(reason) => out.rejected.push(RejectedRow { row, reason }),
        }
    }
    Ok(out)
}

type BuiltRow = (Option<String>, String, Option<String>, Option<AnswerPayload>);

fn build_row(raw: RawRow, upload: &Upload<'_>) -> Result<BuiltRow, String> {
    let text = raw
        .text
        .filter(|t| !t.trim().is_empty())
        .ok_or_else(|| "missing text".to_owned())?;
    let id = raw.id.filter(|id| !id.trim().is_empty());
    let context = raw.context.filter(|c| !c.is_empty());
    if upload.config.template == Template::QualityAnnotation && context.is_none() {
        return Err("quality annotation items need a context".into());
    }

    let expected = match (upload.golden, raw.expected_answer) {
        (false, None) => None,
        (false, Some(_)) => {
            return Err("expected_answer is only accepted in golden uploads".into());
        }
        (true, None) => return Err("missing expected_answer".into()),
        (true, Some(value)) => {
            let payload = match value {
                Value::String(label) => AnswerPayload::Choice { label },
                other => serde_json::from_value(other)
                    .map_err(|e| format!("invalid expected_answer: {e}"))?,
            };
            let probe = AnnotationItem {
                id: ItemId::new(""),
                text: text.clone(),
                context: context.clone(),
            };
            check_payload(upload.config, &probe, &payload)
                .map_err(|e| format!("invalid expected_answer: {e}"))?;
            Some(payload)
        }
    };
    Ok((id, text, context, expected))
}

fn json_rows(payload: &str) -> Result<Vec<Result<RawRow, String>>, IngestError> {
    let value: Value =
        serde_json::from_str(payload).map_err(|e| IngestError::Malformed(e.to_string()))?;
    let Value::Array(rows) = value else {
        return Err(IngestError::Malformed("expected a JSON array of items".into()));
    };
    Ok(rows.into_iter().map(json_row).collect())
}

fn json_row(value: Value) -> Result<RawRow, String> {
    let Value::Object(mut map) = value else {
        return Err("row is not an object".into());
    };
    let mut take_string = |key: &str| -> Result<Option<String>, String> {
        match map.remove(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(Value::Number(n)) if key == "id" => Ok(Some(n.to_string())),
            Some(_) => Err(format!("{key} must be a string")),
        }
    };
    let id = take_string("id")?;
    let text = take_string("text")?;
    let context = take_string("context")?;
    let expected_answer = map.remove("expected_answer").filter(|v| !v.is_null());
    if let Some(key) = map.keys().next() {
        return Err(format!("unknown field {key:?}"));
    }
    Ok(RawRow {
        id,
        text,
        context,
        expected_answer,
    })
}

fn csv_rows(payload: &str, template: Template) -> Result<Vec<Result<RawRow, String>>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(payload.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Malformed(e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let text_col = column("text")
        .ok_or_else(|| IngestError::Malformed("CSV header has no `text` column".into()))?;
    let (id_col, context_col, answer_col) = (column("id"), column("context"), column("expected_answer"));
    if let Some(extra) = headers.iter().find(|h| {
        !matches!(h.trim(), "id" | "text" | "context" | "expected_answer")
    }) {
        return Err(IngestError::Malformed(format!("unknown CSV column {extra:?}")));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                rows.push(Err(e.to_string()));
                continue;
            }
        };
        let cell = |col: Option<usize>| {
            col.and_then(|c| record.get(c))
                .map(str::to_owned)
                .filter(|s| !s.is_empty())
        };
        let expected_answer = cell(answer_col).map(|raw| {
            if template != Template::IntentClassification || raw.trim_start().starts_with('{') {
                serde_json::from_str(&raw).unwrap_or(Value::String(raw))
            } else {
                Value::String(raw)
            }
        });
        rows.push(Ok(RawRow {
            id: cell(id_col),
            text: cell(Some(text_col)),
            context: cell(context_col),
            expected_answer,
        }));
    }
    Ok(rows)
}
