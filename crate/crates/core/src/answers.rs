//! Shape checks for answer payloads against a project's template and item.

use std::collections::BTreeSet;

use crate::config::{TaskConfig, Template};
use crate::model::{AnnotationItem, AnswerPayload};

/// Name of the single question asked by the intent template.
pub const INTENT_QUESTION: &str = "intent";
/// Name of the token-level question asked by the entity template.
pub const ENTITY_QUESTION: &str = "entities";
/// Token label for tokens outside every span.
pub const OUTSIDE: &str = "O";

pub fn expected_variant(template: Template) -> &'static str {
    match template {
        Template::IntentClassification => "choice",
        Template::EntityClassification => "spans",
        Template::QualityAnnotation => "ratings",
        Template::Interactive => "transcript",
    }
}

/// Checks that `payload` is a well-formed answer for `item` under `config`.
pub fn check_payload(
    config: &TaskConfig,
    item: &AnnotationItem,
    payload: &AnswerPayload,
) -> Result<(), String> {
    let expected = expected_variant(config.template);
    if payload.variant_name() != expected {
        return Err(format!(
            "expected a {expected} answer for template {}, got {}",
            config.template.as_str(),
            payload.variant_name()
        ));
    }
    match payload {
        AnswerPayload::Choice { label } => {
            if config.category(label).is_none() {
                return Err(format!("{label:?} is not a category of this project"));
            }
        }
        AnswerPayload::Spans { spans } => {
            let len = item.text.chars().count();
            let mut sorted = spans.clone();
            sorted.sort();
            for span in &sorted {
                if span.start >= span.end || span.end > len {
                    return Err(format!(
                        "span [{}, {}) is outside the item text (length {len})",
                        span.start, span.end
                    ));
                }
                if config.category(&span.entity_type).is_none() {
                    return Err(format!("{:?} is not an entity type", span.entity_type));
                }
            }
            if let Some(pair) = sorted.windows(2).find(|w| w[0].end > w[1].start) {
                return Err(format!(
                    "spans [{}, {}) and [{}, {}) overlap",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                ));
            }
        }
        AnswerPayload::Ratings { ratings } => {
            let asked: BTreeSet<&str> = config.categories.iter().map(|c| c.name.as_str()).collect();
            let answered: BTreeSet<&str> = ratings.keys().map(String::as_str).collect();
            if asked != answered {
                return Err("ratings must answer every question exactly once".into());
            }
            for (question, label) in ratings {
                let category = config.category(question).expect("checked above");
                if !category.answer_options.contains(label) {
                    return Err(format!("{label:?} is not on the scale for {question:?}"));
                }
            }
        }
        AnswerPayload::Transcript { .. } => {}
    }
    Ok(())
}

/// Whitespace tokens of `text` as (start, end) character offsets.
pub fn tokens(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.chars().enumerate() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.chars().count()));
    }
    out
}

/// Categorical labels carried by one answer, keyed by (question, index).
///
/// Entity answers become one label per whitespace token: the type of the span
/// covering the token's first character, or [`OUTSIDE`]. Transcripts carry no
/// categorical labels.
pub fn answer_labels(item: &AnnotationItem, payload: &AnswerPayload) -> Vec<(String, usize, String)> {
    match payload {
        AnswerPayload::Choice { label } => vec![(INTENT_QUESTION.into(), 0, label.clone())],
        AnswerPayload::Ratings { ratings } => ratings
            .iter()
            .map(|(q, label)| (q.clone(), 0, label.clone()))
            .collect(),
        AnswerPayload::Spans { spans } => tokens(&item.text)
            .into_iter()
            .enumerate()
            .map(|(i, (start, _))| {
                let label = spans
                    .iter()
                    .find(|s| s.start <= start && start < s.end)
                    .map_or(OUTSIDE.to_owned(), |s| s.entity_type.clone());
                (ENTITY_QUESTION.into(), i, label)
            })
            .collect(),
        AnswerPayload::Transcript { .. } => Vec::new(),
    }
}

/// The answers a slot contributes to pattern detection.
pub fn pattern_answers(payload: &AnswerPayload) -> Vec<String> {
    match payload {
        AnswerPayload::Choice { label } => vec![label.clone()],
        AnswerPayload::Ratings { ratings } => ratings.values().cloned().collect(),
        AnswerPayload::Spans { spans } => {
            let types: BTreeSet<&str> = spans.iter().map(|s| s.entity_type.as_str()).collect();
            if types.is_empty() {
                vec!["(none)".into()]
            } else {
                vec![types.into_iter().collect::<Vec<_>>().join("+")]
            }
        }
        AnswerPayload::Transcript { .. } => Vec::new(),
    }
}
