//! Project configuration: the task model, its JSON document format, structural
//! validation and clarity linting.
//!
//! The document format is UTF-8 JSON with a leading `"schema": 1` field. Keys
//! are emitted in the order the struct fields are declared below, so
//! [`serialize_config`] is canonical: equal configs produce byte-identical
//! text. Parsing is strict and rejects unknown keys at every level.

mod lint;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use lint::{lint_clarity, ClarityReport, Finding, Severity};

/// Current document schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Reserved agent endpoint that answers every utterance with itself.
pub const ECHO_AGENT_ENDPOINT: &str = "builtin:echo";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    IntentClassification,
    EntityClassification,
    QualityAnnotation,
    Interactive,
}

impl Template {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::IntentClassification => "intent_classification",
            Self::EntityClassification => "entity_classification",
            Self::QualityAnnotation => "quality_annotation",
            Self::Interactive => "interactive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub template: Template,
    pub title: String,
    pub general_instructions: String,
    #[serde(default)]
    pub categories: Vec<Category>,
    pub payment: PaymentInputs,
    pub qc: QualityControlConfig,
    #[serde(default)]
    pub consent: ConsentConfig,
    #[serde(default)]
    pub style: StyleConfig,
    #[serde(default = "default_true")]
    pub feedback_enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_endpoint: Option<String>,
}

impl TaskConfig {
    pub fn category(&self, name: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.name == name)
    }
}

/// An intent or entity type, or for quality annotation a rating question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Category {
    pub name: String,
    #[serde(default)]
    pub instructions: String,
    #[serde(default)]
    pub examples: Vec<Example>,
    #[serde(default)]
    pub counterexamples: Vec<Example>,
    /// Rating scale labels for quality annotation; unused otherwise.
    #[serde(default)]
    pub answer_options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example {
    pub text: String,
    /// Why this example (or counterexample) was chosen.
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaymentInputs {
    pub estimated_minutes_per_unit: f64,
    #[serde(default = "default_hourly_rate")]
    pub hourly_rate_cents: u32,
}

impl PaymentInputs {
    pub fn new(estimated_minutes_per_unit: f64) -> Self {
        Self {
            estimated_minutes_per_unit,
            hourly_rate_cents: DEFAULT_HOURLY_RATE_CENTS,
        }
    }
}

/// Fair-pay floor, in cents per hour.
pub const DEFAULT_HOURLY_RATE_CENTS: u32 = 1500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityControlConfig {
    pub items_per_unit: u32,
    pub units_per_task: u32,
    #[serde(default)]
    pub duplicates_per_unit: u32,
    #[serde(default)]
    pub golden_per_unit: u32,
    /// Distinct workers per unit.
    #[serde(default = "default_assignments")]
    pub assignments_per_unit: u32,
    #[serde(default = "default_pass_threshold")]
    pub golden_pass_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,
}

impl QualityControlConfig {
    /// Slots per unit left for fresh items, or `None` if quality-control
    /// slots use up the whole unit.
    pub fn fresh_per_unit(&self) -> Option<u32> {
        let reserved = self.duplicates_per_unit as u64 + self.golden_per_unit as u64;
        let items = self.items_per_unit as u64;
        (reserved < items).then(|| (items - reserved) as u32)
    }
}

impl Default for QualityControlConfig {
    fn default() -> Self {
        Self {
            items_per_unit: 10,
            units_per_task: 1,
            duplicates_per_unit: 0,
            golden_per_unit: 0,
            assignments_per_unit: default_assignments(),
            golden_pass_threshold: default_pass_threshold(),
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsentConfig {
    #[serde(default)]
    pub consent_text: String,
    #[serde(default = "default_true")]
    pub required: bool,
}

impl Default for ConsentConfig {
    fn default() -> Self {
        Self {
            consent_text: String::new(),
            required: true,
        }
    }
}

/// Presentation hints passed through to the worker pages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font: Option<String>,
}

fn default_true() -> bool {
    true
}

fn default_hourly_rate() -> u32 {
    DEFAULT_HOURLY_RATE_CENTS
}

fn default_assignments() -> u32 {
    3
}

fn default_pass_threshold() -> f64 {
    0.8
}

/// A violated structural invariant. `code` names the type and field, for
/// example `QualityControlConfig.fresh_items`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

impl Violation {
    fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_owned(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version: {0}")]
    UnsupportedSchema(String),
    #[error("unknown field(s): {}", .0.join(", "))]
    UnknownFields(Vec<String>),
    #[error("invalid config: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

impl ConfigError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Malformed { .. } | Self::UnsupportedSchema(_) => "malformed-document",
            Self::UnknownFields(_) => "unknown-field",
            Self::Invalid(_) => "invariant-violation",
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("{}: {}", v.code, v.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<serde_json::Error> for ConfigError {
    fn from(err: serde_json::Error) -> Self {
        ConfigError::Malformed {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

/// On-disk layout: `schema` first, then the config fields in declaration order.
#[derive(Serialize)]
struct DocumentOut<'a> {
    schema: u32,
    #[serde(flatten)]
    config: &'a TaskConfig,
}

#[derive(Deserialize)]
struct DocumentIn {
    #[allow(dead_code)]
    schema: u32,
    #[serde(flatten)]
    config: TaskConfig,
}

/// Parses and validates a config document.
pub fn parse_config(document: &str) -> Result<TaskConfig, ConfigError> {
    let value: Value = serde_json::from_str(document)?;
    let Value::Object(root) = &value else {
        return Err(ConfigError::Malformed {
            line: 1,
            column: 1,
            message: "top-level value must be an object".into(),
        });
    };
    match root.get("schema") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(other) => return Err(ConfigError::UnsupportedSchema(other.to_string())),
        None => return Err(ConfigError::UnsupportedSchema("missing".into())),
    }

    let mut unknown = Vec::new();
    collect_unknown(&value, "", TASK_CONFIG_KEYS, &mut unknown);
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownFields(unknown));
    }

    let doc: DocumentIn = serde_json::from_str(document)?;
    let violations = validate_config(&doc.config);
    if violations.is_empty() {
        Ok(doc.config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn serialize_config(config: &TaskConfig) -> String {
    let mut out = serde_json::to_string_pretty(&DocumentOut {
        schema: SCHEMA_VERSION,
        config,
    })
    .expect("config serialization is infallible");
    out.push('\n');
    out
}

struct KeySet {
    keys: &'static [&'static str],
    children: &'static [(&'static str, Child)],
}

#[derive(Clone, Copy)]
enum Child {
    Object(&'static KeySet),
    Array(&'static KeySet),
}

const EXAMPLE_KEYS: &KeySet = &KeySet {
    keys: &["text", "explanation"],
    children: &[],
};

const CATEGORY_KEYS: &KeySet = &KeySet {
    keys: &[
        "name",
        "instructions",
        "examples",
        "counterexamples",
        "answer_options",
    ],
    children: &[
        ("examples", Child::Array(EXAMPLE_KEYS)),
        ("counterexamples", Child::Array(EXAMPLE_KEYS)),
    ],
};

const TASK_CONFIG_KEYS: &KeySet = &KeySet {
    keys: &[
        "schema",
        "template",
        "title",
        "general_instructions",
        "categories",
        "payment",
        "qc",
        "consent",
        "style",
        "feedback_enabled",
        "agent_endpoint",
    ],
    children: &[
        ("categories", Child::Array(CATEGORY_KEYS)),
        (
            "payment",
            Child::Object(&KeySet {
                keys: &["estimated_minutes_per_unit", "hourly_rate_cents"],
                children: &[],
            }),
        ),
        (
            "qc",
            Child::Object(&KeySet {
                keys: &[
                    "items_per_unit",
                    "units_per_task",
                    "duplicates_per_unit",
                    "golden_per_unit",
                    "assignments_per_unit",
                    "golden_pass_threshold",
                    "shuffle_seed",
                ],
                children: &[],
            }),
        ),
        (
            "consent",
            Child::Object(&KeySet {
                keys: &["consent_text", "required"],
                children: &[],
            }),
        ),
        (
            "style",
            Child::Object(&KeySet {
                keys: &["background_color", "font"],
                children: &[],
            }),
        ),
    ],
};

fn collect_unknown(value: &Value, path: &str, set: &KeySet, out: &mut Vec<String>) {
    let Value::Object(map) = value else {
        return;
    };
    for (key, child) in map {
        let child_path = if path.is_empty() {
            key.clone()
        } else {
            format!("{path}.{key}")
        };
        if !set.keys.contains(&key.as_str()) {
            out.push(child_path);
            continue;
        }
        match set.children.iter().find(|(k, _)| k == key) {
            Some((_, Child::Object(sub))) => collect_unknown(child, &child_path, sub, out),
            Some((_, Child::Array(sub))) => {
                if let Value::Array(items) = child {
                    for (i, item) in items.iter().enumerate() {
                        collect_unknown(item, &format!("{child_path}[{i}]"), sub, out);
                    }
                }
            }
            None => {}
        }
    }
}

/// Checks every structural invariant; an empty list means the config is valid.
pub fn validate_config(config: &TaskConfig) -> Vec<Violation> {
    let mut out = Vec::new();

    if config.title.trim().is_empty() {
        out.push(Violation::new("TaskConfig.title", "title must not be empty"));
    }
    if config.general_instructions.trim().is_empty() {
        out.push(Violation::new(
            "TaskConfig.general_instructions",
            "general instructions must not be empty",
        ));
    }

    let interactive = config.template == Template::Interactive;
    match (&config.agent_endpoint, interactive) {
        (None, true) => out.push(Violation::new(
            "TaskConfig.agent_endpoint",
            "interactive template requires an agent endpoint",
        )),
        (Some(_), false) => out.push(Violation::new(
            "TaskConfig.agent_endpoint",
            "agent endpoint is only allowed for the interactive template",
        )),
        (Some(endpoint), true) => {
            if url::Url::parse(endpoint).is_err() {
                out.push(Violation::new(
                    "TaskConfig.agent_endpoint",
                    format!("agent endpoint {endpoint:?} is not a valid URL"),
                ));
            }
        }
        (None, false) => {}
    }

    if !interactive && config.categories.is_empty() {
        out.push(Violation::new(
            "TaskConfig.categories",
            format!("template {} needs at least one category", config.template.as_str()),
        ));
    }

    let mut seen = BTreeSet::new();
    for (i, category) in config.categories.iter().enumerate() {
        if category.name.trim().is_empty() {
            out.push(Violation::new(
                "Category.name",
                format!("category {i} has an empty name"),
            ));
        } else if !seen.insert(category.name.as_str()) {
            out.push(Violation::new(
                "Category.name",
                format!("category name {:?} is not unique", category.name),
            ));
        }
        for (kind, examples) in [
            ("example", &category.examples),
            ("counterexample", &category.counterexamples),
        ] {
            for (j, example) in examples.iter().enumerate() {
                if example.text.trim().is_empty() || example.explanation.trim().is_empty() {
                    out.push(Violation::new(
                        "Example",
                        format!(
                            "{kind} {j} of category {:?} needs both text and explanation",
                            category.name
                        ),
                    ));
                }
            }
        }
        match config.template {
            Template::QualityAnnotation if category.answer_options.is_empty() => {
                out.push(Violation::new(
                    "Category.answer_options",
                    format!("rating question {:?} has no scale labels", category.name),
                ));
            }
            Template::EntityClassification if !category.answer_options.is_empty() => {
                out.push(Violation::new(
                    "Category.answer_options",
                    format!(
                        "entity type {:?} must not define answer options",
                        category.name
                    ),
                ));
            }
            _ => {}
        }
    }

    let minutes = config.payment.estimated_minutes_per_unit;
    if !(minutes.is_finite() && minutes > 0.0) {
        out.push(Violation::new(
            "PaymentInputs.estimated_minutes_per_unit",
            "estimated minutes per unit must be positive",
        ));
    }
    if config.payment.hourly_rate_cents == 0 {
        out.push(Violation::new(
            "PaymentInputs.hourly_rate_cents",
            "hourly rate must be positive",
        ));
    }

    validate_qc(&config.qc, &mut out);

    if let Some(color) = &config.style.background_color {
        if !is_hex_color(color) {
            out.push(Violation::new(
                "StyleConfig.background_color",
                format!("{color:?} is not a #rgb or #rrggbb color"),
            ));
        }
    }

    out
}

pub(crate) fn validate_qc(qc: &QualityControlConfig, out: &mut Vec<Violation>) {
    for (field, value) in [
        ("items_per_unit", qc.items_per_unit),
        ("units_per_task", qc.units_per_task),
        ("assignments_per_unit", qc.assignments_per_unit),
    ] {
        if value == 0 {
            out.push(Violation::new(
                &format!("QualityControlConfig.{field}"),
                format!("{field} must be positive"),
            ));
        }
    }
    if qc.items_per_unit > 0 && qc.fresh_per_unit().is_none() {
        out.push(Violation::new(
            "QualityControlConfig.fresh_items",
            format!(
                "duplicates ({}) + golden ({}) must be fewer than items per unit ({})",
                qc.duplicates_per_unit, qc.golden_per_unit, qc.items_per_unit
            ),
        ));
    }
    // A duplicate needs one intervening slot, so the non-duplicate part of the
    // unit must hold at least two slots.
    if qc.duplicates_per_unit > 0
        && (qc.items_per_unit as u64) < qc.duplicates_per_unit as u64 + 2
    {
        out.push(Violation::new(
            "QualityControlConfig.duplicate_spacing",
            "duplicates need at least two non-duplicate slots per unit",
        ));
    }
    if !(0.0..=1.0).contains(&qc.golden_pass_threshold) {
        out.push(Violation::new(
            "QualityControlConfig.golden_pass_threshold",
            "golden pass threshold must lie in [0, 1]",
        ));
    }
}

fn is_hex_color(s: &str) -> bool {
    let Some(hex) = s.strip_prefix('#') else {
        return false;
    };
    matches!(hex.len(), 3 | 6) && hex.chars().all(|c| c.is_ascii_hexdigit())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn example(text: &str) -> Example {
        Example {
            text: text.into(),
            explanation: format!("shows what {text} looks like"),
        }
    }

    pub fn category(name: &str) -> Category {
        Category {
            name: name.into(),
            instructions: format!("Pick **{name}** when the user asks for it."),
            examples: vec![example(&format!("{name} please"))],
            counterexamples: vec![example(&format!("not {name}"))],
            answer_options: vec![],
        }
    }

    pub fn intent_config() -> TaskConfig {
        TaskConfig {
            template: Template::IntentClassification,
            title: "Travel intents".into(),
            general_instructions: "Read each utterance carefully and choose the intent that best \
                describes what the user wants to do. If several intents seem to apply, pick the \
                one the user states most directly. Each intent below lists examples and \
                counterexamples with explanations."
                .into(),
            categories: vec![category("book_flight"), category("cancel_booking")],
            payment: PaymentInputs::new(4.0),
            qc: QualityControlConfig {
                items_per_unit: 10,
                units_per_task: 2,
                duplicates_per_unit: 1,
                golden_per_unit: 1,
                ..QualityControlConfig::default()
            },
            consent: ConsentConfig {
                consent_text: "I agree to take part in this study.".into(),
                required: true,
            },
            style: StyleConfig::default(),
            feedback_enabled: true,
            agent_endpoint: None,
        }
    }
}
