//! Clarity lint: advisory findings about instructions, examples and pay.

use serde::{Deserialize, Serialize};

use super::{TaskConfig, Template, DEFAULT_HOURLY_RATE_CENTS};
use crate::planner::{minutes_as_decimal, suggest_payment};

/// Minimum length, in characters, of general instructions before the
/// `short-instructions` rule fires.
pub const MIN_INSTRUCTION_CHARS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarityReport {
    pub findings: Vec<Finding>,
}

impl ClarityReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn codes(&self) -> Vec<&str> {
        self.findings.iter().map(|f| f.code.as_str()).collect()
    }

    fn push(&mut self, severity: Severity, code: &str, message: String) {
        self.findings.push(Finding {
            severity,
            code: code.to_owned(),
            message,
        });
    }
}

/// Runs every clarity rule. Findings come out in a fixed order: per-category
/// rules in category order, then project-wide rules.
pub fn lint_clarity(config: &TaskConfig) -> ClarityReport {
    let mut report = ClarityReport::default();

    if config.template != Template::Interactive {
        for category in &config.categories {
            if category.instructions.trim().is_empty() {
                report.push(
                    Severity::Warning,
                    "missing-category-instructions",
                    format!("category {:?} has no instructions of its own", category.name),
                );
            }
            if category.examples.is_empty() {
                report.push(
                    Severity::Warning,
                    "missing-example",
                    format!("category {:?} has no examples", category.name),
                );
            }
            if category.counterexamples.is_empty() {
                report.push(
                    Severity::Warning,
                    "missing-counterexample",
                    format!("category {:?} has no counterexamples", category.name),
                );
            }
        }
    }

    let chars = config.general_instructions.trim().chars().count();
    if chars < MIN_INSTRUCTION_CHARS {
        report.push(
            Severity::Warning,
            "short-instructions",
            format!(
                "general instructions are {chars} characters; complete instructions are usually \
                 at least {MIN_INSTRUCTION_CHARS}"
            ),
        );
    }

    if let Some(rate) = effective_hourly_rate_cents(config) {
        if rate < DEFAULT_HOURLY_RATE_CENTS as f64 {
            report.push(
                Severity::Warning,
                "low-pay",
                format!(
                    "effective pay is {:.2} dollars per hour, below the {:.2} floor",
                    rate / 100.0,
                    DEFAULT_HOURLY_RATE_CENTS as f64 / 100.0
                ),
            );
        }
    }

    if !config.feedback_enabled {
        report.push(
            Severity::Warning,
            "feedback-disabled",
            "workers cannot leave feedback on the task".into(),
        );
    }

    if config.consent.required && config.consent.consent_text.trim().is_empty() {
        report.push(
            Severity::Warning,
            "empty-consent",
            "consent is required but no consent text is set".into(),
        );
    }

    report.push(
        Severity::Info,
        "pilot-first",
        "launch a small pilot subset first and read worker feedback before full deployment"
            .into(),
    );

    report
}

/// Cents per hour actually paid once the per-unit payment is rounded.
fn effective_hourly_rate_cents(config: &TaskConfig) -> Option<f64> {
    let minutes = config.payment.estimated_minutes_per_unit;
    if !(minutes.is_finite() && minutes > 0.0) {
        return None;
    }
    let cents = suggest_payment(&config.payment) as f64;
    match minutes_as_decimal(minutes) {
        // cents * 60 / (num / scale), computed so whole-cent rates are exact
        Some((num, scale)) => Some(cents * 60.0 * scale as f64 / num as f64),
        None => Some(cents * 60.0 / minutes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::fixtures::intent_config;

    #[test]
    fn complete_config_only_gets_pilot_reminder() {
        let report = lint_clarity(&intent_config());
        assert_eq!(report.codes(), vec!["pilot-first"]);
        assert_eq!(report.findings[0].severity, Severity::Info);
    }

    #[test]
    fn missing_counterexamples_fire_once() {
        let mut config = intent_config();
        config.categories[1].counterexamples.clear();
        let report = lint_clarity(&config);
        assert_eq!(report.codes(), vec!["missing-counterexample", "pilot-first"]);
        assert!(report.findings[0].message.contains("cancel_booking"));
    }

    #[test]
    fn federal_minimum_rate_is_low_pay() {
        let mut config = intent_config();
        config.payment.hourly_rate_cents = 725;
        assert!(lint_clarity(&config).codes().contains(&"low-pay"));
    }

    #[test]
    fn rounding_up_never_triggers_low_pay() {
        let mut config = intent_config();
        config.payment.estimated_minutes_per_unit = 7.0;
        assert!(!lint_clarity(&config).codes().contains(&"low-pay"));
    }

    #[test]
    fn short_instructions_and_missing_examples() {
        let mut config = intent_config();
        config.general_instructions = "Pick one.".into();
        config.categories[0].examples.clear();
        assert_eq!(
            lint_clarity(&config).codes(),
            vec!["missing-example", "short-instructions", "pilot-first"]
        );
    }

    #[test]
    fn lint_is_deterministic() {
        let mut config = intent_config();
        config.feedback_enabled = false;
        config.consent.consent_text.clear();
        assert_eq!(lint_clarity(&config), lint_clarity(&config));
        assert_eq!(
            lint_clarity(&config).codes(),
            vec!["feedback-disabled", "empty-consent", "pilot-first"]
        );
    }
}
