use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Thresholds for near-constant answering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternRule {
    pub min_answers: usize,
    pub modal_fraction: f64,
}

impl Default for PatternRule {
    fn default() -> Self {
        Self {
            min_answers: 10,
            modal_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternFinding {
    pub flagged: bool,
    pub answers: usize,
    /// Most frequent answer; ties go to the lexicographically smallest.
    pub dominant: Option<String>,
    pub proportion: f64,
    pub description: String,
}

pub fn detect_pattern(answers: &[String], rule: &PatternRule) -> PatternFinding {
    let n = answers.len();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in answers {
        *counts.entry(a.as_str()).or_default() += 1;
    }
    // max_by_key keeps the last maximum, so iterate in reverse to prefer the
    // smallest label on ties
    let modal = counts.iter().rev().max_by_key(|(_, c)| **c);
    let (dominant, count) = match modal {
        Some((label, count)) => (Some((*label).to_owned()), *count),
        None => (None, 0),
    };
    let proportion = if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let flagged = n >= rule.min_answers && count as f64 >= rule.modal_fraction * n as f64;
    let description = match &dominant {
        Some(label) => format!(
            "{label:?} chosen in {count} of {n} answers ({:.1}%)",
            proportion * 100.0
        ),
        None => "no categorical answers".to_owned(),
    };
    PatternFinding {
        flagged,
        answers: n,
        dominant,
        proportion,
        description,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn answers(counts: &[(&str, usize)]) -> Vec<String> {
        counts.iter()
            .flat_map(|(a, n)| std::iter::repeat_n((*a).to_owned(), *n))
            .collect()
    }

    #[test]
    fn constant_answers_are_flagged() {
        let f = detect_pattern(&answers(&[("A", 20)]), &PatternRule::default());
        assert!(f.flagged);
        assert_eq!(f.dominant.as_deref(), Some("A"));
        assert_eq!(f.proportion, 1.0);
        assert!(f.description.contains("\"A\""));
    }

    #[test]
    fn balanced_answers_are_not_flagged() {
        let f = detect_pattern(&answers(&[("A", 10), ("B", 10)]), &PatternRule::default());
        assert!(!f.flagged);
        assert_eq!(f.dominant.as_deref(), Some("A"));
        assert_eq!(f.proportion, 0.5);
    }

    #[test]
    fn too_few_answers_are_not_flagged() {
        assert!(!detect_pattern(&answers(&[("A", 5)]), &PatternRule::default()).flagged);
    }

    #[test]
    fn near_constant_threshold() {
        let rule = PatternRule::default();
        assert!(detect_pattern(&answers(&[("A", 19), ("B", 1)]), &rule).flagged);
        assert!(!detect_pattern(&answers(&[("A", 18), ("B", 2)]), &rule).flagged);
        let strict = PatternRule {
            min_answers: 3,
            modal_fraction: 1.0,
        };
        assert!(detect_pattern(&answers(&[("B", 3)]), &strict).flagged);
    }

    #[test]
    fn empty_input() {
        let f = detect_pattern(&[], &PatternRule::default());
        assert!(!f.flagged);
        assert_eq!(f.dominant, None);
    }
}
