use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::model::{AnswerPayload, SlotKind, Submission, TaskUnit};

/// A count-based fraction; `value` is `matched / total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub matched: usize,
    pub total: usize,
    pub value: f64,
}

impl Ratio {
    pub fn new(matched: usize, total: usize) -> Option<Self> {
        (total > 0).then(|| Self {
            matched,
            total,
            value: matched as f64 / total as f64,
        })
    }

    /// Adds counts; `None` acts as the empty ratio.
    pub fn combine(a: Option<Self>, b: Option<Self>) -> Option<Self> {
        match (a, b) {
            (Some(a), Some(b)) => Self::new(a.matched + b.matched, a.total + b.total),
            (a, None) => a,
            (None, b) => b,
        }
    }
}

fn answers_by_slot<'a>(
    submission: &'a Submission,
    unit: &TaskUnit,
) -> Result<Vec<&'a AnswerPayload>, AnalyticsError> {
    let mismatch = || AnalyticsError::UnitMismatch {
        submission: submission.submission_id.clone(),
        unit: unit.unit_id.clone(),
    };
    if submission.unit_id != unit.unit_id || submission.answers.len() != unit.slots.len() {
        return Err(mismatch());
    }
    let mut by_slot = vec![None; unit.slots.len()];
    for answer in &submission.answers {
        let slot = by_slot.get_mut(answer.position).ok_or_else(mismatch)?;
        *slot = Some(&answer.payload);
    }
    by_slot.into_iter().map(|a| a.ok_or_else(mismatch)).collect()
}

/// Fraction of duplicate slots answered the same way as their original slot.
/// `None` when the unit has no duplicates.
pub fn duplicate_consistency(
    submission: &Submission,
    unit: &TaskUnit,
) -> Result<Option<Ratio>, AnalyticsError> {
    let answers = answers_by_slot(submission, unit)?;
    let (mut matched, mut total) = (0, 0);
    for slot in &unit.slots {
        if let SlotKind::Duplicate { of_position } = slot.kind {
            total += 1;
            if answers[slot.position].same_answer(answers[of_position]) {
                matched += 1;
            }
        }
    }
    Ok(Ratio::new(matched, total))
}

/// Fraction of golden slots answered with the expected answer. `None` when the
/// unit has no golden slots.
pub fn golden_accuracy(
    submission: &Submission,
    unit: &TaskUnit,
) -> Result<Option<Ratio>, AnalyticsError> {
    let answers = answers_by_slot(submission, unit)?;
    let (mut matched, mut total) = (0, 0);
    for slot in &unit.slots {
        if let SlotKind::Golden { expected_answer } = &slot.kind {
            total += 1;
            if answers[slot.position].same_answer(expected_answer) {
                matched += 1;
            }
        }
    }
    Ok(Ratio::new(matched, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Answer, ItemId, Slot, Span, UnitId, WorkerId};

    fn slot(position: usize, kind: SlotKind) -> Slot {
        Slot {
            position,
            item_ref: ItemId(format!("i{position}")),
            kind,
        }
    }

    fn golden(label: &str) -> SlotKind {
        SlotKind::Golden {
            expected_answer: AnswerPayload::choice(label),
        }
    }

    fn submission(unit: &TaskUnit, labels: &[&str]) -> Submission {
        Submission {
            submission_id: "s1".into(),
            worker_id: WorkerId::from("w"),
            unit_id: unit.unit_id.clone(),
            answers: labels
                .iter()
                .enumerate()
                .map(|(position, l)| Answer {
                    position,
                    payload: AnswerPayload::choice(*l),
                })
                .collect(),
            per_slot_ms: vec![],
            total_ms: 1000,
            feedback: None,
            consent_acknowledged: true,
            received_at: 0,
        }
    }

    fn unit(kinds: Vec<SlotKind>) -> TaskUnit {
        TaskUnit {
            unit_id: UnitId::from("u1"),
            slots: kinds.into_iter().enumerate().map(|(i, k)| slot(i, k)).collect(),
        }
    }

    #[test]
    fn duplicate_consistency_counts() {
        let u = unit(vec![
            SlotKind::Fresh,
            SlotKind::Fresh,
            SlotKind::Duplicate { of_position: 0 },
            SlotKind::Duplicate { of_position: 1 },
        ]);
        let both = duplicate_consistency(&submission(&u, &["a", "b", "a", "b"]), &u).unwrap();
        assert_eq!(both, Ratio::new(2, 2));
        let one = duplicate_consistency(&submission(&u, &["a", "b", "a", "a"]), &u).unwrap();
        assert_eq!(one.unwrap().value, 0.5);
        let plain = unit(vec![SlotKind::Fresh, SlotKind::Fresh]);
        assert_eq!(
            duplicate_consistency(&submission(&plain, &["a", "b"]), &plain).unwrap(),
            None
        );
    }

    #[test]
    fn golden_accuracy_counts() {
        let u = unit(vec![golden("a"), golden("b"), SlotKind::Fresh, golden("c"), golden("d")]);
        let r = golden_accuracy(&submission(&u, &["a", "b", "x", "c", "x"]), &u)
            .unwrap()
            .unwrap();
        assert_eq!((r.matched, r.total, r.value), (3, 4, 0.75));
        let plain = unit(vec![SlotKind::Fresh]);
        assert_eq!(golden_accuracy(&submission(&plain, &["a"]), &plain).unwrap(), None);
    }

    #[test]
    fn span_sets_compare_without_order() {
        let s = |a, b| Span {
            start: a,
            end: b,
            entity_type: "T".into(),
        };
        let mut u = unit(vec![SlotKind::Fresh, SlotKind::Fresh, SlotKind::Duplicate { of_position: 0 }]);
        u.slots[0].item_ref = ItemId::from("x");
        let mut sub = submission(&u, &["", "", ""]);
        sub.answers[0].payload = AnswerPayload::Spans {
            spans: vec![s(0, 2), s(3, 4)],
        };
        sub.answers[2].payload = AnswerPayload::Spans {
            spans: vec![s(3, 4), s(0, 2)],
        };
        assert_eq!(duplicate_consistency(&sub, &u).unwrap(), Ratio::new(1, 1));
    }

    #[test]
    fn mismatched_unit_is_an_error() {
        let u = unit(vec![SlotKind::Fresh, SlotKind::Fresh]);
        let mut sub = submission(&u, &["a"]);
        assert!(matches!(
            golden_accuracy(&sub, &u),
            Err(AnalyticsError::UnitMismatch { .. })
        ));
        sub = submission(&u, &["a", "b"]);
        sub.unit_id = UnitId::from("other");
        assert!(duplicate_consistency(&sub, &u).is_err());
    }
}
