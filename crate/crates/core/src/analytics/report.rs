use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::agreement::{agreement_table, worker_vs_rest_kappa, AgreementTable, AnnotationKey, Annotations, DEFAULT_MIN_OVERLAP};
use super::checks::{duplicate_consistency, golden_accuracy, Ratio};
use super::pattern::{detect_pattern, PatternFinding, PatternRule};
use super::timing::{detect_time_outliers, Durations};
use super::AnalyticsError;
use crate::answers::{answer_labels, pattern_answers};
use crate::config::{TaskConfig, Template};
use crate::model::{AnnotationItem, GoldenItem, ItemId, SlotKind, Submission, TaskUnit, UnitId, WorkerId};

/// Everything needed to analyze a project; also the body of a JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectData {
    pub config: TaskConfig,
    pub items: Vec<AnnotationItem>,
    #[serde(default)]
    pub golden_pool: Vec<GoldenItem>,
    pub units: Vec<TaskUnit>,
    pub submissions: Vec<Submission>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub min_overlap: usize,
    pub pattern: PatternRule,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            min_overlap: DEFAULT_MIN_OVERLAP,
            pattern: PatternRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerSummary {
    pub worker_id: WorkerId,
    pub units_submitted: usize,
    pub mean_seconds: f64,
    pub time_flag: bool,
    pub flagged_units: Vec<UnitId>,
    pub duplicate_consistency: Option<Ratio>,
    pub golden_accuracy: Option<Ratio>,
    /// Golden accuracy fell below the pass threshold. Advisory: the worker's
    /// data stays in every export and the worker is still owed payment.
    pub exclude_recommended: bool,
    pub pattern: Option<PatternFinding>,
    pub pattern_flag: bool,
    pub vs_rest_kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub count: usize,
    pub mean_seconds: f64,
    /// Sample standard deviation; absent with fewer than two durations.
    pub std_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedDuration {
    pub worker_id: WorkerId,
    pub unit_id: UnitId,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub worker_id: WorkerId,
    pub unit_id: UnitId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub template: Template,
    pub units: usize,
    pub submissions: usize,
    pub golden_pass_threshold: f64,
    pub workers: Vec<WorkerSummary>,
    pub agreement: Option<AgreementTable>,
    /// Label counts per question over first-occurrence slots.
    pub label_distributions: BTreeMap<String, BTreeMap<String, usize>>,
    pub durations: DurationStats,
    pub time_population_insufficient: bool,
    pub flagged_durations: Vec<FlaggedDuration>,
    pub feedback: Vec<FeedbackEntry>,
    /// Sections that do not apply to this template.
    pub not_applicable: Vec<String>,
}

impl QualityReport {
    pub fn worker(&self, id: &str) -> Option<&WorkerSummary> {
        self.workers.iter().find(|w| w.worker_id.as_str() == id)
    }
}

/// Sections left out for free-form dialog projects.
pub const INTERACTIVE_NOT_APPLICABLE: [&str; 5] = [
    "agreement",
    "pattern",
    "duplicate_consistency",
    "golden_accuracy",
    "label_distributions",
];

/// Assembles every quality metric for a project. Deterministic: the same data
/// gives an identical report regardless of submission order.
pub fn build_report(data: &ProjectData, options: &ReportOptions) -> Result<QualityReport, AnalyticsError> {
    if data.submissions.is_empty() {
        return Err(AnalyticsError::NoSubmissions);
    }
    let unit_index: BTreeMap<&UnitId, (usize, &TaskUnit)> = data
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| (&u.unit_id, (i, u)))
        .collect();
    let items: BTreeMap<&ItemId, &AnnotationItem> = data
        .items
        .iter()
        .chain(data.golden_pool.iter().map(|g| &g.item))
        .map(|i| (&i.id, i))
        .collect();

    let mut by_worker: BTreeMap<&WorkerId, Vec<(usize, &TaskUnit, &Submission)>> = BTreeMap::new();
    for sub in &data.submissions {
        let (index, unit) = unit_index
            .get(&sub.unit_id)
            .copied()
            .ok_or_else(|| AnalyticsError::UnknownUnit(sub.unit_id.clone()))?;
        by_worker.entry(&sub.worker_id).or_default().push((index, unit, sub));
    }
    for subs in by_worker.values_mut() {
        subs.sort_by(|a, b| (a.0, &a.2.submission_id).cmp(&(b.0, &b.2.submission_id)));
    }

    let categorical = data.config.template != Template::Interactive;

    let durations: Durations = by_worker
        .iter()
        .map(|(w, subs)| {
            (
                (*w).clone(),
                subs.iter().map(|(_, u, s)| (u.unit_id.clone(), s.total_ms)).collect(),
            )
        })
        .collect();
    let outliers = detect_time_outliers(&durations);

    let mut annotations: Annotations = BTreeMap::new();
    let mut distributions: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut pattern_inputs: BTreeMap<&WorkerId, Vec<String>> = BTreeMap::new();
    if categorical {
        for (worker, subs) in &by_worker {
            let labels = annotations.entry((*worker).clone()).or_default();
            let answers = pattern_inputs.entry(worker).or_default();
            for (_, unit, sub) in subs {
                let mut ordered: Vec<_> = sub.answers.iter().collect();
                ordered.sort_by_key(|a| a.position);
                for answer in ordered {
                    answers.extend(pattern_answers(&answer.payload));
                    let Some(slot) = unit.slots.get(answer.position) else {
                        continue;
                    };
                    if matches!(slot.kind, SlotKind::Duplicate { .. }) {
                        continue;
                    }
                    let item = items
                        .get(&slot.item_ref)
                        .ok_or_else(|| AnalyticsError::UnknownItem(slot.item_ref.clone()))?;
                    for (question, index, label) in answer_labels(item, &answer.payload) {
                        *distributions
                            .entry(question.clone())
                            .or_default()
                            .entry(label.clone())
                            .or_default() += 1;
                        labels.insert(
                            AnnotationKey {
                                unit_id: unit.unit_id.clone(),
                                position: slot.position,
                                question,
                                index,
                            },
                            label,
                        );
                    }
                }
            }
        }
    }
    let agreement = categorical.then(|| agreement_table(&annotations, options.min_overlap));

    let threshold = data.config.qc.golden_pass_threshold;
    let mut workers = Vec::with_capacity(by_worker.len());
    for (worker, subs) in &by_worker {
        let mut dup = None;
        let mut gold = None;
        if categorical {
            for (_, unit, sub) in subs {
                dup = Ratio::combine(dup, duplicate_consistency(sub, unit)?);
                gold = Ratio::combine(gold, golden_accuracy(sub, unit)?);
            }
        }
        let flagged_units: Vec<UnitId> = outliers
            .flagged
            .iter()
            .filter(|(w, _)| w == *worker)
            .map(|(_, u)| u.clone())
            .collect();
        let total_ms: u64 = subs.iter().map(|(_, _, s)| s.total_ms).sum();
        let pattern = pattern_inputs
            .get(worker)
            .map(|answers| detect_pattern(answers, &options.pattern));
        workers.push(WorkerSummary {
            worker_id: (*worker).clone(),
            units_submitted: subs.len(),
            mean_seconds: total_ms as f64 / 1000.0 / subs.len() as f64,
            time_flag: !flagged_units.is_empty(),
            flagged_units,
            duplicate_consistency: dup,
            golden_accuracy: gold,
            exclude_recommended: gold.is_some_and(|g| g.value < threshold),
            pattern_flag: pattern.as_ref().is_some_and(|p| p.flagged),
            pattern,
            vs_rest_kappa: agreement
                .as_ref()
                .and_then(|t| worker_vs_rest_kappa(worker, t)),
        });
    }

    let mut sorted_subs: Vec<(usize, &Submission)> = data
        .submissions
        .iter()
        .map(|s| (unit_index[&s.unit_id].0, s))
        .collect();
    sorted_subs.sort_by(|a, b| (a.0, &a.1.worker_id, &a.1.submission_id).cmp(&(b.0, &b.1.worker_id, &b.1.submission_id)));

    let seconds: Vec<f64> = sorted_subs.iter().map(|(_, s)| s.total_seconds()).collect();
    let flagged_durations = sorted_subs
        .iter()
        .filter(|(_, s)| outliers.flagged.contains(&(s.worker_id.clone(), s.unit_id.clone())))
        .map(|(_, s)| FlaggedDuration {
            worker_id: s.worker_id.clone(),
            unit_id: s.unit_id.clone(),
            seconds: s.total_seconds(),
        })
        .collect();
    let feedback = sorted_subs
        .iter()
        .filter_map(|(_, s)| {
            s.feedback
                .as_ref()
                .filter(|f| !f.trim().is_empty())
                .map(|text| FeedbackEntry {
                    worker_id: s.worker_id.clone(),
                    unit_id: s.unit_id.clone(),
                    text: text.clone(),
                })
        })
        .collect();

    Ok(QualityReport {
        template: data.config.template,
        units: data.units.len(),
        submissions: data.submissions.len(),
        golden_pass_threshold: threshold,
        workers,
        agreement,
        label_distributions: distributions,
        durations: duration_stats(&seconds),
        time_population_insufficient: outliers.insufficient_population,
        flagged_durations,
        feedback,
        not_applicable: if categorical {
            Vec::new()
        } else {
            INTERACTIVE_NOT_APPLICABLE.iter().map(|s| (*s).to_owned()).collect()
        },
    })
}

fn duration_stats(seconds: &[f64]) -> DurationStats {
    let count = seconds.len();
    let mean = seconds.iter().sum::<f64>() / count as f64;
    let std = (count >= 2).then(|| {
        let ss: f64 = seconds.iter().map(|s| (s - mean) * (s - mean)).sum();
        (ss / (count - 1) as f64).sqrt()
    });
    DurationStats {
        count,
        mean_seconds: mean,
        std_seconds: std,
    }
}
