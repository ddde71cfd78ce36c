use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::kappa::cohen_kappa;
use crate::model::{UnitId, WorkerId};

/// Minimum number of shared annotations before a pair's kappa is reported.
pub const DEFAULT_MIN_OVERLAP: usize = 5;

/// One co-annotatable judgement: a question asked about a slot of a unit.
/// `index` distinguishes several labels per question (entity tokens).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotationKey {
    pub unit_id: UnitId,
    pub position: usize,
    pub question: String,
    pub index: usize,
}

/// Every worker's labels, keyed by annotation.
pub type Annotations = BTreeMap<WorkerId, BTreeMap<AnnotationKey, String>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub worker_a: WorkerId,
    pub worker_b: WorkerId,
    pub kappa: f64,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub worker_a: WorkerId,
    pub worker_b: WorkerId,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionAgreement {
    /// Mean of the pairwise kappas restricted to this question.
    pub mean_pairwise_kappa: Option<f64>,
    /// Pairs that met the overlap minimum on this question.
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementTable {
    pub min_overlap: usize,
    /// Pairs with `worker_a < worker_b` and enough overlap, sorted.
    pub pairwise: Vec<PairAgreement>,
    /// Pairs that co-annotated something, but too little.
    pub insufficient_overlap: Vec<PairOverlap>,
    pub per_question: BTreeMap<String, QuestionAgreement>,
    /// Kappa over the pooled annotations of every qualifying pair.
    pub overall: Option<f64>,
}

impl AgreementTable {
    /// Symmetric lookup of a pair's (kappa, overlap).
    pub fn pair(&self, a: &WorkerId, b: &WorkerId) -> Option<(f64, usize)> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.pairwise
            .iter()
            .find(|p| &p.worker_a == lo && &p.worker_b == hi)
            .map(|p| (p.kappa, p.overlap))
    }
}

fn shared<'a>(
    a: &'a BTreeMap<AnnotationKey, String>,
    b: &'a BTreeMap<AnnotationKey, String>,
) -> Vec<(&'a AnnotationKey, &'a str, &'a str)> {
    a.iter()
        .filter_map(|(key, la)| b.get(key).map(|lb| (key, la.as_str(), lb.as_str())))
        .collect()
}

fn kappa_of(pairs: &[(&AnnotationKey, &str, &str)]) -> f64 {
    let a: Vec<&str> = pairs.iter().map(|p| p.1).collect();
    let b: Vec<&str> = pairs.iter().map(|p| p.2).collect();
    cohen_kappa(&a, &b).expect("non-empty, equal-length sequences")
}

/// Pairwise, per-question and pooled agreement over co-annotated judgements.
pub fn agreement_table(annotations: &Annotations, min_overlap: usize) -> AgreementTable {
    let min_overlap = min_overlap.max(1);
    let workers: Vec<&WorkerId> = annotations.keys().collect();
    let questions: BTreeSet<&str> = annotations
        .values()
        .flat_map(|m| m.keys().map(|k| k.question.as_str()))
        .collect();

    let mut pairwise = Vec::new();
    let mut insufficient = Vec::new();
    let mut per_question: BTreeMap<&str, Vec<f64>> =
        questions.iter().map(|q| (*q, Vec::new())).collect();
    let mut pooled_a: Vec<&str> = Vec::new();
    let mut pooled_b: Vec<&str> = Vec::new();

    for (i, a) in workers.iter().enumerate() {
        for b in &workers[i + 1..] {
            let common = shared(&annotations[*a], &annotations[*b]);
            if common.is_empty() {
                continue;
            }
            if common.len() < min_overlap {
                insufficient.push(PairOverlap {
                    worker_a: (*a).clone(),
                    worker_b: (*b).clone(),
                    overlap: common.len(),
                });
            } else {
                pairwise.push(PairAgreement {
                    worker_a: (*a).clone(),
                    worker_b: (*b).clone(),
                    kappa: kappa_of(&common),
                    overlap: common.len(),
                });
                pooled_a.extend(common.iter().map(|p| p.1));
                pooled_b.extend(common.iter().map(|p| p.2));
            }
            for question in &questions {
                let restricted: Vec<_> = common
                    .iter()
                    .filter(|p| p.0.question == *question)
                    .copied()
                    .collect();
                if restricted.len() >= min_overlap {
                    per_question
                        .get_mut(question)
                        .expect("question collected above")
                        .push(kappa_of(&restricted));
                }
            }
        }
    }

    let overall = (!pooled_a.is_empty())
        .then(|| cohen_kappa(&pooled_a, &pooled_b).expect("non-empty pooled sequences"));

    AgreementTable {
        min_overlap,
        pairwise,
        insufficient_overlap: insufficient,
        per_question: per_question
            .into_iter()
            .map(|(q, kappas)| {
                let mean = (!kappas.is_empty())
                    .then(|| kappas.iter().sum::<f64>() / kappas.len() as f64);
                (
                    q.to_owned(),
                    QuestionAgreement {
                        mean_pairwise_kappa: mean,
                        pairs: kappas.len(),
                    },
                )
            })
            .collect(),
        overall,
    }
}

/// Overlap-weighted mean of the worker's pairwise kappas.
pub fn worker_vs_rest_kappa(worker: &WorkerId, table: &AgreementTable) -> Option<f64> {
    let (weighted, weight) = table
        .pairwise
        .iter()
        .filter(|p| &p.worker_a == worker || &p.worker_b == worker)
        .fold((0.0, 0usize), |(sum, w), p| {
            (sum + p.kappa * p.overlap as f64, w + p.overlap)
        });
    (weight > 0).then(|| weighted / weight as f64)
}
