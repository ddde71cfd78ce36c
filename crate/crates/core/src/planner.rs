//! Payment suggestion, deployment counts and task-unit construction with
//! duplicate and golden items injected.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{validate_qc, PaymentInputs, QualityControlConfig};
use crate::model::{AnnotationItem, GoldenItem, Slot, SlotKind, TaskUnit, UnitId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("invalid quality-control config: {0}")]
    InvalidConfig(String),
    #[error("golden pool has {available} items but {needed} are needed per unit")]
    InsufficientGolden { needed: usize, available: usize },
    #[error("no items to plan for")]
    EmptyItems,
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidConfig(_) => "invalid-config",
            Self::InsufficientGolden { .. } => "insufficient-golden",
            Self::EmptyItems => "empty-items",
        }
    }
}

/// Suggested payment per unit in whole cents, rounded up so the hourly rate
/// is never undercut.
pub fn suggest_payment(inputs: &PaymentInputs) -> u64 {
    let rate = inputs.hourly_rate_cents as u128;
    let exact = minutes_as_decimal(inputs.estimated_minutes_per_unit).and_then(|(num, scale)| {
        // ceil(rate * num / (60 * scale))
        let numerator = rate.checked_mul(num)?;
        let denominator = 60u128.checked_mul(scale)?;
        u64::try_from(numerator.div_ceil(denominator)).ok()
    });
    exact.unwrap_or_else(|| {
        (inputs.hourly_rate_cents as f64 * inputs.estimated_minutes_per_unit / 60.0).ceil() as u64
    })
}

/// The decimal value a requester typed, as `numerator / scale` with `scale` a
/// power of ten. `None` for non-finite, negative or unrepresentable inputs.
pub(crate) fn minutes_as_decimal(minutes: f64) -> Option<(u128, u128)> {
    if !minutes.is_finite() || minutes < 0.0 {
        return None;
    }
    // Display for f64 prints the shortest round-tripping decimal, never in
    // exponent notation.
    let text = minutes.to_string();
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    if int_part.len() + frac_part.len() > 36 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: u128 = digits.parse().ok()?;
    let scale = 10u128.checked_pow(frac_part.len() as u32)?;
    Some((num, scale))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub n_items: u64,
    pub fresh_per_unit: u32,
    pub total_units: u64,
    pub units_per_task: u32,
    /// Platform-level tasks (HITs), each bundling `units_per_task` units.
    pub total_tasks: u64,
    pub assignments_per_unit: u32,
    pub suggested_payment_cents_per_unit: u64,
    pub total_budget_cents: u64,
    /// Seed used to lay out unit slots, once units are built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,
}

pub fn plan_deployment(
    n_items: u64,
    qc: &QualityControlConfig,
    payment: &PaymentInputs,
) -> Result<DeploymentPlan, PlanError> {
    check_qc(qc)?;
    if n_items == 0 {
        return Err(PlanError::EmptyItems);
    }
    let fresh_per_unit = qc
        .fresh_per_unit()
        .ok_or_else(|| PlanError::InvalidConfig("no slots left for fresh items".into()))?;
    let total_units = n_items.div_ceil(fresh_per_unit as u64);
    let total_tasks = total_units.div_ceil(qc.units_per_task as u64);
    let payment_cents = suggest_payment(payment);
    Ok(DeploymentPlan {
        n_items,
        fresh_per_unit,
        total_units,
        units_per_task: qc.units_per_task,
        total_tasks,
        assignments_per_unit: qc.assignments_per_unit,
        suggested_payment_cents_per_unit: payment_cents,
        total_budget_cents: total_units
            .saturating_mul(qc.assignments_per_unit as u64)
            .saturating_mul(payment_cents),
        shuffle_seed: None,
    })
}

fn check_qc(qc: &QualityControlConfig) -> Result<(), PlanError> {
    let mut violations = Vec::new();
    validate_qc(qc, &mut violations);
    match violations.first() {
        Some(v) => Err(PlanError::InvalidConfig(v.message.clone())),
        None => Ok(()),
    }
}

/// A unit that could not be filled to `items_per_unit` slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub unit_id: UnitId,
    pub missing_slots: usize,
    /// Duplicates left out because the unit had no room to space them.
    pub dropped_duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitBuild {
    pub units: Vec<TaskUnit>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortfall: Option<Shortfall>,
}

pub fn unit_id(index: usize) -> UnitId {
    UnitId(format!("unit-{:04}", index + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Content {
    Fresh(usize),
    Golden(usize),
    Duplicate(usize),
}

const LAYOUT_ATTEMPTS: usize = 64;

/// Splits items into units of `fresh_per_unit` fresh slots (in input order)
/// and adds duplicate and golden slots. Slot order within each unit is a
/// shuffle driven by `qc.shuffle_seed`, or by a freshly drawn seed that is
/// returned in the result.
pub fn build_units(
    items: &[AnnotationItem],
    golden_pool: &[GoldenItem],
    qc: &QualityControlConfig,
) -> Result<UnitBuild, PlanError> {
    check_qc(qc)?;
    if items.is_empty() {
        return Err(PlanError::EmptyItems);
    }
    let golden_per_unit = qc.golden_per_unit as usize;
    if golden_pool.len() < golden_per_unit {
        return Err(PlanError::InsufficientGolden {
            needed: golden_per_unit,
            available: golden_pool.len(),
        });
    }
    let unit_len = qc.items_per_unit as usize;
    let duplicates = qc.duplicates_per_unit as usize;
    let fresh_per_unit = qc.fresh_per_unit().expect("validated") as usize;

    let seed = qc.shuffle_seed.unwrap_or_else(|| rand::rng().random());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut golden_cursor = 0usize;
    let mut shortfall = None;
    let mut units = Vec::with_capacity(items.len().div_ceil(fresh_per_unit));

    for (index, chunk) in items.chunks(fresh_per_unit).enumerate() {
        let mut golden = Vec::with_capacity(golden_per_unit);
        for _ in 0..golden_per_unit {
            golden.push(golden_cursor % golden_pool.len());
            golden_cursor += 1;
        }

        // Only the last chunk can be short; pad it with unused golden items.
        let filled = chunk.len() + duplicates + golden.len();
        if filled < unit_len {
            let extra = (unit_len - filled).min(golden_pool.len() - golden.len());
            let mut added = 0;
            while added < extra {
                let candidate = golden_cursor % golden_pool.len();
                golden_cursor += 1;
                if !golden.contains(&candidate) {
                    golden.push(candidate);
                    added += 1;
                }
            }
        }

        let mut unit_duplicates = duplicates;
        if chunk.len() + golden.len() < 2 {
            unit_duplicates = 0;
        }
        let total = chunk.len() + golden.len() + unit_duplicates;
        if total < unit_len || unit_duplicates < duplicates {
            shortfall = Some(Shortfall {
                unit_id: unit_id(index),
                missing_slots: unit_len - total,
                dropped_duplicates: duplicates - unit_duplicates,
            });
        }

        let mut contents: Vec<Content> = (0..chunk.len())
            .map(Content::Fresh)
            .chain(golden.iter().map(|&g| Content::Golden(g)))
            .chain((0..unit_duplicates).map(|j| Content::Duplicate(j % chunk.len())))
            .collect();
        let fallback = contents.clone();
        let mut placed = false;
        for _ in 0..LAYOUT_ATTEMPTS {
            contents.shuffle(&mut rng);
            if spacing_ok(&contents) {
                placed = true;
                break;
            }
        }
        if !placed {
            // Fresh items first and duplicates last keeps every copy at least
            // (fresh + golden) >= 2 slots from its original.
            contents = fallback;
        }

        units.push(make_unit(index, &contents, chunk, golden_pool));
    }

    Ok(UnitBuild {
        units,
        seed,
        shortfall,
    })
}

fn fresh_position(contents: &[Content], fresh: usize) -> usize {
    contents
        .iter()
        .position(|c| *c == Content::Fresh(fresh))
        .expect("every duplicate has its fresh original")
}

fn spacing_ok(contents: &[Content]) -> bool {
    contents.iter().enumerate().all(|(pos, c)| match c {
        Content::Duplicate(fresh) => fresh_position(contents, *fresh).abs_diff(pos) >= 2,
        _ => true,
    })
}

fn make_unit(
    index: usize,
    contents: &[Content],
    chunk: &[AnnotationItem],
    golden_pool: &[GoldenItem],
) -> TaskUnit {
    let slots = contents
        .iter()
        .enumerate()
        .map(|(position, content)| match *content {
            Content::Fresh(i) => Slot {
                position,
                item_ref: chunk[i].id.clone(),
                kind: SlotKind::Fresh,
            },
            Content::Golden(g) => Slot {
                position,
                item_ref: golden_pool[g].item.id.clone(),
                kind: SlotKind::Golden {
                    expected_answer: golden_pool[g].expected_answer.clone(),
                },
            },
            Content::Duplicate(i) => Slot {
                position,
                item_ref: chunk[i].id.clone(),
                kind: SlotKind::Duplicate {
                    of_position: fresh_position(contents, i),
                },
            },
        })
        .collect();
    TaskUnit {
        unit_id: unit_id(index),
        slots,
    }
}
