//! Pack items into units with duplicate and golden slots, reproducibly.

use crowdqc::config::QualityControlConfig;
use crowdqc::model::{AnnotationItem, AnswerPayload, GoldenItem, ItemId, SlotKind};
use crowdqc::planner::build_units;

fn main() {
    let items: Vec<AnnotationItem> = (0..10)
        .map(|i| AnnotationItem { id: ItemId::new(format!("item-{i}")), text: format!("message {i}"), context: None })
        .collect();
    let golden = vec![GoldenItem {
        item: AnnotationItem { id: ItemId::new("gold-0"), text: "book me a flight".into(), context: None },
        expected_answer: AnswerPayload::choice("book_flight"),
    }];
    let qc = QualityControlConfig {
        items_per_unit: 6,
        units_per_task: 1,
        duplicates_per_unit: 1,
        golden_per_unit: 1,
        shuffle_seed: Some(42),
        ..QualityControlConfig::default()
    };

    let build = build_units(&items, &golden, &qc).expect("valid quality-control settings");
    println!("seed {}", build.seed);
    for unit in &build.units {
        let slots: Vec<String> = unit
            .slots
            .iter()
            .map(|s| match &s.kind {
                SlotKind::Fresh => s.item_ref.to_string(),
                SlotKind::Duplicate { of_position } => format!("dup@{of_position}"),
                SlotKind::Golden { .. } => format!("gold:{}", s.item_ref),
            })
            .collect();
        println!("{}: {}", unit.unit_id, slots.join(" "));
    }
    if let Some(s) = &build.shortfall {
        println!("short final unit {}: {} slot(s) missing", s.unit_id, s.missing_slots);
    }
    assert_eq!(build_units(&items, &golden, &qc).unwrap().units, build.units);
}
