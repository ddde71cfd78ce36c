//! Parse a task configuration, check it, lint it and write it back out.
//!
//!     cargo run --example config_roundtrip -- my-task.json

use crowdqc::config::{lint_clarity, parse_config, serialize_config, validate_config};

const SAMPLE: &str = r#"{
  "schema": 1,
  "template": "intent_classification",
  "title": "Travel intents",
  "general_instructions": "Read each customer message and pick the intent it expresses.",
  "categories": [
    {"name": "book_flight", "instructions": "The customer wants to buy a ticket.",
     "examples": [{"text": "fly me to Rome on Friday", "explanation": "asks for a new flight"}],
     "counterexamples": [{"text": "cancel my Rome flight", "explanation": "a cancellation"}]},
    {"name": "cancel_booking", "instructions": "The customer wants to cancel."}
  ],
  "payment": {"estimated_minutes_per_unit": 3},
  "qc": {"items_per_unit": 8, "units_per_task": 2, "duplicates_per_unit": 1, "golden_per_unit": 1}
}"#;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).expect("readable config"),
        None => SAMPLE.to_owned(),
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("[{}] {e}", e.code());
            std::process::exit(1);
        }
    };
    for v in validate_config(&config) {
        println!("violation {}: {}", v.code, v.message);
    }
    for f in lint_clarity(&config).findings {
        println!("{:?} {}: {}", f.severity, f.code, f.message);
    }

    let canonical = serialize_config(&config);
    assert_eq!(parse_config(&canonical).unwrap(), config);
    println!("{canonical}");
}
