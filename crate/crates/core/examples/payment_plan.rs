//! Suggested per-unit payment and the size and cost of a deployment.
//!
//!     cargo run --example payment_plan -- 100 4

use crowdqc::config::{PaymentInputs, QualityControlConfig};
use crowdqc::planner::{plan_deployment, suggest_payment};

fn main() {
    let mut args = std::env::args().skip(1);
    let n_items: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let minutes: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(4.0);

    for m in [1.0, 2.5, minutes, 60.0] {
        let cents = suggest_payment(&PaymentInputs::new(m));
        println!("{m:>6} min/unit at $15.00/h -> {cents} cents");
    }

    let qc = QualityControlConfig {
        items_per_unit: 10,
        units_per_task: 2,
        duplicates_per_unit: 1,
        golden_per_unit: 1,
        ..QualityControlConfig::default()
    };
    match plan_deployment(n_items, &qc, &PaymentInputs::new(minutes)) {
        Ok(plan) => println!("{}", serde_json::to_string_pretty(&plan).unwrap()),
        Err(e) => eprintln!("[{}] {e}", e.code()),
    }
}
