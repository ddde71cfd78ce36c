//! The individual quality signals: kappa, time outliers and the
//! single-answer pattern rule.

use std::collections::BTreeMap;

use crowdqc::analytics::{cohen_kappa, detect_pattern, detect_time_outliers, PatternRule};
use crowdqc::model::{UnitId, WorkerId};

fn main() {
    let a = ["yes", "yes", "no", "no", "yes", "no"];
    let b = ["yes", "no", "no", "no", "yes", "yes"];
    println!("kappa = {:.3}", cohen_kappa(&a, &b).unwrap());

    let mut durations = BTreeMap::new();
    for (w, secs) in [("ana", [55, 61, 58]), ("ben", [60, 63, 57]), ("cai", [59, 62, 2]), ("dev", [58, 600, 60])] {
        let units = secs
            .iter()
            .enumerate()
            .map(|(u, s)| (UnitId::new(format!("unit-{u:04}")), s * 1000))
            .collect();
        durations.insert(WorkerId::from(w), units);
    }
    for (worker, unit) in detect_time_outliers(&durations).flagged {
        println!("unusual time: {worker} on {unit}");
    }

    let bot: Vec<String> = std::iter::repeat_n("book_flight".to_string(), 12).collect();
    let finding = detect_pattern(&bot, &PatternRule::default());
    println!("pattern flagged={} ({})", finding.flagged, finding.description);
}
