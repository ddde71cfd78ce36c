use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{UnitId, WorkerId};

/// Per-worker unit durations in milliseconds.
pub type Durations = BTreeMap<WorkerId, Vec<(UnitId, u64)>>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeOutliers {
    pub flagged: BTreeSet<(WorkerId, UnitId)>,
    /// Fewer than three workers contributed durations; nothing was flagged.
    pub insufficient_population: bool,
}

/// Flags each (worker, unit) duration lying more than two sample standard
/// deviations from the mean of all other workers' durations. When the other
/// workers' durations have zero spread, any deviation is flagged.
pub fn detect_time_outliers(durations: &Durations) -> TimeOutliers {
    let contributing: Vec<(&WorkerId, &Vec<(UnitId, u64)>)> = durations
        .iter()
        .filter(|(_, d)| !d.is_empty())
        .collect();
    if contributing.len() < 3 {
        return TimeOutliers {
            flagged: BTreeSet::new(),
            insufficient_population: true,
        };
    }

    let moments = |values: &[(UnitId, u64)]| {
        values.iter().fold((0i128, 0i128, 0i128), |(n, s, q), (_, t)| {
            let t = *t as i128;
            (n + 1, s + t, q + t * t)
        })
    };
    let (n_all, s_all, q_all) = contributing
        .iter()
        .map(|(_, d)| moments(d))
        .fold((0, 0, 0), |acc, m| (acc.0 + m.0, acc.1 + m.1, acc.2 + m.2));

    let mut flagged = BTreeSet::new();
    for (worker, values) in &contributing {
        let (n_w, s_w, q_w) = moments(values);
        let (n, s, q) = (n_all - n_w, s_all - s_w, q_all - q_w);
        // |t - s/n| > 2 * sqrt((n q - s^2) / (n (n - 1)))
        // <=> (n t - s)^2 (n - 1) > 4 n (n q - s^2), exactly in integers.
        let spread = 4 * n * (n * q - s * s);
        for (unit, t) in values.iter() {
            let deviation = n * (*t as i128) - s;
            if deviation * deviation * (n - 1) > spread {
                flagged.insert(((*worker).clone(), unit.clone()));
            }
        }
    }
    TimeOutliers {
        flagged,
        insufficient_population: false,
    }
}
