use std::fmt::Write;

use super::checks::Ratio;
use super::report::QualityReport;

fn ratio(r: &Option<Ratio>) -> String {
    match r {
        Some(r) => format!("{:.3} ({}/{})", r.value, r.matched, r.total),
        None => "n/a".into(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.3}"))
}

fn yes(flag: bool) -> &'static str {
    if flag {
        "**yes**"
    } else {
        "no"
    }
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

/// Renders the data summary page as Markdown. Output depends only on the
/// report, so equal reports render byte-identically.
pub fn render_report_markdown(report: &QualityReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "# Quality report\n");
    let _ = writeln!(
        w,
        "Template: `{}` | units: {} | submissions: {} | workers: {}\n",
        report.template.as_str(),
        report.units,
        report.submissions,
        report.workers.len()
    );
    let _ = writeln!(
        w,
        "Durations: mean {:.1} s, sd {} s over {} submissions{}\n",
        report.durations.mean_seconds,
        report
            .durations
            .std_seconds
            .map_or("n/a".into(), |s| format!("{s:.1}")),
        report.durations.count,
        if report.time_population_insufficient {
            " (fewer than 3 workers: time flags disabled)"
        } else {
            ""
        }
    );
    if !report.not_applicable.is_empty() {
        let _ = writeln!(w, "Not applicable for this template: {}\n", report.not_applicable.join(", "));
    }

    let _ = writeln!(w, "## Workers\n");
    let _ = writeln!(
        w,
        "| Worker | Units | Mean s | Time flag | Pattern flag | Golden accuracy | Exclude? | Duplicate consistency | Kappa vs rest |"
    );
    let _ = writeln!(w, "|---|---:|---:|---|---|---|---|---|---:|");
    for worker in &report.workers {
        let _ = writeln!(
            w,
            "| {} | {} | {:.1} | {} | {} | {} | {} | {} | {} |",
            cell(worker.worker_id.as_str()),
            worker.units_submitted,
            worker.mean_seconds,
            yes(worker.time_flag),
            yes(worker.pattern_flag),
            ratio(&worker.golden_accuracy),
            yes(worker.exclude_recommended),
            ratio(&worker.duplicate_consistency),
            opt(worker.vs_rest_kappa),
        );
    }
    let patterns: Vec<_> = report
        .workers
        .iter()
        .filter(|w| w.pattern_flag)
        .filter_map(|w| w.pattern.as_ref().map(|p| (w, p)))
        .collect();
    if !patterns.is_empty() {
        let _ = writeln!(w, "\nPattern findings:\n");
        for (worker, p) in patterns {
            let _ = writeln!(w, "- {}: {}", cell(worker.worker_id.as_str()), p.description);
        }
    }

    if let Some(agreement) = &report.agreement {
        let _ = writeln!(w, "\n## Agreement (Cohen's kappa)\n");
        let _ = writeln!(w, "Overall (pooled): {}\n", opt(agreement.overall));
        let _ = writeln!(w, "| Question | Mean pairwise kappa | Pairs |");
        let _ = writeln!(w, "|---|---:|---:|");
        for (question, q) in &agreement.per_question {
            let _ = writeln!(w, "| {} | {} | {} |", cell(question), opt(q.mean_pairwise_kappa), q.pairs);
        }
        let _ = writeln!(w, "\n| Worker A | Worker B | Kappa | Overlap |");
        let _ = writeln!(w, "|---|---|---:|---:|");
        for p in &agreement.pairwise {
            let _ = writeln!(
                w,
                "| {} | {} | {:.3} | {} |",
                cell(p.worker_a.as_str()),
                cell(p.worker_b.as_str()),
                p.kappa,
                p.overlap
            );
        }
        if !agreement.insufficient_overlap.is_empty() {
            let _ = writeln!(
                w,
                "\n{} pair(s) shared fewer than {} annotations and are omitted.",
                agreement.insufficient_overlap.len(),
                agreement.min_overlap
            );
        }
    }

    if !report.label_distributions.is_empty() {
        let _ = writeln!(w, "\n## Label distributions\n");
        for (question, counts) in &report.label_distributions {
            let total: usize = counts.values().sum();
            let parts: Vec<String> = counts
                .iter()
                .map(|(label, n)| format!("{} {} ({:.1}%)", cell(label), n, 100.0 * *n as f64 / total as f64))
                .collect();
            let _ = writeln!(w, "- {}: {}", cell(question), parts.join(", "));
        }
    }

    if !report.flagged_durations.is_empty() {
        let _ = writeln!(w, "\n## Flagged durations\n");
        let _ = writeln!(w, "| Worker | Unit | Seconds |");
        let _ = writeln!(w, "|---|---|---:|");
        for f in &report.flagged_durations {
            let _ = writeln!(w, "| {} | {} | {:.1} |", cell(f.worker_id.as_str()), f.unit_id, f.seconds);
        }
    }

    if !report.feedback.is_empty() {
        let _ = writeln!(w, "\n## Worker feedback\n");
        for f in &report.feedback {
            let _ = writeln!(w, "- {} on {}: {}", cell(f.worker_id.as_str()), f.unit_id, cell(&f.text));
        }
    }
    out
}
