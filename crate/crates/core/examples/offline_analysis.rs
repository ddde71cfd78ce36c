//! Drive a project through the library API, export it, and analyze the
//! export without the service — the same report the server produces.

use std::sync::Arc;
use std::time::Duration;

use crowdqc::analytics::{build_report, ReportOptions};
use crowdqc::ingest::PayloadFormat;
use crowdqc::model::{Answer, AnswerPayload, WorkerId};
use crowdqc::service::{ExportDocument, ExportFormat, LaunchMode, ManualClock, Service, SubmitRequest};
use crowdqc::sim::SimConfig;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(0));
    let svc = Service::open(dir.path(), clock.clone(), Duration::from_secs(3600)).unwrap();

    let sim = SimConfig { n_items: 12, n_golden: 2, ..SimConfig::default() };
    let data = sim.dataset();
    let id = svc.create_project(sim.task_config()).unwrap().project_id;
    svc.upload_items(&id, &data.items_json, PayloadFormat::Json, false).unwrap();
    svc.upload_items(&id, &data.golden_json, PayloadFormat::Json, true).unwrap();
    svc.launch(&id, LaunchMode::Full, None).unwrap();

    for (w, secs) in [("ana", 50), ("ben", 65), ("cai", 58), ("dev", 3)] {
        let worker = WorkerId::from(w);
        while let Ok(view) = svc.claim_next_unit(&id, &worker) {
            let answers = view
                .items
                .iter()
                .map(|item| Answer {
                    position: item.position,
                    payload: AnswerPayload::choice(data.truth.get(&item.text).cloned().unwrap_or_else(|| "book_flight".into())),
                })
                .collect();
            clock.advance_ms(secs * 1000);
            let request = SubmitRequest {
                worker_id: worker.clone(),
                unit_id: view.unit_id,
                answers,
                per_slot_ms: vec![],
                feedback: None,
                consent_acknowledged: true,
            };
            svc.submit(&id, request).unwrap();
        }
    }

    let export = svc.export(&id, ExportFormat::Json).unwrap();
    let doc = ExportDocument::from_json(&export).unwrap();
    let offline = build_report(&doc.project, &ReportOptions::default()).unwrap();
    assert_eq!(offline, svc.get_report(&id, &ReportOptions::default()).unwrap());
    println!("{}", serde_json::to_string_pretty(&offline).unwrap());
}
