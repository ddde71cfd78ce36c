use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::*;
use crate::config::fixtures::intent_config;
use crate::config::ECHO_AGENT_ENDPOINT;
use crate::model::{AnswerPayload, Span};

const MINUTE: u64 = 60_000;

struct Fixture {
    _dir: tempfile::TempDir,
    clock: Arc<ManualClock>,
    svc: Service,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(1_000_000));
    let svc = Service::open(dir.path(), clock.clone(), Duration::from_secs(3600)).unwrap();
    Fixture { _dir: dir, clock, svc }
}

fn items_json(n: usize) -> String {
    let rows: Vec<_> = (0..n)
        .map(|i| serde_json::json!({"id": format!("i{i:03}"), "text": format!("utterance number {i}")}))
        .collect();
    serde_json::to_string(&rows).unwrap()
}

fn golden_json(n: usize) -> String {
    let rows: Vec<_> = (0..n)
        .map(|i| serde_json::json!({"id": format!("g{i}"), "text": format!("book a flight {i}"), "expected_answer": "book_flight"}))
        .collect();
    serde_json::to_string(&rows).unwrap()
}

/// Creates a project with `n` items and 3 golden items.
fn project(f: &Fixture, n: usize) -> String {
    let id = f.svc.create_project(intent_config()).unwrap().project_id;
    f.svc.upload_items(&id, &items_json(n), PayloadFormat::Json, false).unwrap();
    f.svc.upload_items(&id, &golden_json(3), PayloadFormat::Json, true).unwrap();
    id
}

fn answers(view: &UnitView, label: &str) -> SubmitRequest {
    SubmitRequest {
        worker_id: WorkerId::from("placeholder"),
        unit_id: view.unit_id.clone(),
        answers: view
            .items
            .iter()
            .map(|i| Answer {
                position: i.position,
                payload: AnswerPayload::choice(label),
            })
            .collect(),
        per_slot_ms: vec![],
        feedback: None,
        consent_acknowledged: true,
    }
}

fn claim_and_submit(f: &Fixture, id: &str, worker: &str) -> SubmitReceipt {
    let w = WorkerId::from(worker);
    let view = f.svc.claim_next_unit(id, &w).unwrap();
    f.clock.advance_ms(MINUTE);
    let mut req = answers(&view, "book_flight");
    req.worker_id = w;
    f.svc.submit(id, req).unwrap()
}

#[test]
fn create_returns_distinct_ids_and_lint() {
    let f = fixture();
    let a = f.svc.create_project(intent_config()).unwrap();
    let b = f.svc.create_project(intent_config()).unwrap();
    assert_ne!(a.project_id, b.project_id);
    assert!(a.lint.codes().contains(&"pilot-first"));
    assert_eq!(f.svc.status(&a.project_id).unwrap().state, ProjectState::Draft);
}

#[test]
fn invalid_config_is_rejected_with_violations() {
    let f = fixture();
    let mut config = intent_config();
    config.title.clear();
    match f.svc.create_project(config) {
        Err(ServiceError::InvalidConfig(v)) => assert!(v.iter().any(|v| v.code == "TaskConfig.title")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn upload_reports_rejected_rows_and_is_closed_after_launch() {
    let f = fixture();
    let id = f.svc.create_project(intent_config()).unwrap().project_id;
    let summary = f
        .svc
        .upload_items(&id, r#"[{"text": "hi"}, {"id": "x"}, {"text": "bye"}]"#, PayloadFormat::Json, false)
        .unwrap();
    assert_eq!(summary.accepted, 2);
    assert_eq!(summary.rejected.len(), 1);
    assert_eq!(summary.rejected[0].row, 1);

    let hundred = f.svc.create_project(intent_config()).unwrap().project_id;
    let summary = f.svc.upload_items(&hundred, &items_json(100), PayloadFormat::Json, false).unwrap();
    assert_eq!((summary.accepted, summary.rejected.len()), (100, 0));

    f.svc.upload_items(&id, &golden_json(1), PayloadFormat::Json, true).unwrap();
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    assert!(matches!(
        f.svc.upload_items(&id, &items_json(1), PayloadFormat::Json, false),
        Err(ServiceError::WrongState(ProjectState::Live))
    ));
}

#[test]
fn full_launch_covers_every_item_and_records_seed() {
    let f = fixture();
    let id = project(&f, 40);
    let plan = f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    assert!(plan.shuffle_seed.is_some());
    let doc = f.svc.export_document(&id).unwrap();
    assert_eq!(doc.state, ProjectState::Live);
    assert_eq!(doc.project.units.len() as u64, plan.total_units);
    let mut fresh: Vec<_> = doc
        .project
        .units
        .iter()
        .flat_map(|u| u.fresh_slots().map(|s| s.item_ref.clone()))
        .collect();
    fresh.sort();
    let mut expected: Vec<_> = doc.project.items.iter().map(|i| i.id.clone()).collect();
    expected.sort();
    assert_eq!(fresh, expected);
    assert!(matches!(f.svc.launch(&id, LaunchMode::Full, None), Err(ServiceError::WrongState(_))));
}

#[test]
fn launch_without_golden_propagates_planner_error() {
    let f = fixture();
    let id = f.svc.create_project(intent_config()).unwrap().project_id;
    f.svc.upload_items(&id, &items_json(16), PayloadFormat::Json, false).unwrap();
    let err = f.svc.launch(&id, LaunchMode::Full, None).unwrap_err();
    assert_eq!(err.code(), "insufficient-golden");
}

#[test]
fn pilot_limits_claimable_units_until_promoted() {
    let f = fixture();
    let id = project(&f, 80);
    f.svc.launch(&id, LaunchMode::Pilot, Some(1)).unwrap();
    assert_eq!(f.svc.status(&id).unwrap().claimable_units, 1);
    for w in ["a", "b", "c"] {
        claim_and_submit(&f, &id, w);
    }
    assert!(matches!(
        f.svc.claim_next_unit(&id, &WorkerId::from("d")),
        Err(ServiceError::NoneAvailable)
    ));
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    let view = f.svc.claim_next_unit(&id, &WorkerId::from("d")).unwrap();
    assert_eq!(view.unit_id.as_str(), "unit-0002");
    assert!(matches!(f.svc.launch(&id, LaunchMode::Pilot, None), Err(ServiceError::WrongState(_))));
}

#[test]
fn worker_view_hides_slot_kinds_and_answers() {
    let f = fixture();
    let id = project(&f, 16);
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    let view = f.svc.claim_next_unit(&id, &WorkerId::from("w1")).unwrap();
    assert_eq!(view.unit_id.as_str(), "unit-0001");
    let json = serde_json::to_value(&view).unwrap();
    let text = json.to_string();
    for forbidden in ["\"kind\"", "of_position", "expected_answer", "item_ref", "\"g0\"", "golden"] {
        assert!(!text.contains(forbidden), "worker view leaks {forbidden}: {text}");
    }
    for item in json["items"].as_array().unwrap() {
        let keys: Vec<_> = item.as_object().unwrap().keys().cloned().collect();
        assert!(keys.iter().all(|k| ["position", "text", "context"].contains(&k.as_str())));
    }
}

#[test]
fn repeated_claim_reissues_the_same_unit() {
    let f = fixture();
    let id = project(&f, 40);
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    let w = WorkerId::from("w1");
    let a = f.svc.claim_next_unit(&id, &w).unwrap();
    f.clock.advance_ms(5 * MINUTE);
    let b = f.svc.claim_next_unit(&id, &w).unwrap();
    assert_eq!(a, b);
}

#[test]
fn capacity_and_no_repeat_units() {
    let f = fixture();
    let id = project(&f, 8); // one unit
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    for w in ["a", "b", "c"] {
        claim_and_submit(&f, &id, w);
    }
    for w in ["a", "d"] {
        assert!(matches!(f.svc.claim_next_unit(&id, &WorkerId::from(w)), Err(ServiceError::NoneAvailable)));
    }
}

#[test]
fn lease_expiry_restores_capacity_and_voids_late_submit() {
    let f = fixture();
    let id = project(&f, 8);
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    let views: Vec<_> = ["a", "b", "c"]
        .iter()
        .map(|w| f.svc.claim_next_unit(&id, &WorkerId::from(*w)).unwrap())
        .collect();
    assert!(matches!(f.svc.claim_next_unit(&id, &WorkerId::from("d")), Err(ServiceError::NoneAvailable)));
    f.clock.advance_ms(60 * MINUTE);
    let view = f.svc.claim_next_unit(&id, &WorkerId::from("d")).unwrap();
    assert_eq!(view.unit_id, views[0].unit_id);

    let mut late = answers(&views[0], "book_flight");
    late.worker_id = WorkerId::from("a");
    assert!(matches!(f.svc.submit(&id, late), Err(ServiceError::NoClaim)));
}

#[test]
fn submit_validates_claim_consent_and_shape() {
    let f = fixture();
    let id = project(&f, 8);
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    let w = WorkerId::from("w");
    let view = f.svc.claim_next_unit(&id, &w).unwrap();

    let mut other = answers(&view, "book_flight");
    other.worker_id = WorkerId::from("stranger");
    assert!(matches!(f.svc.submit(&id, other), Err(ServiceError::NoClaim)));

    let mut req = answers(&view, "book_flight");
    req.worker_id = w.clone();
    req.consent_acknowledged = false;
    assert!(matches!(f.svc.submit(&id, req), Err(ServiceError::ConsentMissing)));

    let mut req = answers(&view, "book_flight");
    req.worker_id = w.clone();
    req.answers.pop();
    assert!(matches!(f.svc.submit(&id, req), Err(ServiceError::ShapeMismatch(_))));

    let mut req = answers(&view, "no_such_intent");
    req.worker_id = w.clone();
    assert!(matches!(f.svc.submit(&id, req), Err(ServiceError::ShapeMismatch(_))));

    let mut req = answers(&view, "book_flight");
    req.worker_id = w.clone();
    req.answers[0].payload = AnswerPayload::Spans {
        spans: vec![Span {
            start: 0,
            end: 500,
            entity_type: "city".into(),
        }],
    };
    assert!(matches!(f.svc.submit(&id, req), Err(ServiceError::ShapeMismatch(_))));

    f.clock.advance_ms(90_500);
    let mut req = answers(&view, "book_flight");
    req.worker_id = w.clone();
    req.feedback = Some("clear enough".into());
    let receipt = f.svc.submit(&id, req.clone()).unwrap();
    assert_eq!(receipt.total_seconds, 90.5);
    // the claim is closed
    assert!(matches!(f.svc.submit(&id, req), Err(ServiceError::NoClaim)));
}

#[test]
fn report_requires_submissions_and_is_stable() {
    let f = fixture();
    let id = project(&f, 16);
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    assert!(matches!(
        f.svc.get_report(&id, &ReportOptions::default()),
        Err(ServiceError::NoSubmissions)
    ));
    claim_and_submit(&f, &id, "a");
    claim_and_submit(&f, &id, "b");
    let first = f.svc.get_report(&id, &ReportOptions::default()).unwrap();
    let second = f.svc.get_report(&id, &ReportOptions::default()).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.submissions, 2);
    claim_and_submit(&f, &id, "c");
    assert_eq!(f.svc.get_report(&id, &ReportOptions::default()).unwrap().submissions, 3);
}

#[test]
fn export_of_empty_project_is_valid() {
    let f = fixture();
    let id = f.svc.create_project(intent_config()).unwrap().project_id;
    let json = f.svc.export(&id, ExportFormat::Json).unwrap();
    let doc = ExportDocument::from_json(&json).unwrap();
    assert!(doc.project.units.is_empty() && doc.project.submissions.is_empty());
    let csv = f.svc.export(&id, ExportFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(matches!(f.svc.export("p9999", ExportFormat::Json), Err(ServiceError::UnknownProject(_))));
}

#[test]
fn csv_has_one_row_per_answer_and_report_matches_export() {
    let f = fixture();
    let id = project(&f, 40);
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    for w in ["c", "a", "b", "a", "c"] {
        claim_and_submit(&f, &id, w);
    }
    let doc = f.svc.export_document(&id).unwrap();
    let total: usize = doc.project.submissions.iter().map(|s| s.answers.len()).sum();
    let csv = f.svc.export(&id, ExportFormat::Csv).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    assert_eq!(reader.records().count(), total);

    let keys: Vec<_> = doc
        .project
        .submissions
        .iter()
        .map(|s| (s.unit_id.clone(), s.worker_id.clone()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);

    let reparsed = ExportDocument::from_json(&doc.to_json()).unwrap();
    assert_eq!(
        build_report(&reparsed.project, &ReportOptions::default()).unwrap(),
        f.svc.get_report(&id, &ReportOptions::default()).unwrap()
    );
}

#[test]
fn state_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(0));
    let id;
    let before;
    {
        let svc = Service::open(dir.path(), clock.clone(), Duration::from_secs(3600)).unwrap();
        id = svc.create_project(intent_config()).unwrap().project_id;
        svc.upload_items(&id, &items_json(16), PayloadFormat::Json, false).unwrap();
        svc.upload_items(&id, &golden_json(2), PayloadFormat::Json, true).unwrap();
        svc.launch(&id, LaunchMode::Full, None).unwrap();
        let w = WorkerId::from("w");
        let view = svc.claim_next_unit(&id, &w).unwrap();
        clock.advance_ms(MINUTE);
        let mut req = answers(&view, "book_flight");
        req.worker_id = w.clone();
        svc.submit(&id, req).unwrap();
        // an open claim also survives
        svc.claim_next_unit(&id, &w).unwrap();
        before = svc.export(&id, ExportFormat::Json).unwrap();
    }
    let svc = Service::open(dir.path(), clock.clone(), Duration::from_secs(3600)).unwrap();
    assert_eq!(svc.export(&id, ExportFormat::Json).unwrap(), before);
    let view = svc.claim_next_unit(&id, &WorkerId::from("w")).unwrap();
    assert_eq!(view.unit_id.as_str(), "unit-0002");
    let next = svc.create_project(intent_config()).unwrap().project_id;
    assert_ne!(next, id);
}

#[test]
fn concurrent_claims_never_exceed_capacity() {
    let f = fixture();
    let id = project(&f, 16); // two units, capacity 3 each
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    let svc = &f.svc;
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = (0..12)
            .map(|i| {
                let id = id.clone();
                s.spawn(move || svc.claim_next_unit(&id, &WorkerId::new(format!("w{i}"))).ok())
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let granted: Vec<_> = results.into_iter().flatten().collect();
    assert_eq!(granted.len(), 6);
    for unit in ["unit-0001", "unit-0002"] {
        assert_eq!(granted.iter().filter(|v| v.unit_id.as_str() == unit).count(), 3);
    }
}

#[test]
fn echo_relay_records_both_turns() {
    let f = fixture();
    let mut config = intent_config();
    config.template = Template::Interactive;
    config.categories.clear();
    config.qc.duplicates_per_unit = 0;
    config.qc.golden_per_unit = 0;
    config.agent_endpoint = Some(ECHO_AGENT_ENDPOINT.into());
    let id = f.svc.create_project(config).unwrap().project_id;
    f.svc
        .upload_items(&id, r#"[{"text": "Book a table for two."}]"#, PayloadFormat::Json, false)
        .unwrap();
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();

    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let w = WorkerId::from("w");
    let reply = rt.block_on(f.svc.dialog_relay(&id, &w, "s1", "hello")).unwrap();
    assert_eq!(reply, RelayReply { reply: "hello".into(), transcript_len: 2 });
    let turns = f.svc.transcript(&id, &w, "s1").unwrap();
    assert_eq!(turns[0].speaker, Speaker::Worker);
    assert_eq!(turns[1].speaker, Speaker::Agent);
    assert_eq!(f.svc.export_document(&id).unwrap().transcripts.len(), 1);
}

#[test]
fn relay_errors() {
    let f = fixture();
    let intent = project(&f, 8);
    f.svc.launch(&intent, LaunchMode::Full, None).unwrap();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let w = WorkerId::from("w");
    assert!(matches!(
        rt.block_on(f.svc.dialog_relay(&intent, &w, "s", "hi")),
        Err(ServiceError::WrongTemplate)
    ));

    // Nothing listens on a port we just released.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut config = intent_config();
    config.template = Template::Interactive;
    config.categories.clear();
    config.qc.duplicates_per_unit = 0;
    config.qc.golden_per_unit = 0;
    config.agent_endpoint = Some(format!("http://127.0.0.1:{port}/agent"));
    let id = f.svc.create_project(config).unwrap().project_id;
    f.svc.upload_items(&id, r#"[{"text": "Chat."}]"#, PayloadFormat::Json, false).unwrap();
    f.svc.launch(&id, LaunchMode::Full, None).unwrap();
    let err = rt.block_on(f.svc.dialog_relay(&id, &w, "s", "hi")).unwrap_err();
    assert_eq!(err.code(), "agent-unreachable");
    assert!(f.svc.transcript(&id, &w, "s").unwrap().is_empty());
}
