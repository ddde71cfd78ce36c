mod common;

use crowdqc::analytics::QualityReport;
use crowdqc::config::{serialize_config, Template};
use crowdqc::sim::{run_simulation, ApiClient, SimConfig};
use serde_json::{json, Value};

async fn post(base: &str, path: &str, body: impl Into<reqwest::Body>, content_type: &str) -> (u16, String) {
    let r = reqwest::Client::new()
        .post(format!("{base}/api/v1{path}"))
        .header("content-type", content_type)
        .body(body)
        .send()
        .await
        .unwrap();
    (r.status().as_u16(), r.text().await.unwrap())
}

async fn get(base: &str, path: &str) -> (u16, String) {
    let r = reqwest::get(format!("{base}/api/v1{path}")).await.unwrap();
    (r.status().as_u16(), r.text().await.unwrap())
}

fn code(body: &str) -> String {
    let v: Value = serde_json::from_str(body).unwrap();
    v["error"]["code"].as_str().unwrap_or_default().to_owned()
}

fn config_doc() -> String {
    serialize_config(&SimConfig::default().task_config())
}

async fn created_project(base: &str) -> String {
    let (status, body) = post(base, "/projects", config_doc(), "application/json").await;
    assert_eq!(status, 201, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    v["project_id"].as_str().unwrap().to_owned()
}

#[tokio::test(flavor = "multi_thread")]
async fn health_and_unknown_project() {
    let server = common::TestServer::start().await;
    assert_eq!(get(&server.base, "/health").await, (200, r#"{"status":"ok"}"#.into()));
    let (status, body) = get(&server.base, "/projects/p0404").await;
    assert_eq!((status, code(&body)), (404, "unknown-project".into()));
}

#[tokio::test(flavor = "multi_thread")]
async fn payment_endpoint_matches_planner() {
    let server = common::TestServer::start().await;
    for (minutes, cents) in [("4", 100), ("60", 1500), ("1", 25), ("2.5", 63)] {
        let (status, body) = get(&server.base, &format!("/payment?minutes={minutes}")).await;
        assert_eq!(status, 200);
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["suggested_cents"], cents, "{minutes} minutes");
    }
    let (status, body) = get(&server.base, "/payment?minutes=-1").await;
    assert_eq!((status, code(&body)), (422, "invalid-config".into()));
}

#[tokio::test(flavor = "multi_thread")]
async fn config_errors_carry_codes() {
    let server = common::TestServer::start().await;
    let (status, body) = post(&server.base, "/projects", "{not json", "application/json").await;
    assert_eq!((status, code(&body)), (400, "malformed-document".into()));

    let typo = config_doc().replacen("\"title\"", "\"titel\": \"x\", \"title\"", 1);
    let (status, body) = post(&server.base, "/projects", typo, "application/json").await;
    assert_eq!((status, code(&body)), (400, "unknown-field".into()));

    let mut config = SimConfig::default().task_config();
    config.template = Template::Interactive;
    let (status, body) = post(&server.base, "/projects", serialize_config(&config), "application/json").await;
    assert_eq!((status, code(&body)), (422, "invalid-config".into()));
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["error"]["violations"][0]["code"], "TaskConfig.agent_endpoint");
}

#[tokio::test(flavor = "multi_thread")]
async fn lint_and_markdown_endpoints() {
    let server = common::TestServer::start().await;
    let (status, body) = post(&server.base, "/lint", config_doc(), "application/json").await;
    assert_eq!(status, 200);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["violations"], json!([]));
    assert!(v["lint"]["findings"].as_array().unwrap().iter().any(|f| f["code"] == "pilot-first"));

    let (status, body) = post(&server.base, "/markdown", "**hi** <b>x</b> [a](javascript:alert(1))", "text/markdown").await;
    assert_eq!(status, 200);
    assert!(!body.contains("javascript:"), "{body}");
    assert!(!body.contains("<b>"), "{body}");
}

#[tokio::test(flavor = "multi_thread")]
async fn lifecycle_over_http() {
    let server = common::TestServer::start().await;
    let base = &server.base;
    let id = created_project(base).await;

    let csv = "id,text\na,Book me a flight to Oslo\nb,\nc,Cancel my booking please\nd,Where is my flight\n";
    let (status, body) = post(base, &format!("/projects/{id}/items"), csv, "text/csv").await;
    assert_eq!(status, 200, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["accepted"], 3);
    assert_eq!(v["rejected"][0]["row"], 1);

    let golden = r#"[{"text": "I need a plane ticket", "expected_answer": "book_flight"}]"#;
    let (status, _) = post(base, &format!("/projects/{id}/items?kind=golden"), golden, "application/json").await;
    assert_eq!(status, 200);

    let (status, body) = post(base, &format!("/projects/{id}/claim?worker_id=w1"), "", "text/plain").await;
    assert_eq!((status, code(&body)), (409, "wrong-state".into()));

    let (status, body) = post(base, &format!("/projects/{id}/launch"), r#"{"mode":"pilot"}"#, "application/json").await;
    assert_eq!(status, 200, "{body}");
    let (_, status_body) = get(base, &format!("/projects/{id}")).await;
    let v: Value = serde_json::from_str(&status_body).unwrap();
    assert_eq!(v["state"], "piloting");
    assert_eq!(v["claimable_units"], 1);

    let (status, body) = post(base, &format!("/projects/{id}/items"), csv, "text/csv").await;
    assert_eq!((status, code(&body)), (409, "wrong-state".into()));

    let (status, body) = get(base, &format!("/projects/{id}/report")).await;
    assert_eq!((status, code(&body)), (409, "no-submissions".into()));

    let (status, view) = post(base, &format!("/projects/{id}/claim?worker_id=w1"), "", "text/plain").await;
    assert_eq!(status, 200);
    for leak in ["kind", "expected_answer", "of_position", "item_ref"] {
        assert!(!view.contains(leak), "view leaks {leak}: {view}");
    }
    let view: Value = serde_json::from_str(&view).unwrap();
    let answers: Vec<Value> = view["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| json!({"position": i["position"], "payload": {"kind": "choice", "label": "book_flight"}}))
        .collect();
    server.clock.advance_ms(42_000);
    let submit = json!({
        "worker_id": "w1",
        "unit_id": view["unit_id"],
        "answers": answers,
        "feedback": "Instructions were clear",
        "consent_acknowledged": false,
    });
    let (status, body) = post(base, &format!("/projects/{id}/submit"), submit.to_string(), "application/json").await;
    assert_eq!((status, code(&body)), (422, "consent-missing".into()));
    let mut submit = submit;
    submit["consent_acknowledged"] = json!(true);
    let (status, body) = post(base, &format!("/projects/{id}/submit"), submit.to_string(), "application/json").await;
    assert_eq!(status, 200, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["total_seconds"], 42.0);

    let (status, body) = post(base, &format!("/projects/{id}/submit"), submit.to_string(), "application/json").await;
    assert_eq!((status, code(&body)), (409, "no-claim".into()));

    let (status, md) = get(base, &format!("/projects/{id}/report?format=markdown")).await;
    assert_eq!(status, 200);
    assert!(md.starts_with("# Quality report"));
    assert!(md.contains("Instructions were clear"));

    let (status, csv_export) = get(base, &format!("/projects/{id}/export?format=csv")).await;
    assert_eq!(status, 200);
    assert_eq!(csv_export.lines().count(), 1 + answers.len());

    let (status, _) = post(base, &format!("/projects/{id}/launch"), r#"{"mode":"full"}"#, "application/json").await;
    assert_eq!(status, 200);
    let (status, _) = post(base, &format!("/projects/{id}/close"), "", "text/plain").await;
    assert_eq!(status, 200);
    let (status, body) = post(base, &format!("/projects/{id}/claim?worker_id=w2"), "", "text/plain").await;
    assert_eq!((status, code(&body)), (409, "wrong-state".into()));
    // data stays exportable after close
    let (status, _) = get(base, &format!("/projects/{id}/export")).await;
    assert_eq!(status, 200);
}

#[tokio::test(flavor = "multi_thread")]
async fn dialog_relay_over_http_with_echo_and_external_agent() {
    use axum::{routing::post as axum_post, Json, Router};

    // A tiny external agent that shouts back.
    let agent = Router::new().route(
        "/agent",
        axum_post(|Json(v): Json<Value>| async move {
            Json(json!({"reply": v["utterance"].as_str().unwrap().to_uppercase(), "echo_session": v["session_id"]}))
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let agent_url = format!("http://{}/agent", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, agent).await.unwrap() });

    let server = common::TestServer::start().await;
    let base = &server.base;
    for (endpoint, expected) in [("builtin:echo", "hello"), (agent_url.as_str(), "HELLO")] {
        let mut config = SimConfig::default().task_config();
        config.template = Template::Interactive;
        config.categories.clear();
        config.qc.duplicates_per_unit = 0;
        config.qc.golden_per_unit = 0;
        config.agent_endpoint = Some(endpoint.into());
        let (status, body) = post(base, "/projects", serialize_config(&config), "application/json").await;
        assert_eq!(status, 201, "{body}");
        let id = serde_json::from_str::<Value>(&body).unwrap()["project_id"].as_str().unwrap().to_owned();
        post(base, &format!("/projects/{id}/items"), r#"[{"text":"Plan a trip"}]"#, "application/json").await;
        post(base, &format!("/projects/{id}/launch"), r#"{"mode":"full"}"#, "application/json").await;

        let msg = json!({"worker_id": "w1", "session_id": "s1", "utterance": "hello"}).to_string();
        let (status, body) = post(base, &format!("/projects/{id}/dialog"), msg, "application/json").await;
        assert_eq!(status, 200, "{body}");
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["reply"], expected);
        assert_eq!(v["transcript_len"], 2);
    }

    // Relay on an intent project
    let id = created_project(base).await;
    let msg = json!({"worker_id": "w1", "session_id": "s1", "utterance": "hello"}).to_string();
    let (status, body) = post(base, &format!("/projects/{id}/dialog"), msg, "application/json").await;
    assert_eq!((status, code(&body)), (409, "wrong-template".into()));
}

#[tokio::test(flavor = "multi_thread")]
async fn simulation_report_is_stable_and_matches_export() {
    let server = common::TestServer::start().await;
    let client = ApiClient::new(&server.base);
    let outcome = run_simulation(&client, &SimConfig::default(), &server.advance()).await.unwrap();
    let a = client.report(&outcome.project_id).await.unwrap();
    let b = client.report(&outcome.project_id).await.unwrap();
    assert_eq!(a, b);
    assert_eq!(a.submissions, outcome.total_submissions);

    let export = client.export(&outcome.project_id, "json").await.unwrap();
    let doc = crowdqc::service::ExportDocument::from_json(&export).unwrap();
    let offline: QualityReport = crowdqc::analytics::build_report(&doc.project, &Default::default()).unwrap();
    assert_eq!(offline, a);

    let csv = client.export(&outcome.project_id, "csv").await.unwrap();
    let answers: usize = doc.project.submissions.iter().map(|s| s.answers.len()).sum();
    assert_eq!(csv::Reader::from_reader(csv.as_bytes()).records().count(), answers);
}
