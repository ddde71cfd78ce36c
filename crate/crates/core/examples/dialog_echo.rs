//! Interactive template: worker turns are relayed to an agent and the
//! transcript is kept with the project. `builtin:echo` needs no network.

use crowdqc::config::{PaymentInputs, QualityControlConfig, TaskConfig, Template};
use crowdqc::ingest::PayloadFormat;
use crowdqc::model::WorkerId;
use crowdqc::service::{LaunchMode, Service};

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let svc = Service::with_defaults(dir.path()).unwrap();
    let config = TaskConfig {
        template: Template::Interactive,
        title: "Talk to the booking bot".into(),
        general_instructions: "Try to book a flight to Lisbon, then rate the conversation.".into(),
        categories: vec![],
        payment: PaymentInputs::new(5.0),
        qc: QualityControlConfig { items_per_unit: 1, units_per_task: 1, ..QualityControlConfig::default() },
        consent: Default::default(),
        style: Default::default(),
        feedback_enabled: true,
        agent_endpoint: Some("builtin:echo".into()),
    };
    let id = svc.create_project(config).unwrap().project_id;
    svc.upload_items(&id, r#"[{"text": "Book a flight to Lisbon"}]"#, PayloadFormat::Json, false).unwrap();
    svc.launch(&id, LaunchMode::Full, None).unwrap();

    let worker = WorkerId::from("w1");
    for line in ["hi there", "one ticket to Lisbon please"] {
        let reply = svc.dialog_relay(&id, &worker, "session-1", line).await.unwrap();
        println!("> {line}\n< {}", reply.reply);
    }
    for turn in svc.transcript(&id, &worker, "session-1").unwrap() {
        println!("{:?}: {}", turn.speaker, turn.text);
    }
}
