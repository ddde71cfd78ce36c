//! A simulated crowd (diligent, random, bot and slow workers) against an
//! in-process server with a manual clock, followed by the quality report.

use std::sync::Arc;
use std::time::Duration;

use crowdqc::analytics::render_report_markdown;
use crowdqc::service::{http, ManualClock, Service};
use crowdqc::sim::{run_simulation, ApiClient, SimConfig};

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(1_700_000_000_000));
    let service = Arc::new(Service::open(dir.path(), clock.clone(), Duration::from_secs(3600)).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(http::serve(listener, service, std::future::pending()));

    let client = ApiClient::new(&base);
    let outcome = run_simulation(&client, &SimConfig::default(), &|ms| clock.advance_ms(ms))
        .await
        .expect("simulation runs");
    println!("{} submissions from {} workers\n", outcome.total_submissions, outcome.submitted.len());
    let report = client.report(&outcome.project_id).await.unwrap();
    print!("{}", render_report_markdown(&report));
}
