//! Embed the HTTP service in your own binary.
//!
//!     cargo run --example serve -- 127.0.0.1:8080 ./data

use std::sync::Arc;

use crowdqc::service::{http, Service};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let addr = args.next().unwrap_or_else(|| "127.0.0.1:8080".into());
    let data_dir = args.next().unwrap_or_else(|| "crowdqc-data".into());

    let service = Arc::new(Service::with_defaults(&data_dir).expect("data directory usable"));
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    println!("listening on http://{}{}", listener.local_addr()?, http::API_PREFIX);
    http::serve(listener, service, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
