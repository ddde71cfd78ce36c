use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ECHO_AGENT_ENDPOINT;

pub const RELAY_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
#[error("dialog agent unreachable: {0}")]
pub struct RelayError(pub String);

#[derive(Serialize)]
struct AgentRequest<'a> {
    session_id: &'a str,
    utterance: &'a str,
}

#[derive(Deserialize)]
struct AgentResponse {
    reply: String,
}

/// Forwards worker utterances to dialog agents.
///
/// The reserved endpoint `builtin:echo` answers with the utterance itself.
#[derive(Clone)]
pub struct AgentRelay {
    client: reqwest::Client,
}

impl Default for AgentRelay {
    fn default() -> Self {
        Self::new()
    }
}

impl AgentRelay {
    pub fn new() -> Self {
        let client = reqwest::Client::builder()
            .timeout(RELAY_TIMEOUT)
            .build()
            .expect("http client builds");
        Self { client }
    }

    pub async fn send(&self, endpoint: &str, session_id: &str, utterance: &str) -> Result<String, RelayError> {
        if endpoint == ECHO_AGENT_ENDPOINT {
            return Ok(utterance.to_owned());
        }
        let response = self
            .client
            .post(endpoint)
            .json(&AgentRequest { session_id, utterance })
            .send()
            .await
            .map_err(|e| RelayError(e.to_string()))?;
        if !response.status().is_success() {
            return Err(RelayError(format!("agent answered {}", response.status())));
        }
        let body: AgentResponse = response.json().await.map_err(|e| RelayError(e.to_string()))?;
        Ok(body.reply)
    }
}
