//! Scripted worker personas that exercise a running server over HTTP.
//!
//! - **Diligent** answers every item with its true label at a plausible pace.
//! - **Random** picks uniformly among the categories at the same pace.
//! - **Bot** always picks the first category and takes 1–2 seconds per unit.
//! - **Slow** answers correctly but takes ten times the typical time.
//!
//! The server measures durations itself, so the harness moves time through a
//! caller-supplied `advance(ms)` callback between claim and submit: with a
//! [`ManualClock`](crate::service::ManualClock) the whole run takes seconds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::QualityReport;
use crate::config::{
    serialize_config, Category, ConsentConfig, Example, PaymentInputs, QualityControlConfig,
    StyleConfig, TaskConfig, Template,
};
use crate::model::{Answer, AnswerPayload, WorkerId};
use crate::planner::DeploymentPlan;
use crate::service::{Created, SubmitReceipt, SubmitRequest, UnitView, UploadSummary};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {body}")]
    Api { status: StatusCode, body: String },
}

fn encode(value: &str) -> String {
    url::form_urlencoded::byte_serialize(value.as_bytes()).collect()
}

/// Minimal typed client for the `/api/v1/` API.
#[derive(Clone)]
pub struct ApiClient {
    base: String,
    http: reqwest::Client,
}

impl ApiClient {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into();
        Self {
            base: format!("{}/api/v1", base.trim_end_matches('/')),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn check(response: reqwest::Response) -> Result<reqwest::Response, SimError> {
        if response.status().is_success() {
            Ok(response)
        } else {
            Err(SimError::Api {
                status: response.status(),
                body: response.text().await.unwrap_or_default(),
            })
        }
    }

    pub async fn health(&self) -> Result<(), SimError> {
        Self::check(self.http.get(self.url("/health")).send().await?).await?;
        Ok(())
    }

    pub async fn create_project(&self, config: &TaskConfig) -> Result<Created, SimError> {
        let r = self.http.post(self.url("/projects")).body(serialize_config(config)).send().await?;
        Ok(Self::check(r).await?.json().await?)
    }

    pub async fn upload_items(&self, project: &str, json: &str, golden: bool) -> Result<UploadSummary, SimError> {
        let kind = if golden { "?kind=golden" } else { "" };
        let r = self
            .http
            .post(self.url(&format!("/projects/{project}/items{kind}")))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(json.to_owned())
            .send()
            .await?;
        Ok(Self::check(r).await?.json().await?)
    }

    pub async fn launch_full(&self, project: &str) -> Result<DeploymentPlan, SimError> {
        let r = self
            .http
            .post(self.url(&format!("/projects/{project}/launch")))
            .json(&serde_json::json!({ "mode": "full" }))
            .send()
            .await?;
        Ok(Self::check(r).await?.json().await?)
    }

    /// `Ok(None)` when no unit is available to this worker.
    pub async fn claim(&self, project: &str, worker: &WorkerId) -> Result<Option<UnitView>, SimError> {
        let r = self
            .http
            .post(self.url(&format!("/projects/{project}/claim?worker_id={}", encode(worker.as_str()))))
            .send()
            .await?;
        if r.status() == StatusCode::NOT_FOUND {
            let body: serde_json::Value = r.json().await?;
            if body["error"]["code"] == "none-available" {
                return Ok(None);
            }
            return Err(SimError::Api {
                status: StatusCode::NOT_FOUND,
                body: body.to_string(),
            });
        }
        Ok(Some(Self::check(r).await?.json().await?))
    }

    pub async fn submit(&self, project: &str, request: &SubmitRequest) -> Result<SubmitReceipt, SimError> {
        let r = self
            .http
            .post(self.url(&format!("/projects/{project}/submit")))
            .json(request)
            .send()
            .await?;
        Ok(Self::check(r).await?.json().await?)
    }

    pub async fn report(&self, project: &str) -> Result<QualityReport, SimError> {
        let r = self.http.get(self.url(&format!("/projects/{project}/report"))).send().await?;
        Ok(Self::check(r).await?.json().await?)
    }

    /// Export as raw text (`json` or `csv`).
    pub async fn export(&self, project: &str, format: &str) -> Result<String, SimError> {
        let r = self
            .http
            .get(self.url(&format!("/projects/{project}/export?format={}", encode(format))))
            .send()
            .await?;
        Ok(Self::check(r).await?.text().await?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persona {
    Diligent,
    Random,
    Bot,
    Slow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimWorker {
    pub worker_id: WorkerId,
    pub persona: Persona,
    /// Stop after this many units (`None`: until nothing is left).
    pub max_units: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_items: usize,
    pub n_golden: usize,
    pub diligent_workers: usize,
    pub mean_seconds: f64,
    /// Relative spread of normal durations (uniform ±).
    pub jitter: f64,
    pub bot_units: usize,
    pub slow_units: usize,
}

impl Default for SimConfig {
    /// A 60-item, four-intent project seen by 17 diligent workers, one random
    /// clicker, a bot on 3 units and a slow worker on 1 unit.
    ///
    /// The crowd is sized so a single 10x duration among the normal ones does
    /// not inflate the standard deviation enough to hide the bot.
    fn default() -> Self {
        Self {
            seed: 7,
            n_items: 60,
            n_golden: 8,
            diligent_workers: 17,
            mean_seconds: 60.0,
            jitter: 0.2,
            bot_units: 3,
            slow_units: 1,
        }
    }
}

pub const SIM_CATEGORIES: [&str; 4] = ["book_flight", "cancel_booking", "check_status", "change_seat"];

impl SimConfig {
    pub fn roster(&self) -> Vec<SimWorker> {
        let mut roster: Vec<SimWorker> = (1..=self.diligent_workers)
            .map(|i| SimWorker {
                worker_id: WorkerId::new(format!("diligent-{i:02}")),
                persona: Persona::Diligent,
                max_units: None,
            })
            .collect();
        roster.push(SimWorker {
            worker_id: WorkerId::from("random-01"),
            persona: Persona::Random,
            max_units: None,
        });
        roster.push(SimWorker {
            worker_id: WorkerId::from("bot-01"),
            persona: Persona::Bot,
            max_units: Some(self.bot_units),
        });
        roster.push(SimWorker {
            worker_id: WorkerId::from("slow-01"),
            persona: Persona::Slow,
            max_units: Some(self.slow_units),
        });
        roster
    }

    /// Intent project: four slots per unit (two fresh, one duplicate, one
    /// golden), every unit open to the whole roster.
    pub fn task_config(&self) -> TaskConfig {
        let category = |name: &str| Category {
            name: name.into(),
            instructions: format!("Choose `{name}` when that is what the traveller wants."),
            examples: vec![Example {
                text: format!("I want to {}", name.replace('_', " ")),
                explanation: "the request is stated directly".into(),
            }],
            counterexamples: vec![Example {
                text: "What is the weather in Paris?".into(),
                explanation: "not a travel booking request".into(),
            }],
            answer_options: vec![],
        };
        TaskConfig {
            template: Template::IntentClassification,
            title: "Travel assistant intents".into(),
            general_instructions: "Read each message sent to a travel assistant and choose the \
                single intent that best matches what the traveller wants. Every intent lists an \
                example and a counterexample with an explanation. If two intents seem possible, \
                pick the one the traveller states most directly."
                .into(),
            categories: SIM_CATEGORIES.iter().map(|c| category(c)).collect(),
            payment: PaymentInputs::new(2.0),
            qc: QualityControlConfig {
                items_per_unit: 4,
                units_per_task: 1,
                duplicates_per_unit: 1,
                golden_per_unit: 1,
                assignments_per_unit: (self.diligent_workers + 3) as u32,
                shuffle_seed: Some(self.seed),
                ..QualityControlConfig::default()
            },
            consent: ConsentConfig {
                consent_text: "I agree that my answers are used for research.".into(),
                required: true,
            },
            style: StyleConfig::default(),
            feedback_enabled: true,
            agent_endpoint: None,
        }
    }

    /// Items, golden items and the true label of every text.
    pub fn dataset(&self) -> Dataset {
        let mut truth = BTreeMap::new();
        let mut row = |prefix: &str, i: usize, golden: bool| {
            let label = SIM_CATEGORIES[i % SIM_CATEGORIES.len()];
            let text = format!("{prefix} message {i}: please help me {}", label.replace('_', " "));
            truth.insert(text.clone(), label.to_owned());
            let mut v = serde_json::json!({ "id": format!("{prefix}-{i:03}"), "text": text });
            if golden {
                v["expected_answer"] = label.into();
            }
            v
        };
        let items: Vec<_> = (0..self.n_items).map(|i| row("item", i, false)).collect();
        let golden: Vec<_> = (0..self.n_golden).map(|i| row("golden", i, true)).collect();
        Dataset {
            items_json: serde_json::to_string(&items).expect("json"),
            golden_json: serde_json::to_string(&golden).expect("json"),
            truth,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub items_json: String,
    pub golden_json: String,
    pub truth: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub project_id: String,
    pub roster: Vec<SimWorker>,
    /// Accepted submissions per worker.
    pub submitted: BTreeMap<WorkerId, usize>,
    pub total_submissions: usize,
}

/// Creates, fills and launches the simulation project.
pub async fn setup_project(client: &ApiClient, sim: &SimConfig, data: &Dataset) -> Result<String, SimError> {
    let created = client.create_project(&sim.task_config()).await?;
    client.upload_items(&created.project_id, &data.items_json, false).await?;
    client.upload_items(&created.project_id, &data.golden_json, true).await?;
    client.launch_full(&created.project_id).await?;
    Ok(created.project_id)
}

fn unit_duration_ms(persona: Persona, sim: &SimConfig, rng: &mut ChaCha8Rng) -> u64 {
    let mean_ms = sim.mean_seconds * 1000.0;
    match persona {
        Persona::Diligent | Persona::Random => {
            let f = rng.random_range(1.0 - sim.jitter..=1.0 + sim.jitter);
            (mean_ms * f).round() as u64
        }
        Persona::Bot => rng.random_range(1000..=2000),
        Persona::Slow => (mean_ms * 10.0).round() as u64,
    }
}

fn label_for(persona: Persona, text: &str, data: &Dataset, rng: &mut ChaCha8Rng) -> String {
    match persona {
        Persona::Diligent | Persona::Slow => data.truth.get(text).cloned().unwrap_or_else(|| SIM_CATEGORIES[0].into()),
        Persona::Random => SIM_CATEGORIES[rng.random_range(0..SIM_CATEGORIES.len())].into(),
        Persona::Bot => SIM_CATEGORIES[0].into(),
    }
}

/// Runs the roster one worker after another, each claiming and submitting
/// units until it hits its quota or nothing is left. Stops early once
/// `stop_after` submissions have been accepted.
pub async fn run_workers(
    client: &ApiClient,
    project_id: &str,
    sim: &SimConfig,
    data: &Dataset,
    advance: &(dyn Fn(u64) + Sync),
    stop_after: Option<usize>,
) -> Result<SimOutcome, SimError> {
    let roster = sim.roster();
    let mut outcome = SimOutcome {
        project_id: project_id.to_owned(),
        roster: roster.clone(),
        ..SimOutcome::default()
    };
    for (index, worker) in roster.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sim.seed ^ ((index as u64 + 1) << 32));
        let mut done = 0;
        while worker.max_units.is_none_or(|max| done < max) {
            if stop_after.is_some_and(|k| outcome.total_submissions >= k) {
                return Ok(outcome);
            }
            let Some(view) = client.claim(project_id, &worker.worker_id).await? else {
                break;
            };
            let answers = view
                .items
                .iter()
                .map(|item| Answer {
                    position: item.position,
                    payload: AnswerPayload::choice(label_for(worker.persona, &item.text, data, &mut rng)),
                })
                .collect();
            advance(unit_duration_ms(worker.persona, sim, &mut rng));
            client
                .submit(
                    project_id,
                    &SubmitRequest {
                        worker_id: worker.worker_id.clone(),
                        unit_id: view.unit_id.clone(),
                        answers,
                        per_slot_ms: vec![],
                        feedback: None,
                        consent_acknowledged: true,
                    },
                )
                .await?;
            done += 1;
            outcome.total_submissions += 1;
            *outcome.submitted.entry(worker.worker_id.clone()).or_default() += 1;
        }
    }
    Ok(outcome)
}

/// Sets up the project and runs the full roster.
pub async fn run_simulation(
    client: &ApiClient,
    sim: &SimConfig,
    advance: &(dyn Fn(u64) + Sync),
) -> Result<SimOutcome, SimError> {
    let data = sim.dataset();
    let project_id = setup_project(client, sim, &data).await?;
    run_workers(client, &project_id, sim, &data, advance, None).await
}

/// Accepted submissions of one worker.
pub fn units_of(outcome: &SimOutcome, worker: &str) -> usize {
    outcome.submitted.get(&WorkerId::from(worker)).copied().unwrap_or(0)
}
