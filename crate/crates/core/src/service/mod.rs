//! The task server: project lifecycle, item upload, unit claiming with leases,
//! submission ingestion, dialog relay, reports and exports.
//!
//! [`Service`] is the synchronous core and can be embedded directly; [`http`]
//! exposes it as a JSON API under `/api/v1/`. Each project sits behind its
//! own mutex, so claims on one project are linearizable while projects stay
//! independent. Every accepted claim and submission is synced to disk before
//! the call returns.

mod clock;
mod export;
pub mod http;
mod relay;
mod settings;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{build_report, AnalyticsError, ProjectData, QualityReport, ReportOptions};
use crate::answers::check_payload;
use crate::config::{
    lint_clarity, validate_config, Category, ClarityReport, ConsentConfig, StyleConfig,
    TaskConfig, Template, Violation,
};
use crate::ingest::{parse_items, IngestError, PayloadFormat, RejectedRow, Upload};
use crate::model::{
    Answer, AnnotationItem, GoldenItem, ItemId, Speaker, Submission, TaskUnit, Turn, UnitId,
    WorkerId,
};
use crate::planner::{build_units, plan_deployment, DeploymentPlan, PlanError, Shortfall};

pub use clock::{Clock, ManualClock, SystemClock};
pub use export::{ExportDocument, ExportFormat, TranscriptExport, CSV_HEADER};
pub use relay::{AgentRelay, RelayError};
pub use settings::{ServerSettings, SettingsError};
use store::{Event, ProjectFiles, Snapshot};

/// Default claim lease.
pub const DEFAULT_LEASE_MINUTES: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectState {
    Draft,
    Piloting,
    Live,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaunchMode {
    Pilot,
    Full,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown project {0}")]
    UnknownProject(String),
    #[error("invalid config")]
    InvalidConfig(Vec<Violation>),
    #[error("operation not allowed in state {0:?}")]
    WrongState(ProjectState),
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("no unit available for this worker")]
    NoneAvailable,
    #[error("worker holds no active claim on this unit")]
    NoClaim,
    #[error("answers do not fit the unit: {0}")]
    ShapeMismatch(String),
    #[error("consent must be acknowledged")]
    ConsentMissing,
    #[error("operation requires the interactive template")]
    WrongTemplate,
    #[error(transparent)]
    AgentUnreachable(#[from] RelayError),
    #[error("project has no submissions")]
    NoSubmissions,
    #[error("analytics failed: {0}")]
    Analytics(AnalyticsError),
    #[error("storage error: {0}")]
    Storage(#[from] io::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownProject(_) => "unknown-project",
            Self::InvalidConfig(_) => "invalid-config",
            Self::WrongState(_) => "wrong-state",
            Self::MalformedPayload(_) => "malformed-payload",
            Self::Plan(e) => e.code(),
            Self::NoneAvailable => "none-available",
            Self::NoClaim => "no-claim",
            Self::ShapeMismatch(_) => "shape-mismatch",
            Self::ConsentMissing => "consent-missing",
            Self::WrongTemplate => "wrong-template",
            Self::AgentUnreachable(_) => "agent-unreachable",
            Self::NoSubmissions => "no-submissions",
            Self::Analytics(_) => "analytics-error",
            Self::Storage(_) => "storage-error",
        }
    }
}

impl From<AnalyticsError> for ServiceError {
    fn from(err: AnalyticsError) -> Self {
        match err {
            AnalyticsError::NoSubmissions => Self::NoSubmissions,
            other => Self::Analytics(other),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub project_id: String,
    pub lint: ClarityReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UploadSummary {
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
}

/// What a worker sees for one slot. Carries no item id, slot kind, duplicate
/// reference or expected answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemView {
    pub position: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitView {
    pub project_id: String,
    pub unit_id: UnitId,
    pub template: Template,
    pub title: String,
    pub general_instructions: String,
    pub categories: Vec<Category>,
    pub consent: ConsentConfig,
    pub style: StyleConfig,
    pub feedback_enabled: bool,
    pub issued_at: u64,
    pub lease_expires_at: u64,
    pub items: Vec<ItemView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub worker_id: WorkerId,
    pub unit_id: UnitId,
    pub answers: Vec<Answer>,
    #[serde(default)]
    pub per_slot_ms: Vec<u64>,
    #[serde(default)]
    pub feedback: Option<String>,
    #[serde(default)]
    pub consent_acknowledged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitReceipt {
    pub submission_id: String,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayReply {
    pub reply: String,
    pub transcript_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectStatus {
    pub project_id: String,
    pub state: ProjectState,
    pub title: String,
    pub template: Template,
    pub items: usize,
    pub golden_items: usize,
    pub units: usize,
    pub claimable_units: usize,
    pub submissions: usize,
    pub plan: Option<DeploymentPlan>,
    pub shortfall: Option<Shortfall>,
}

#[derive(Debug, Clone)]
struct Claim {
    worker_id: WorkerId,
    unit_id: UnitId,
    issued_at: u64,
    submitted: bool,
}

struct Project {
    id: String,
    created_at: u64,
    state: ProjectState,
    config: TaskConfig,
    items: Vec<AnnotationItem>,
    golden_pool: Vec<GoldenItem>,
    units: Vec<TaskUnit>,
    plan: Option<DeploymentPlan>,
    shortfall: Option<Shortfall>,
    pilot_units: Option<usize>,
    claims: Vec<Claim>,
    submissions: Vec<Submission>,
    transcripts: BTreeMap<(WorkerId, String), Vec<Turn>>,
    files: ProjectFiles,
}

impl Project {
    fn snapshot(&self) -> Snapshot {
        Snapshot {
            project_id: self.id.clone(),
            created_at: self.created_at,
            state: self.state,
            config: self.config.clone(),
            items: self.items.clone(),
            golden_pool: self.golden_pool.clone(),
            units: self.units.clone(),
            plan: self.plan.clone(),
            shortfall: self.shortfall.clone(),
            pilot_units: self.pilot_units,
        }
    }

    fn persist_snapshot(&self) -> io::Result<()> {
        self.files.write_snapshot(&self.snapshot())
    }

    fn apply(&mut self, event: Event) {
        match event {
            Event::Claim {
                worker_id,
                unit_id,
                issued_at,
            } => self.claims.push(Claim {
                worker_id,
                unit_id,
                issued_at,
                submitted: false,
            }),
            Event::Submission { submission } => {
                if let Some(claim) = self.claims.iter_mut().rev().find(|c| {
                    c.worker_id == submission.worker_id
                        && c.unit_id == submission.unit_id
                        && !c.submitted
                }) {
                    claim.submitted = true;
                }
                self.submissions.push(submission);
            }
            Event::Turn {
                worker_id,
                session_id,
                turn,
                ..
            } => self
                .transcripts
                .entry((worker_id, session_id))
                .or_default()
                .push(turn),
        }
    }

    fn claimable_units(&self) -> usize {
        match self.state {
            ProjectState::Piloting => self.pilot_units.unwrap_or(0).min(self.units.len()),
            ProjectState::Live => self.units.len(),
            ProjectState::Draft | ProjectState::Closed => 0,
        }
    }

    fn item(&self, id: &ItemId) -> Option<&AnnotationItem> {
        self.items
            .iter()
            .chain(self.golden_pool.iter().map(|g| &g.item))
            .find(|i| &i.id == id)
    }

    fn existing_ids(&self) -> BTreeSet<ItemId> {
        self.items
            .iter()
            .chain(self.golden_pool.iter().map(|g| &g.item))
            .map(|i| i.id.clone())
            .collect()
    }

    fn unit_index(&self) -> BTreeMap<&UnitId, usize> {
        self.units
            .iter()
            .enumerate()
            .map(|(i, u)| (&u.unit_id, i))
            .collect()
    }

    /// Submissions ordered by unit, then worker.
    fn sorted_submissions(&self) -> Vec<Submission> {
        let index = self.unit_index();
        let mut subs = self.submissions.clone();
        subs.sort_by(|a, b| {
            let ka = (index.get(&a.unit_id), &a.worker_id, &a.submission_id);
            let kb = (index.get(&b.unit_id), &b.worker_id, &b.submission_id);
            ka.cmp(&kb)
        });
        subs
    }

    fn data(&self) -> ProjectData {
        ProjectData {
            config: self.config.clone(),
            items: self.items.clone(),
            golden_pool: self.golden_pool.clone(),
            units: self.units.clone(),
            submissions: self.sorted_submissions(),
        }
    }
}

/// Embedded task server core.
pub struct Service {
    data_dir: PathBuf,
    clock: Arc<dyn Clock>,
    lease_ms: u64,
    relay: AgentRelay,
    projects: RwLock<BTreeMap<String, Arc<Mutex<Project>>>>,
    next_id: Mutex<u64>,
}

impl Service {
    /// Opens (or creates) a data directory, recovering every project in it.
    pub fn open(data_dir: impl AsRef<Path>, clock: Arc<dyn Clock>, lease: Duration) -> Result<Self, ServiceError> {
        let data_dir = data_dir.as_ref().to_owned();
        let root = store::projects_dir(&data_dir);
        std::fs::create_dir_all(&root)?;

        let mut projects = BTreeMap::new();
        let mut max_seq = 0;
        let mut dirs: Vec<_> = std::fs::read_dir(&root)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.join("project.json").exists())
            .collect();
        dirs.sort();
        for dir in dirs {
            let (files, snap, events) = ProjectFiles::open(&dir)?;
            if let Some(seq) = snap.project_id.strip_prefix('p').and_then(|s| s.parse::<u64>().ok()) {
                max_seq = max_seq.max(seq);
            }
            let mut project = Project {
                id: snap.project_id.clone(),
                created_at: snap.created_at,
                state: snap.state,
                config: snap.config,
                items: snap.items,
                golden_pool: snap.golden_pool,
                units: snap.units,
                plan: snap.plan,
                shortfall: snap.shortfall,
                pilot_units: snap.pilot_units,
                claims: Vec::new(),
                submissions: Vec::new(),
                transcripts: BTreeMap::new(),
                files,
            };
            for event in events {
                project.apply(event);
            }
            projects.insert(snap.project_id, Arc::new(Mutex::new(project)));
        }

        Ok(Self {
            data_dir,
            clock,
            lease_ms: lease.as_millis() as u64,
            relay: AgentRelay::new(),
            projects: RwLock::new(projects),
            next_id: Mutex::new(max_seq + 1),
        })
    }

    pub fn with_defaults(data_dir: impl AsRef<Path>) -> Result<Self, ServiceError> {
        Self::open(
            data_dir,
            Arc::new(SystemClock),
            Duration::from_secs(DEFAULT_LEASE_MINUTES * 60),
        )
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn lease(&self) -> Duration {
        Duration::from_millis(self.lease_ms)
    }

    fn project(&self, id: &str) -> Result<Arc<Mutex<Project>>, ServiceError> {
        self.projects
            .read()
            .expect("project map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownProject(id.to_owned()))
    }

    fn with_project<T>(&self, id: &str, f: impl FnOnce(&mut Project) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        let project = self.project(id)?;
        let mut guard = project.lock().expect("project poisoned");
        f(&mut guard)
    }

    pub fn project_ids(&self) -> Vec<String> {
        self.projects.read().expect("project map poisoned").keys().cloned().collect()
    }

    pub fn create_project(&self, config: TaskConfig) -> Result<Created, ServiceError> {
        let violations = validate_config(&config);
        if !violations.is_empty() {
            return Err(ServiceError::InvalidConfig(violations));
        }
        let lint = lint_clarity(&config);
        let project_id = {
            let mut next = self.next_id.lock().expect("id counter poisoned");
            let id = format!("p{:04}", *next);
            *next += 1;
            id
        };
        let files = ProjectFiles::create(&self.data_dir, &project_id)?;
        let project = Project {
            id: project_id.clone(),
            created_at: self.clock.now_ms(),
            state: ProjectState::Draft,
            config,
            items: Vec::new(),
            golden_pool: Vec::new(),
            units: Vec::new(),
            plan: None,
            shortfall: None,
            pilot_units: None,
            claims: Vec::new(),
            submissions: Vec::new(),
            transcripts: BTreeMap::new(),
            files,
        };
        project.persist_snapshot()?;
        self.projects
            .write()
            .expect("project map poisoned")
            .insert(project_id.clone(), Arc::new(Mutex::new(project)));
        Ok(Created { project_id, lint })
    }

    pub fn status(&self, project_id: &str) -> Result<ProjectStatus, ServiceError> {
        self.with_project(project_id, |p| {
            Ok(ProjectStatus {
                project_id: p.id.clone(),
                state: p.state,
                title: p.config.title.clone(),
                template: p.config.template,
                items: p.items.len(),
                golden_items: p.golden_pool.len(),
                units: p.units.len(),
                claimable_units: p.claimable_units(),
                submissions: p.submissions.len(),
                plan: p.plan.clone(),
                shortfall: p.shortfall.clone(),
            })
        })
    }

    /// Appends items (or golden items) after per-row validation.
    pub fn upload_items(
        &self,
        project_id: &str,
        payload: &str,
        format: PayloadFormat,
        golden: bool,
    ) -> Result<UploadSummary, ServiceError> {
        self.with_project(project_id, |p| {
            if p.state != ProjectState::Draft {
                return Err(ServiceError::WrongState(p.state));
            }
            let existing = p.existing_ids();
            let upload = Upload {
                config: &p.config,
                golden,
                existing: &existing,
            };
            let ingested = parse_items(payload, format, &upload).map_err(|IngestError::Malformed(m)| ServiceError::MalformedPayload(m))?;
            let accepted = ingested.items.len() + ingested.golden.len();
            p.items.extend(ingested.items);
            p.golden_pool.extend(ingested.golden);
            if accepted > 0 {
                p.persist_snapshot()?;
            }
            Ok(UploadSummary {
                accepted,
                rejected: ingested.rejected,
            })
        })
    }

    /// Builds units and opens the project to workers. A pilot exposes only the
    /// first `pilot_units` units (default: a tenth of them, at least one); a
    /// later full launch promotes the pilot without rebuilding units.
    pub fn launch(&self, project_id: &str, mode: LaunchMode, pilot_units: Option<usize>) -> Result<DeploymentPlan, ServiceError> {
        self.with_project(project_id, |p| {
            match (p.state, mode) {
                (ProjectState::Draft, _) => {
                    let mut plan = plan_deployment(p.items.len() as u64, &p.config.qc, &p.config.payment)?;
                    let build = build_units(&p.items, &p.golden_pool, &p.config.qc)?;
                    plan.shuffle_seed = Some(build.seed);
                    p.units = build.units;
                    p.shortfall = build.shortfall;
                    p.plan = Some(plan);
                    match mode {
                        LaunchMode::Pilot => {
                            let default = p.units.len().div_ceil(10).max(1);
                            p.pilot_units = Some(pilot_units.unwrap_or(default).clamp(1, p.units.len()));
                            p.state = ProjectState::Piloting;
                        }
                        LaunchMode::Full => p.state = ProjectState::Live,
                    }
                }
                (ProjectState::Piloting, LaunchMode::Full) => p.state = ProjectState::Live,
                (state, _) => return Err(ServiceError::WrongState(state)),
            }
            p.persist_snapshot()?;
            Ok(p.plan.clone().expect("plan set at launch"))
        })
    }

    pub fn close(&self, project_id: &str) -> Result<(), ServiceError> {
        self.with_project(project_id, |p| {
            if p.state == ProjectState::Closed {
                return Err(ServiceError::WrongState(p.state));
            }
            p.state = ProjectState::Closed;
            p.persist_snapshot()?;
            Ok(())
        })
    }

    fn active(&self, claim: &Claim, now: u64) -> bool {
        !claim.submitted && now < claim.issued_at.saturating_add(self.lease_ms)
    }

    /// Hands the worker a unit: their open claim if they hold one, otherwise
    /// the first claimable unit they have not submitted that still has room.
    pub fn claim_next_unit(&self, project_id: &str, worker_id: &WorkerId) -> Result<UnitView, ServiceError> {
        self.with_project(project_id, |p| {
            if !matches!(p.state, ProjectState::Piloting | ProjectState::Live) {
                return Err(ServiceError::WrongState(p.state));
            }
            let now = self.clock.now_ms();
            if let Some(claim) = p.claims.iter().find(|c| &c.worker_id == worker_id && self.active(c, now)) {
                let (unit_id, issued_at) = (claim.unit_id.clone(), claim.issued_at);
                return Ok(self.view(p, &unit_id, issued_at));
            }
            let capacity = p.config.qc.assignments_per_unit as usize;
            let chosen = p.units[..p.claimable_units()]
                .iter()
                .find(|unit| {
                    let mut holders: BTreeSet<&WorkerId> = BTreeSet::new();
                    let mut mine = false;
                    for c in p.claims.iter().filter(|c| c.unit_id == unit.unit_id) {
                        if c.submitted || self.active(c, now) {
                            holders.insert(&c.worker_id);
                            mine |= &c.worker_id == worker_id;
                        }
                    }
                    !mine && holders.len() < capacity
                })
                .map(|u| u.unit_id.clone())
                .ok_or(ServiceError::NoneAvailable)?;
            let event = Event::Claim {
                worker_id: worker_id.clone(),
                unit_id: chosen.clone(),
                issued_at: now,
            };
            p.files.append(&event)?;
            p.apply(event);
            Ok(self.view(p, &chosen, now))
        })
    }

    fn view(&self, p: &Project, unit_id: &UnitId, issued_at: u64) -> UnitView {
        let unit = p.units.iter().find(|u| &u.unit_id == unit_id).expect("claimed unit exists");
        let items = unit
            .slots
            .iter()
            .map(|slot| {
                let item = p.item(&slot.item_ref).expect("unit items exist");
                ItemView {
                    position: slot.position,
                    text: item.text.clone(),
                    context: item.context.clone(),
                }
            })
            .collect();
        UnitView {
            project_id: p.id.clone(),
            unit_id: unit_id.clone(),
            template: p.config.template,
            title: p.config.title.clone(),
            general_instructions: p.config.general_instructions.clone(),
            categories: p.config.categories.clone(),
            consent: p.config.consent.clone(),
            style: p.config.style.clone(),
            feedback_enabled: p.config.feedback_enabled,
            issued_at,
            lease_expires_at: issued_at.saturating_add(self.lease_ms),
            items,
        }
    }

    /// Records a worker's answers for the unit they hold. The stored duration
    /// is measured by the server from claim issue to now.
    pub fn submit(&self, project_id: &str, request: SubmitRequest) -> Result<SubmitReceipt, ServiceError> {
        self.with_project(project_id, |p| {
            let now = self.clock.now_ms();
            let claim = p
                .claims
                .iter()
                .find(|c| c.worker_id == request.worker_id && c.unit_id == request.unit_id && self.active(c, now))
                .ok_or(ServiceError::NoClaim)?;
            let issued_at = claim.issued_at;
            if p.config.consent.required && !request.consent_acknowledged {
                return Err(ServiceError::ConsentMissing);
            }
            let unit = p.units.iter().find(|u| u.unit_id == request.unit_id).expect("claimed unit exists");
            if request.answers.len() != unit.slots.len() {
                return Err(ServiceError::ShapeMismatch(format!(
                    "expected {} answers, got {}",
                    unit.slots.len(),
                    request.answers.len()
                )));
            }
            if !request.per_slot_ms.is_empty() && request.per_slot_ms.len() != unit.slots.len() {
                return Err(ServiceError::ShapeMismatch("per_slot_ms must have one entry per slot".into()));
            }
            for (slot, answer) in unit.slots.iter().zip(&request.answers) {
                if answer.position != slot.position {
                    return Err(ServiceError::ShapeMismatch(format!(
                        "answer at index {} has position {}",
                        slot.position, answer.position
                    )));
                }
                let item = p.item(&slot.item_ref).expect("unit items exist");
                check_payload(&p.config, item, &answer.payload)
                    .map_err(|e| ServiceError::ShapeMismatch(format!("slot {}: {e}", slot.position)))?;
            }

            let submission = Submission {
                submission_id: format!("s{:06}", p.submissions.len() + 1),
                worker_id: request.worker_id,
                unit_id: request.unit_id,
                answers: request.answers,
                per_slot_ms: request.per_slot_ms,
                total_ms: now.saturating_sub(issued_at),
                feedback: request
                    .feedback
                    .filter(|f| p.config.feedback_enabled && !f.trim().is_empty()),
                consent_acknowledged: request.consent_acknowledged,
                received_at: now,
            };
            let receipt = SubmitReceipt {
                submission_id: submission.submission_id.clone(),
                total_seconds: submission.total_seconds(),
            };
            let event = Event::Submission { submission };
            p.files.append(&event)?;
            p.apply(event);
            Ok(receipt)
        })
    }

    /// Forwards a worker utterance to the project's dialog agent and records
    /// both turns. Nothing is recorded when the agent cannot be reached.
    pub async fn dialog_relay(
        &self,
        project_id: &str,
        worker_id: &WorkerId,
        session_id: &str,
        utterance: &str,
    ) -> Result<RelayReply, ServiceError> {
        let endpoint = self.with_project(project_id, |p| {
            if p.config.template != Template::Interactive {
                return Err(ServiceError::WrongTemplate);
            }
            if !matches!(p.state, ProjectState::Piloting | ProjectState::Live) {
                return Err(ServiceError::WrongState(p.state));
            }
            Ok(p.config.agent_endpoint.clone().expect("validated: interactive has an endpoint"))
        })?;

        let reply = self.relay.send(&endpoint, session_id, utterance).await?;

        self.with_project(project_id, |p| {
            let now = self.clock.now_ms();
            for (speaker, text) in [(Speaker::Worker, utterance), (Speaker::Agent, reply.as_str())] {
                let event = Event::Turn {
                    worker_id: worker_id.clone(),
                    session_id: session_id.to_owned(),
                    turn: Turn {
                        speaker,
                        text: text.to_owned(),
                    },
                    at: now,
                };
                p.files.append(&event)?;
                p.apply(event);
            }
            let transcript_len = p.transcripts[&(worker_id.clone(), session_id.to_owned())].len();
            Ok(RelayReply {
                reply: reply.clone(),
                transcript_len,
            })
        })
    }

    pub fn transcript(&self, project_id: &str, worker_id: &WorkerId, session_id: &str) -> Result<Vec<Turn>, ServiceError> {
        self.with_project(project_id, |p| {
            Ok(p.transcripts
                .get(&(worker_id.clone(), session_id.to_owned()))
                .cloned()
                .unwrap_or_default())
        })
    }

    /// Quality report over the current submissions, computed on every call.
    pub fn get_report(&self, project_id: &str, options: &ReportOptions) -> Result<QualityReport, ServiceError> {
        let data = self.with_project(project_id, |p| Ok(p.data()))?;
        Ok(build_report(&data, options)?)
    }

    pub fn export_document(&self, project_id: &str) -> Result<ExportDocument, ServiceError> {
        self.with_project(project_id, |p| {
            Ok(ExportDocument {
                schema: export::EXPORT_SCHEMA_VERSION,
                project_id: p.id.clone(),
                state: p.state,
                plan: p.plan.clone(),
                project: p.data(),
                transcripts: p
                    .transcripts
                    .iter()
                    .map(|((worker_id, session_id), turns)| TranscriptExport {
                        worker_id: worker_id.clone(),
                        session_id: session_id.clone(),
                        turns: turns.clone(),
                    })
                    .collect(),
            })
        })
    }

    pub fn export(&self, project_id: &str, format: ExportFormat) -> Result<String, ServiceError> {
        let doc = self.export_document(project_id)?;
        Ok(match format {
            ExportFormat::Json => doc.to_json(),
            ExportFormat::Csv => doc.to_csv(),
        })
    }
}

#[cfg(test)]
mod tests;
