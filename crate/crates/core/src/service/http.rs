//! JSON API under `/api/v1/`.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET  | `/health` | liveness |
//! | POST | `/projects` | body: config document |
//! | GET  | `/projects/{id}` | status |
//! | POST | `/projects/{id}/items[?kind=golden]` | JSON array or `text/csv` |
//! | POST | `/projects/{id}/launch` | `{"mode": "pilot"\|"full", "pilot_units"?}` |
//! | POST | `/projects/{id}/claim?worker_id=` | worker view of a unit |
//! | POST | `/projects/{id}/submit` | [`SubmitRequest`] |
//! | POST | `/projects/{id}/dialog` | `{worker_id, session_id, utterance}` |
//! | GET  | `/projects/{id}/report[?format=markdown]` | quality report |
//! | GET  | `/projects/{id}/export?format=json\|csv` | export document |
//! | POST | `/projects/{id}/close` | |
//! | GET  | `/payment?minutes=&hourly_rate_cents=` | suggested payment |
//! | POST | `/lint` | body: config document |
//! | POST | `/markdown` | body: Markdown text |
//!
//! Errors are `{"error": {"code", "message", "violations"?}}`.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;

use super::{
    ExportFormat, LaunchMode, Service, ServiceError, SubmitRequest,
};
use crate::analytics::{render_report_markdown, ReportOptions};
use crate::config::{
    lint_clarity, parse_config, validate_config, ConfigError, PaymentInputs, Violation,
    DEFAULT_HOURLY_RATE_CENTS,
};
use crate::ingest::PayloadFormat;
use crate::markdown::render_markdown;
use crate::model::WorkerId;
use crate::planner::suggest_payment;

pub const API_PREFIX: &str = "/api/v1";

/// An error response.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    violations: Option<Vec<Violation>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_owned(),
            message: message.into(),
            violations: None,
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(err: ServiceError) -> Self {
        use ServiceError as E;
        let status = match &err {
            E::UnknownProject(_) | E::NoneAvailable => StatusCode::NOT_FOUND,
            E::InvalidConfig(_) | E::Plan(_) | E::ShapeMismatch(_) | E::ConsentMissing => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            E::WrongState(_) | E::NoClaim | E::WrongTemplate | E::NoSubmissions => StatusCode::CONFLICT,
            E::MalformedPayload(_) => StatusCode::BAD_REQUEST,
            E::AgentUnreachable(_) => StatusCode::BAD_GATEWAY,
            E::Analytics(_) | E::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let violations = match &err {
            E::InvalidConfig(v) => Some(v.clone()),
            _ => None,
        };
        Self {
            status,
            code: err.code().to_owned(),
            message: err.to_string(),
            violations,
        }
    }
}

impl From<ConfigError> for ApiError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::Invalid(v) => ServiceError::InvalidConfig(v).into(),
            other => ApiError::new(StatusCode::BAD_REQUEST, other.code(), other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(v) = self.violations {
            error["violations"] = json!(v);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<Service>;

/// Runs blocking service work (it fsyncs) off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

fn utf8(body: &Bytes) -> ApiResult<&str> {
    std::str::from_utf8(body)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "malformed-payload", "body is not UTF-8"))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_project(State(svc): State<Shared>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let config = parse_config(utf8(&body)?)?;
    let created = blocking(move || svc.create_project(config)).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn status(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || svc.status(&id)).await?))
}

#[derive(Deserialize)]
struct ItemsQuery {
    #[serde(default)]
    kind: Option<String>,
}

async fn upload_items(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ItemsQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let golden = match q.kind.as_deref() {
        None | Some("items") => false,
        Some("golden") => true,
        Some(other) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "malformed-payload",
                format!("unknown item kind {other:?}"),
            ))
        }
    };
    let format = match headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()) {
        Some(ct) if ct.starts_with("text/csv") => PayloadFormat::Csv,
        _ => PayloadFormat::Json,
    };
    let payload = utf8(&body)?.to_owned();
    Ok(Json(blocking(move || svc.upload_items(&id, &payload, format, golden)).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LaunchBody {
    mode: LaunchMode,
    #[serde(default)]
    pilot_units: Option<usize>,
}

async fn launch(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<LaunchBody>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || svc.launch(&id, body.mode, body.pilot_units)).await?))
}

#[derive(Deserialize)]
struct ClaimQuery {
    worker_id: String,
}

async fn claim(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ClaimQuery>,
) -> ApiResult<impl IntoResponse> {
    if q.worker_id.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed-payload", "worker_id is empty"));
    }
    let worker = WorkerId::new(q.worker_id);
    Ok(Json(blocking(move || svc.claim_next_unit(&id, &worker)).await?))
}

async fn submit(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let request: SubmitRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed-payload", e.to_string()))?;
    Ok(Json(blocking(move || svc.submit(&id, request)).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DialogBody {
    worker_id: WorkerId,
    session_id: String,
    utterance: String,
}

async fn dialog(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<DialogBody>,
) -> ApiResult<impl IntoResponse> {
    let reply = svc
        .dialog_relay(&id, &body.worker_id, &body.session_id, &body.utterance)
        .await?;
    Ok(Json(reply))
}

#[derive(Deserialize)]
struct FormatQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn report(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let report = blocking(move || svc.get_report(&id, &ReportOptions::default())).await?;
    Ok(match q.format.as_deref() {
        Some("markdown") | Some("md") => (
            [(header::CONTENT_TYPE, "text/markdown; charset=utf-8")],
            render_report_markdown(&report),
        )
            .into_response(),
        None | Some("json") => Json(report).into_response(),
        Some(other) => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed-payload", format!("unknown format {other:?}")))
        }
    })
}

async fn export(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let (format, content_type) = match q.format.as_deref() {
        None | Some("json") => (ExportFormat::Json, "application/json"),
        Some("csv") => (ExportFormat::Csv, "text/csv; charset=utf-8"),
        Some(other) => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed-payload", format!("unknown format {other:?}")))
        }
    };
    let body = blocking(move || svc.export(&id, format)).await?;
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}

async fn close(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    blocking(move || svc.close(&id)).await?;
    Ok(Json(json!({ "state": "closed" })))
}

#[derive(Deserialize)]
struct PaymentQuery {
    minutes: f64,
    #[serde(default)]
    hourly_rate_cents: Option<u32>,
}

#[derive(Serialize)]
struct PaymentBody {
    minutes: f64,
    hourly_rate_cents: u32,
    suggested_cents: u64,
}

async fn payment(Query(q): Query<PaymentQuery>) -> ApiResult<Json<PaymentBody>> {
    let inputs = PaymentInputs {
        estimated_minutes_per_unit: q.minutes,
        hourly_rate_cents: q.hourly_rate_cents.unwrap_or(DEFAULT_HOURLY_RATE_CENTS),
    };
    if !(inputs.estimated_minutes_per_unit.is_finite() && inputs.estimated_minutes_per_unit > 0.0) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid-config",
            "minutes must be a positive number",
        ));
    }
    Ok(Json(PaymentBody {
        minutes: inputs.estimated_minutes_per_unit,
        hourly_rate_cents: inputs.hourly_rate_cents,
        suggested_cents: suggest_payment(&inputs),
    }))
}

/// Validates and lints a config document without creating a project. The
/// config must parse; invariant violations are reported alongside findings.
async fn lint(body: Bytes) -> ApiResult<impl IntoResponse> {
    let config = match parse_config(utf8(&body)?) {
        Ok(config) => config,
        Err(ConfigError::Invalid(violations)) => {
            return Ok(Json(json!({ "violations": violations, "lint": null })));
        }
        Err(other) => return Err(other.into()),
    };
    Ok(Json(json!({
        "violations": validate_config(&config),
        "lint": lint_clarity(&config),
    })))
}

async fn markdown(body: Bytes) -> ApiResult<impl IntoResponse> {
    Ok(Json(render_markdown(utf8(&body)?)))
}

pub fn router(service: Arc<Service>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/projects", post(create_project))
        .route("/projects/{id}", get(status))
        .route("/projects/{id}/items", post(upload_items))
        .route("/projects/{id}/launch", post(launch))
        .route("/projects/{id}/claim", post(claim))
        .route("/projects/{id}/submit", post(submit))
        .route("/projects/{id}/dialog", post(dialog))
        .route("/projects/{id}/report", get(report))
        .route("/projects/{id}/export", get(export))
        .route("/projects/{id}/close", post(close))
        .route("/payment", get(payment))
        .route("/lint", post(lint))
        .route("/markdown", post(markdown))
        .with_state(service);
    Router::new().nest(API_PREFIX, api)
}

/// Serves the API on `listener` until `shutdown` resolves, then lets
/// in-flight requests finish. Every accepted write is already on disk.
pub async fn serve(
    listener: TcpListener,
    service: Arc<Service>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}
