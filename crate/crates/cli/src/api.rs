//! HTTP API over a shared session. Bodies are JSON; the log is NDJSON.

use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::session::{Outcome, Request, Session, SessionError};

pub type Shared = Arc<Mutex<Session>>;

#[derive(Debug, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
}

impl SessionError {
    pub fn status(&self) -> StatusCode {
        match self.name() {
            "UnknownPath" | "UnknownNode" | "UnknownModel" => StatusCode::NOT_FOUND,
            "StaleToken" | "NotTopOfStack" | "NothingToRollBack" | "ChooserRequired" => {
                StatusCode::CONFLICT
            }
            "UnknownDialect" | "UnknownMode" | "DuplicateAlias" | "ParseError" | "CatalogError"
            | "UnknownContext" => StatusCode::BAD_REQUEST,
            "IoError" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let body = ApiError {
            error: self.name().into(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, SessionError>;

fn lock(s: &Shared) -> MutexGuard<'_, Session> {
    s.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn router(session: Shared) -> Router {
    Router::new()
        .route("/models", get(models))
        .route("/models/{alias}/tree", get(tree))
        .route("/models/{alias}/nodes/{id}/source", get(node_source))
        .route("/rules", get(rules))
        .route("/contexts", get(contexts))
        .route("/log", get(log))
        .route("/produce", post(produce))
        .route("/map", post(map))
        .route("/choices/{token}", post(choose))
        .route("/rollback", post(rollback))
        .route("/export", post(export))
        .with_state(session)
}

async fn models(State(s): State<Shared>) -> Json<Vec<crate::session::ModelSummary>> {
    Json(lock(&s).models())
}

async fn tree(
    State(s): State<Shared>,
    Path(alias): Path<String>,
) -> ApiResult<crate::session::ApiModelTree> {
    lock(&s).tree(&alias).map(Json)
}

async fn node_source(
    State(s): State<Shared>,
    Path((alias, id)): Path<(String, u32)>,
) -> Result<String, SessionError> {
    lock(&s).node_source(&alias, id)
}

#[derive(Debug, Deserialize)]
pub struct RulesQuery {
    pub source: Option<String>,
    pub target: Option<String>,
}

/// With `source` and `target`: applicable productive rules and visible
/// adaptive rules. Without: every installation.
async fn rules(State(s): State<Shared>, Query(q): Query<RulesQuery>) -> Response {
    let s = lock(&s);
    match (q.source, q.target) {
        (Some(src), Some(tgt)) => match s.rules(&src, &tgt) {
            Ok(v) => Json(v).into_response(),
            Err(e) => e.into_response(),
        },
        _ => Json(s.installations()).into_response(),
    }
}

#[derive(Debug, Deserialize)]
pub struct ContextQuery {
    pub context: Option<String>,
}

async fn contexts(
    State(s): State<Shared>,
    Query(q): Query<ContextQuery>,
) -> ApiResult<crate::session::ContextView> {
    lock(&s)
        .context_view(q.context.as_deref().unwrap_or("global"))
        .map(Json)
}

async fn log(State(s): State<Shared>) -> Response {
    let mut body = String::new();
    for entry in lock(&s).log() {
        body.push_str(&serde_json::to_string(entry).expect("log entries serialize"));
        body.push('\n');
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

#[derive(Debug, Deserialize)]
pub struct ProduceBody {
    pub source: String,
    pub target: String,
    /// `auto`, `choice` or `debug`; the session default when absent.
    pub mode: Option<String>,
}

async fn produce(State(s): State<Shared>, Json(b): Json<ProduceBody>) -> ApiResult<Outcome> {
    let mut s = lock(&s);
    let mode = match b.mode.as_deref() {
        None => s.default_mode,
        Some(m) => {
            crate::script::parse_mode(m).ok_or_else(|| SessionError::UnknownMode(m.into()))?
        }
    };
    s.directive(
        Request::Produce {
            source: b.source,
            target: b.target,
            mode,
        },
        Vec::new(),
    )
    .map(Json)
}

#[derive(Debug, Deserialize)]
pub struct MapBody {
    pub source: String,
    pub target: String,
    pub scope: String,
}

async fn map(State(s): State<Shared>, Json(b): Json<MapBody>) -> ApiResult<Outcome> {
    lock(&s)
        .directive(
            Request::Map {
                source: b.source,
                target: b.target,
                scope: b.scope,
            },
            Vec::new(),
        )
        .map(Json)
}

#[derive(Debug, Deserialize)]
pub struct ChoiceBody {
    /// Index into the question's options; absent or `cancel: true` abandons.
    pub index: Option<usize>,
    #[serde(default)]
    pub cancel: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChoiceResponse {
    Cancelled,
    #[serde(untagged)]
    Outcome(Box<Outcome>),
}

async fn choose(
    State(s): State<Shared>,
    Path(token): Path<String>,
    Json(b): Json<ChoiceBody>,
) -> ApiResult<ChoiceResponse> {
    let answer = if b.cancel { None } else { b.index };
    let r = lock(&s).answer(&token, answer)?;
    Ok(Json(match r {
        Some(o) => ChoiceResponse::Outcome(Box::new(o)),
        None => ChoiceResponse::Cancelled,
    }))
}

#[derive(Debug, Default, Deserialize)]
pub struct RollbackBody {
    pub txn: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RolledBack {
    pub txn: u64,
}

async fn rollback(
    State(s): State<Shared>,
    body: Option<Json<RollbackBody>>,
) -> ApiResult<RolledBack> {
    let txn = body.and_then(|b| b.0.txn);
    lock(&s).rollback(txn).map(|txn| Json(RolledBack { txn }))
}

#[derive(Debug, Deserialize)]
pub struct ExportBody {
    pub model: String,
    pub dir: Option<std::path::PathBuf>,
}

async fn export(
    State(s): State<Shared>,
    Json(b): Json<ExportBody>,
) -> ApiResult<crate::session::ExportView> {
    lock(&s).export(&b.model, b.dir.as_deref()).map(Json)
}

/// Serves `router` on `addr` until the process ends.
pub async fn serve(session: Shared, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(session)).await
}
