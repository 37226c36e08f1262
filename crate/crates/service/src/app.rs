//! Router, shared state and request handlers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use lpchat_gateway::Gateway;
use lpchat_pipeline::{
    edit_and_regenerate, post_message, solve_session, EditStage, Event, FileMeta, PipelineError, RunContext, Session,
    SessionView, Status, Visibility,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::api::{
    CreatedResponse, EditRequest, ErrorResponse, FileResponse, MessageRequest, ReplyResponse, UploadQuery,
    VisibilityRequest,
};
use crate::config::ServiceConfig;
use crate::store::{is_valid_file_name, is_valid_id, Store, StoreError};

pub const ALLOWED_EXTENSIONS: [&str; 2] = ["csv", "json"];

struct Slot {
    session: Arc<tokio::sync::Mutex<Session>>,
    /// Last published snapshot; reports `running` while a run holds the lock.
    view: Mutex<SessionView>,
}

pub struct AppState {
    config: ServiceConfig,
    gateway: Gateway,
    store: Store,
    slots: Mutex<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    /// Fails when the data directory cannot be created or written.
    pub fn new(config: ServiceConfig, gateway: Gateway) -> Result<Arc<AppState>, StoreError> {
        let store = Store::open(&config.data_dir)?;
        Ok(Arc::new(AppState {
            config,
            gateway,
            store,
            slots: Mutex::new(HashMap::new()),
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        if !is_valid_id(id) {
            return Err(ApiError::not_found(id));
        }
        let mut slots = self.slots.lock().unwrap();
        if let Some(s) = slots.get(id) {
            return Ok(s.clone());
        }
        if !self.store.exists(id) {
            return Err(ApiError::not_found(id));
        }
        let session = self.store.load(id).map_err(ApiError::storage)?;
        let slot = Arc::new(Slot {
            view: Mutex::new(session.view()),
            session: Arc::new(tokio::sync::Mutex::new(session)),
        });
        slots.insert(id.to_string(), slot.clone());
        Ok(slot)
    }

    fn evict(&self, id: &str) {
        self.slots.lock().unwrap().remove(id);
    }

    /// Full in-memory session state, waiting for any run in flight.
    pub async fn snapshot(&self, id: &str) -> Option<Session> {
        let slot = self.slot(id).ok()?;
        let s = slot.session.lock().await;
        Some(s.clone())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Box<ErrorResponse>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, error: impl Into<String>) -> Self {
        ApiError {
            status,
            body: Box::new(ErrorResponse {
                error: error.into(),
                code: code.into(),
                diagnostics: Vec::new(),
                session: None,
            }),
        }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id:?}"))
    }

    fn storage(e: StoreError) -> Self {
        tracing::error!("{e}");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", e.to_string())
    }

    fn bad_request(e: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string())
    }

    fn with_session(mut self, view: SessionView) -> Self {
        self.body.session = Some(view);
        self
    }

    fn from_pipeline(e: PipelineError) -> Self {
        match e {
            PipelineError::EmptyInput | PipelineError::InvalidRequest(_) => ApiError::bad_request(e),
            PipelineError::NotReady(_) => ApiError::new(StatusCode::CONFLICT, "not_ready", e.to_string()),
            PipelineError::Backend(_) => ApiError::new(StatusCode::BAD_GATEWAY, "backend_unavailable", e.to_string()),
            PipelineError::Session(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(*self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn json<T: Serialize>(status: StatusCode, body: T) -> ApiResult {
    Ok((status, Json(body)).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/messages", post(post_message_handler))
        .route("/v1/sessions/{id}/artifacts/{stage}", put(edit_artifact))
        .route(
            "/v1/sessions/{id}/files",
            post(upload_data).layer(DefaultBodyLimit::disable()),
        )
        .route("/v1/sessions/{id}/solve", post(solve_handler))
        .route("/v1/sessions/{id}/visibility", put(set_visibility))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

async fn create_session(State(state): State<Arc<AppState>>) -> ApiResult {
    let id = uuid::Uuid::new_v4().simple().to_string();
    let mut session = Session::new(id.clone());
    state.store.append(&id, &session.take_pending()).map_err(ApiError::storage)?;
    let view = session.view();
    state.slots.lock().unwrap().insert(
        id.clone(),
        Arc::new(Slot {
            view: Mutex::new(view.clone()),
            session: Arc::new(tokio::sync::Mutex::new(session)),
        }),
    );
    json(StatusCode::CREATED, CreatedResponse { id, session: view })
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = state.slot(&id)?;
    let view = slot.view.lock().unwrap().clone();
    json(StatusCode::OK, view)
}

/// What a run produced, for the handler to turn into a response.
struct RunOutcome {
    result: Result<String, PipelineError>,
    view: SessionView,
    diagnostics: Vec<lpchat_core::lang::Diagnostic>,
    failure: Option<String>,
    failed: bool,
}

enum Finished {
    Done(RunOutcome),
    StillRunning(SessionView),
}

/// Runs `op` on the session off the async runtime, holding the session's
/// lock for the whole run and persisting its events when it ends. A second
/// request for the same session while the lock is held gets 409.
async fn run<F>(state: Arc<AppState>, id: String, op: F) -> Result<Finished, ApiError>
where
    F: FnOnce(&mut Session, &RunContext, &Store) -> Result<String, PipelineError> + Send + 'static,
{
    let slot = state.slot(&id)?;
    let guard = slot.session.clone().try_lock_owned().map_err(|_| {
        let view = slot.view.lock().unwrap().clone();
        ApiError::new(StatusCode::CONFLICT, "conflict", "a run is already in flight for this session").with_session(view)
    })?;
    let running = {
        let mut v = slot.view.lock().unwrap();
        v.status = Status::Running;
        v.clone()
    };
    let st = state.clone();
    let task_slot = slot.clone();
    let task_id = id.clone();
    let handle = tokio::task::spawn_blocking(move || {
        let mut session = guard;
        let files = st.store.file_source(&task_id);
        let ctx = RunContext {
            gateway: &st.gateway,
            config: &st.config.pipeline,
            files: &files,
        };
        let result = op(&mut session, &ctx, &st.store);
        let pending = session.take_pending();
        let persisted = st.store.append(&task_id, &pending);
        let view = session.view();
        *task_slot.view.lock().unwrap() = view.clone();
        let outcome = RunOutcome {
            result,
            view,
            diagnostics: session.diagnostics.clone(),
            failure: session.failure.clone(),
            failed: session.status == Status::Failed,
        };
        if persisted.is_err() {
            // Memory is ahead of disk; drop it so the next request reloads.
            st.evict(&task_id);
        }
        persisted.map(|_| outcome)
    });
    let budget = Duration::from_secs_f64(state.config.reply_budget_secs);
    match tokio::time::timeout(budget, handle).await {
        Err(_) => Ok(Finished::StillRunning(running)),
        Ok(Err(join)) => {
            state.evict(&id);
            Err(ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "internal",
                format!("run aborted: {join}"),
            ))
        }
        Ok(Ok(Err(e))) => Err(ApiError::storage(e)),
        Ok(Ok(Ok(outcome))) => Ok(Finished::Done(outcome)),
    }
}

/// Shared response mapping. With `strict`, a run that leaves the session
/// failed answers 422 with the diagnostics.
fn reply_response(finished: Finished, strict: bool) -> ApiResult {
    match finished {
        Finished::StillRunning(view) => json(
            StatusCode::ACCEPTED,
            ReplyResponse {
                reply: None,
                session: view,
            },
        ),
        Finished::Done(o) => match o.result {
            Err(e) => Err(ApiError::from_pipeline(e).with_session(o.view)),
            Ok(_) if strict && o.failed => {
                let mut err = ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "unprocessable",
                    o.failure.unwrap_or_else(|| "validation failed".into()),
                )
                .with_session(o.view);
                err.body.diagnostics = o.diagnostics;
                Err(err)
            }
            Ok(reply) => json(
                StatusCode::OK,
                ReplyResponse {
                    reply: Some(reply),
                    session: o.view,
                },
            ),
        },
    }
}

async fn post_message_handler(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<MessageRequest>, JsonRejection>,
) -> ApiResult {
    let Json(req) = body.map_err(ApiError::bad_request)?;
    let finished = run(state, id, move |s, ctx, _| post_message(s, ctx, &req.text)).await?;
    reply_response(finished, false)
}

async fn edit_artifact(
    State(state): State<Arc<AppState>>,
    Path((id, stage)): Path<(String, String)>,
    body: Result<Json<EditRequest>, JsonRejection>,
) -> ApiResult {
    let stage: EditStage = stage.parse().map_err(|e: String| ApiError::bad_request(e))?;
    let Json(req) = body.map_err(ApiError::bad_request)?;
    let finished = run(state, id, move |s, ctx, _| edit_and_regenerate(s, ctx, stage, &req.content)).await?;
    reply_response(finished, true)
}

async fn solve_handler(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let finished = run(state, id, |s, ctx, _| solve_session(s, ctx)).await?;
    reply_response(finished, true)
}

async fn set_visibility(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<VisibilityRequest>, JsonRejection>,
) -> ApiResult {
    let Json(req) = body.map_err(ApiError::bad_request)?;
    let finished = run(state, id, move |s, _, _| {
        let visibility = Visibility {
            show_formulas: req.show_formulas.unwrap_or(s.visibility.show_formulas),
            show_code: req.show_code.unwrap_or(s.visibility.show_code),
        };
        if visibility != s.visibility {
            s.record(Event::VisibilityChanged { visibility })?;
        }
        Ok(String::new())
    })
    .await?;
    match finished {
        Finished::Done(o) => {
            o.result.map_err(ApiError::from_pipeline)?;
            json(StatusCode::OK, o.view)
        }
        Finished::StillRunning(view) => json(StatusCode::ACCEPTED, view),
    }
}

async fn upload_data(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<UploadQuery>, QueryRejection>,
    body: Body,
) -> ApiResult {
    let Query(UploadQuery { name }) = query.map_err(ApiError::bad_request)?;
    state.slot(&id)?;
    if !is_valid_file_name(&name) {
        return Err(ApiError::bad_request(format!("invalid file name {name:?}")));
    }
    let ext = std::path::Path::new(&name)
        .extension()
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    if !ALLOWED_EXTENSIONS.contains(&ext.as_str()) {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "unsupported_type",
            format!("only .csv and .json files are accepted, got {name:?}"),
        ));
    }
    let max = state.config.max_upload_bytes;
    let bytes = to_bytes(body, max).await.map_err(|_| {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "too_large",
            format!("upload exceeds {max} bytes"),
        )
    })?;
    let meta = FileMeta {
        size: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    let (n, m) = (name.clone(), meta.clone());
    let sid = id.clone();
    let finished = run(state, id, move |s, _, store| {
        store
            .save_file(&sid, &n, &bytes)
            .map_err(|e| PipelineError::InvalidRequest(e.to_string()))?;
        s.record(Event::FileUploaded { name: n, meta: m })?;
        Ok(String::new())
    })
    .await?;
    match finished {
        Finished::Done(o) => {
            o.result.map_err(ApiError::from_pipeline)?;
            json(
                StatusCode::CREATED,
                FileResponse {
                    name,
                    size: meta.size,
                    sha256: meta.sha256,
                    session: o.view,
                },
            )
        }
        Finished::StillRunning(view) => json(
            StatusCode::ACCEPTED,
            FileResponse {
                name,
                size: meta.size,
                sha256: meta.sha256,
                session: view,
            },
        ),
    }
}
