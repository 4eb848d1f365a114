//! Turn-level HTTP dialogue service.
//!
//! Routes:
//! - `POST /session` creates a session and returns the greeting
//! - `GET /session/{id}` shows its state
//! - `POST /session/{id}/utterance` with `{"text": ...}` runs one turn
//! - `POST /session/{id}/rating` with `{"success": bool, "quality": 0..=5}` rates a closed session
//!
//! Anything else is served from the static directory, if one is configured.

pub mod error;
pub mod logs;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::header::AUTHORIZATION;
use axum::http::HeaderMap;
use axum::routing::{get, post};
use axum::{Json, Router};
use dpn_core::db::VenueDatabase;
use dpn_core::live::{BeliefSummary, LiveDialogue, Utterances};
use dpn_core::nlg::GREETING;
use dpn_core::{Field, MasterAction, Ontology, PolicyNetwork, Slot};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use logs::{consistent_dialogues, LogSink, Logs, RatingRecord, SessionRecord};

pub const API_VERSION: u32 = 1;
pub const MAX_QUALITY: u8 = 5;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Maximum number of simultaneously open sessions.
    pub capacity: usize,
    /// Open sessions idle this long are closed to free capacity.
    pub idle_timeout_secs: u64,
    /// Required as `Authorization: Bearer <token>` on rating requests.
    pub rating_token: Option<String>,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            capacity: 256,
            idle_timeout_secs: 1800,
            rating_token: None,
            static_dir: None,
        }
    }
}

/// Read-only model shared by all sessions.
#[derive(Debug)]
pub struct Model {
    pub ontology: Ontology,
    pub db: VenueDatabase,
    pub net: PolicyNetwork,
}

#[derive(Debug)]
struct Session {
    dialogue: LiveDialogue,
    created: u64,
    last_active: u64,
    rated: bool,
}

#[derive(Debug)]
pub struct AppState {
    model: Arc<Model>,
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    logs: Mutex<LogSink>,
}

impl AppState {
    pub fn new(model: Arc<Model>, config: ServiceConfig, logs: LogSink) -> Arc<Self> {
        Arc::new(AppState {
            model,
            config,
            sessions: Mutex::new(HashMap::new()),
            logs: Mutex::new(logs),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        lock(&self.sessions).get(id).cloned().ok_or(ApiError::NotFound)
    }

    fn log_closed(&self, id: &str, s: &Session) -> Result<(), ApiError> {
        let rec = SessionRecord {
            version: logs::LOG_VERSION,
            session_id: id.to_owned(),
            created: s.created,
            closed: s.last_active,
            utterances: s.dialogue.utterances.clone(),
            transcript: s.dialogue.transcript.clone(),
        };
        Ok(lock(&self.logs).session(&rec)?)
    }
}

// A poisoned lock only means another request panicked; the data is still usable.
fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Closed,
}

impl Status {
    fn of(d: &LiveDialogue) -> Self {
        if d.closed {
            Status::Closed
        } else {
            Status::Open
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub version: u32,
    pub session_id: String,
    pub greeting: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub version: u32,
    pub session_id: String,
    pub status: Status,
    pub turn: usize,
    pub created: u64,
    pub last_active: u64,
    pub rated: bool,
    pub utterances: Vec<Utterances>,
    pub belief_summary: BeliefSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionView {
    pub dia_act: String,
    pub query: Option<Slot>,
    pub offer: Vec<Field>,
    pub label: String,
}

impl ActionView {
    pub fn new(ontology: &Ontology, a: &MasterAction) -> Self {
        let offer = a
            .offer
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .flat_map(|(k, _)| ontology.fields_for_bit(k))
            .collect();
        ActionView {
            dia_act: a.dia_act.name().to_owned(),
            query: a.query.slot(),
            offer,
            label: a.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRequest {
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceResponse {
    pub version: u32,
    pub system_text: String,
    pub master_action: ActionView,
    pub belief_summary: BeliefSummary,
    pub status: Status,
    pub turn: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingRequest {
    pub success: bool,
    pub quality: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingResponse {
    pub version: u32,
    pub session_id: String,
    pub success: bool,
    pub quality: u8,
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(t)| t).map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn create(State(st): State<Arc<AppState>>) -> Result<Json<CreateResponse>, ApiError> {
    let t = now();
    let mut sessions = lock(&st.sessions);
    let mut open = 0;
    for (id, s) in sessions.iter() {
        let mut s = lock(s);
        if s.dialogue.closed {
            continue;
        }
        if t.saturating_sub(s.last_active) >= st.config.idle_timeout_secs {
            s.dialogue.closed = true;
            st.log_closed(id, &s)?;
        } else {
            open += 1;
        }
    }
    if open >= st.config.capacity {
        return Err(ApiError::Capacity);
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session {
        dialogue: LiveDialogue::new(&st.model.ontology),
        created: t,
        last_active: t,
        rated: false,
    };
    sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok(Json(CreateResponse {
        version: API_VERSION,
        session_id: id,
        greeting: GREETING.to_owned(),
    }))
}

async fn show(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let s = st.session(&id)?;
    let s = lock(&s);
    Ok(Json(SessionView {
        version: API_VERSION,
        session_id: id,
        status: Status::of(&s.dialogue),
        turn: s.dialogue.turns(),
        created: s.created,
        last_active: s.last_active,
        rated: s.rated,
        utterances: s.dialogue.utterances.clone(),
        belief_summary: s.dialogue.summary(&st.model.ontology),
    }))
}

async fn utterance(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<UtteranceRequest>, JsonRejection>,
) -> Result<Json<UtteranceResponse>, ApiError> {
    let s = st.session(&id)?;
    let req = body(payload)?;
    let mut s = lock(&s);
    if s.dialogue.closed {
        return Err(ApiError::Closed);
    }
    if req.text.trim().is_empty() {
        return Err(ApiError::BadRequest("empty text".into()));
    }
    let m = &st.model;
    let out = s.dialogue.step(&m.ontology, &m.db, &m.net, &req.text)?;
    s.last_active = now();
    if out.closed {
        st.log_closed(&id, &s)?;
    }
    Ok(Json(UtteranceResponse {
        version: API_VERSION,
        system_text: out.system_text,
        master_action: ActionView::new(&m.ontology, &out.reply.action),
        belief_summary: s.dialogue.summary(&m.ontology),
        status: Status::of(&s.dialogue),
        turn: s.dialogue.turns(),
    }))
}

fn authorized(config: &ServiceConfig, headers: &HeaderMap) -> bool {
    let Some(token) = &config.rating_token else {
        return true;
    };
    headers
        .get(AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|t| t.trim() == token)
}

async fn rating(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<RatingRequest>, JsonRejection>,
) -> Result<Json<RatingResponse>, ApiError> {
    if !authorized(&st.config, &headers) {
        return Err(ApiError::Unauthorized);
    }
    let s = st.session(&id)?;
    let req = body(payload)?;
    if req.quality > MAX_QUALITY {
        return Err(ApiError::BadRequest(format!("quality must be in 0..={MAX_QUALITY}")));
    }
    let mut s = lock(&s);
    if !s.dialogue.closed {
        return Err(ApiError::StillOpen);
    }
    if s.rated {
        return Err(ApiError::AlreadyRated);
    }
    let rec = RatingRecord {
        version: logs::LOG_VERSION,
        session_id: id.clone(),
        success: req.success,
        quality: req.quality,
        rated: now(),
    };
    lock(&st.logs).rating(&rec)?;
    s.rated = true;
    Ok(Json(RatingResponse {
        version: API_VERSION,
        session_id: id,
        success: req.success,
        quality: req.quality,
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let static_dir = state.config.static_dir.clone();
    let app = Router::new()
        .route("/session", post(create))
        .route("/session/{id}", get(show))
        .route("/session/{id}/utterance", post(utterance))
        .route("/session/{id}/rating", post(rating))
        .with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
