//! HTTP+JSON postedition API.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | `{"document", "profile"?, "seed"?}` |
//! | GET | `/sessions/{s}` | |
//! | POST | `/sessions/{s}/deconvert` | |
//! | GET | `/sessions/{s}/utterances/{u}` | |
//! | GET | `/sessions/{s}/utterances/{u}/tokens/{i}/trace` | |
//! | GET | `/sessions/{s}/utterances/{u}/nodes/{n}/candidates?widen=true\|false` | |
//! | POST | `/sessions/{s}/utterances/{u}/nodes/{n}/choose` | `{"lu", "version"?}` |
//! | POST | `/sessions/{s}/utterances/{u}/nodes/{n}/attributes` | `{"name", "value", "level", "version"?}` |
//! | POST | `/sessions/{s}/replace` | `{"from_lu", "to_lu"}` |
//! | GET | `/sessions/{s}/export` | |
//! | PUT | `/sessions/{s}/policy` | `{"policy": "always"\|"every-k"\|"on-demand", "k"?}` |
//! | POST | `/sessions/{s}/redeconvert` | |
//!
//! Every utterance carries a version, bumped whenever its state changes.
//! Edits may send the version they were made against; a stale one gets 409.
//! Errors are `{"error": code, "message", "report"?}` with status 400
//! (malformed), 404 (unknown id), 409 (stale version or state not ready) or
//! 422 (validation failure, `report` holds the validation report).

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use unl_deconv::lexicon::CountStore;
use unl_deconv::pipeline::{
    edit_and_redeconvert, export_document, global_replace, load_session, lu_candidates, resolve_trace, save_session,
    trace_table, utterance_id, AttrLevel, Config, Edit, Lingware, LuOption, PipelineError, Policy, ReplaceReport,
    TokenTrace, TraceLink, UtteranceState,
};
use unl_deconv::unl::{parse_document, NodeId};
use unl_deconv::validate::{validate, ValidationReport};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    report: Option<ValidationReport>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            report: None,
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", what)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let message = e.to_string();
        match e {
            PipelineError::Invalid(report) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                code: "invalid-graph",
                message,
                report: Some(report),
            },
            PipelineError::UnknownNode(_) => Self::new(StatusCode::NOT_FOUND, "unknown-node", message),
            PipelineError::UnknownAttribute(_) => Self::new(StatusCode::BAD_REQUEST, "unknown-attribute", message),
            PipelineError::LuNotCandidate { .. } => Self::new(StatusCode::BAD_REQUEST, "lu-not-candidate", message),
            PipelineError::UnknownProfile(_) => Self::new(StatusCode::BAD_REQUEST, "unknown-profile", message),
            PipelineError::Incomplete(_) => Self::new(StatusCode::CONFLICT, "not-deconverted", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(r) = self.report {
            body["report"] = serde_json::to_value(r).expect("report serializes");
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed", e.to_string()))
}

struct Session {
    id: String,
    states: Vec<UtteranceState>,
    versions: Vec<u64>,
    policy: Policy,
}

impl Session {
    fn index(&self, u: &str) -> ApiResult<usize> {
        self.states
            .iter()
            .position(|s| s.id == u)
            .ok_or_else(|| ApiError::not_found(format!("unknown utterance `{u}`")))
    }

    fn check_version(&self, k: usize, version: Option<u64>) -> ApiResult<()> {
        match version {
            Some(v) if v != self.versions[k] => Err(ApiError::new(
                StatusCode::CONFLICT,
                "stale-version",
                format!("utterance {} is at version {}, not {v}", self.states[k].id, self.versions[k]),
            )),
            _ => Ok(()),
        }
    }

    fn view(&self, k: usize) -> UtteranceView {
        let st = &self.states[k];
        UtteranceView {
            id: st.id.clone(),
            version: self.versions[k],
            complete: st.is_complete(),
            text: st.rendering(true),
            plain: st.rendering(false),
            pending_edits: st.pending_edits,
            validation: st.validation.clone(),
        }
    }
}

/// Shared server state: one lingware, one count store, many sessions.
pub struct AppState {
    lingware: Arc<Lingware>,
    counts: Arc<CountStore>,
    session_dir: Option<PathBuf>,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(lingware: Lingware, counts: CountStore, session_dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState {
            lingware: Arc::new(lingware),
            counts: Arc::new(counts),
            session_dir,
            sessions: Mutex::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn session_file(&self, id: &str) -> Option<PathBuf> {
        self.session_dir.as_ref().map(|d| d.join(format!("{id}.session")))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        let mut map = self.sessions.lock().expect("session map lock");
        if let Some(s) = map.get(id) {
            return Ok(s.clone());
        }
        // sessions outlive the process through their files
        let file = self
            .session_file(id)
            .filter(|f| f.exists() && !id.contains(['/', '\\', '.']))
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
        let states = load_session(&file)?;
        let s = Arc::new(Mutex::new(Session {
            id: id.to_string(),
            versions: vec![0; states.len()],
            states,
            policy: Policy::Always,
        }));
        map.insert(id.to_string(), s.clone());
        Ok(s)
    }

    fn persist(&self, s: &Session) -> ApiResult<()> {
        if let Some(f) = self.session_file(&s.id) {
            save_session(&f, &s.states)?;
        }
        Ok(())
    }
}

type Shared = State<Arc<AppState>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtteranceView {
    pub id: String,
    pub version: u64,
    pub complete: bool,
    /// Rendering with `&i_` marks.
    pub text: Option<String>,
    pub plain: Option<String>,
    pub pending_edits: u32,
    pub validation: Option<ValidationReport>,
}

#[derive(Deserialize)]
struct CreateSession {
    document: String,
    profile: Option<String>,
    seed: Option<u64>,
}

async fn create_session(State(app): Shared, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = parse_body(&body)?;
    let doc = parse_document(&req.document).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed-document", e.to_string()))?;
    let config = Config {
        profile: req.profile.unwrap_or_else(|| Config::default().profile),
        seed: req.seed.unwrap_or(Config::default().seed),
        ..Config::default()
    };
    if app.lingware.profile(&config.profile).is_none() {
        return Err(PipelineError::UnknownProfile(config.profile).into());
    }
    let states: Vec<UtteranceState> = doc
        .utterances
        .into_iter()
        .enumerate()
        .map(|(i, u)| {
            let mut st = UtteranceState::new(utterance_id(i), u, config.clone());
            st.validation = Some(validate(&st.source.graph, &app.lingware.inventory));
            st
        })
        .collect();
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session {
        id: id.clone(),
        versions: vec![0; states.len()],
        states,
        policy: Policy::Always,
    };
    app.persist(&session)?;
    let views: Vec<UtteranceView> = (0..session.states.len()).map(|k| session.view(k)).collect();
    app.sessions
        .lock()
        .expect("session map lock")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({ "session": id, "utterances": views }))).into_response())
}

#[derive(Serialize)]
struct SessionView {
    session: String,
    policy: Policy,
    utterances: Vec<UtteranceView>,
}

fn session_view(s: &Session) -> SessionView {
    SessionView {
        session: s.id.clone(),
        policy: s.policy,
        utterances: (0..s.states.len()).map(|k| s.view(k)).collect(),
    }
}

async fn get_session(State(app): Shared, Path(s): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = app.session(&s)?;
    let session = session.lock().expect("session lock");
    Ok(Json(session_view(&session)))
}

/// Run every utterance that is not complete. Validation failures are
/// reported per utterance and turn the status into 422.
fn run_pending(app: &AppState, session: &mut Session) -> ApiResult<Response> {
    let counts = app.counts.snapshot();
    let mut failures = Vec::new();
    for k in 0..session.states.len() {
        if session.states[k].is_complete() {
            continue;
        }
        match session.states[k].run(&app.lingware, &counts, None) {
            Ok(()) => session.versions[k] += 1,
            Err(PipelineError::Invalid(report)) => failures.push(json!({ "id": session.states[k].id, "report": report })),
            Err(e) => return Err(e.into()),
        }
    }
    app.persist(session)?;
    let view = session_view(session);
    if failures.is_empty() {
        Ok(Json(view).into_response())
    } else {
        let body = json!({ "error": "invalid-graph", "message": "some utterances failed validation", "failures": failures, "session": view });
        Ok((StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response())
    }
}

async fn deconvert_all(State(app): Shared, Path(s): Path<String>) -> ApiResult<Response> {
    let session = app.session(&s)?;
    let mut session = session.lock().expect("session lock");
    run_pending(&app, &mut session)
}

async fn redeconvert(State(app): Shared, Path(s): Path<String>) -> ApiResult<Response> {
    deconvert_all(State(app), Path(s)).await
}

#[derive(Serialize)]
struct UtteranceDetail {
    #[serde(flatten)]
    view: UtteranceView,
    tokens: Vec<TokenTrace>,
}

async fn get_utterance(State(app): Shared, Path((s, u)): Path<(String, String)>) -> ApiResult<Json<UtteranceDetail>> {
    let session = app.session(&s)?;
    let session = session.lock().expect("session lock");
    let k = session.index(&u)?;
    Ok(Json(UtteranceDetail {
        view: session.view(k),
        tokens: trace_table(&session.states[k]),
    }))
}

#[derive(Serialize)]
struct TraceView {
    utterance: String,
    index: u32,
    chain: Vec<TraceLink>,
}

async fn trace(State(app): Shared, Path((s, u, i)): Path<(String, String, String)>) -> ApiResult<Json<TraceView>> {
    let i: u32 = i.parse().map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "malformed", "token index must be a number"))?;
    let session = app.session(&s)?;
    let session = session.lock().expect("session lock");
    let k = session.index(&u)?;
    let st = &session.states[k];
    if !st.is_complete() {
        return Err(PipelineError::Incomplete(unl_deconv::pipeline::Stage::Surface).into());
    }
    Ok(Json(TraceView {
        utterance: u,
        index: i,
        chain: resolve_trace(st, i),
    }))
}

fn node_id(n: &str) -> ApiResult<NodeId> {
    n.parse()
        .map(NodeId)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "malformed", "node id must be a number"))
}

#[derive(Deserialize)]
struct WidenQuery {
    widen: Option<bool>,
}

#[derive(Serialize)]
struct CandidatesView {
    node: u32,
    original: String,
    current: Option<String>,
    widen: bool,
    candidates: Vec<LuOption>,
}

async fn candidates(
    State(app): Shared,
    Path((s, u, n)): Path<(String, String, String)>,
    Query(q): Query<WidenQuery>,
) -> ApiResult<Json<CandidatesView>> {
    let node = node_id(&n)?;
    let session = app.session(&s)?;
    let session = session.lock().expect("session lock");
    let st = &session.states[session.index(&u)?];
    let widen = q.widen.unwrap_or(false);
    let list = lu_candidates(st, node, widen, &app.lingware)?;
    Ok(Json(CandidatesView {
        node: node.0,
        original: st.source.graph.node(node).map(|x| x.uw.to_string()).unwrap_or_default(),
        current: st.transfer_choices.iter().find(|c| c.node == node).and_then(|c| c.chosen.clone()),
        widen,
        candidates: list,
    }))
}

#[derive(Serialize)]
struct EditView {
    #[serde(flatten)]
    view: UtteranceView,
    regenerated: bool,
}

fn apply_edit(app: &AppState, s: &str, u: &str, version: Option<u64>, edit: Edit) -> ApiResult<Json<EditView>> {
    let session = app.session(s)?;
    let mut session = session.lock().expect("session lock");
    let k = session.index(u)?;
    session.check_version(k, version)?;
    let policy = session.policy;
    let regenerated = edit_and_redeconvert(&mut session.states[k], edit, policy, &app.lingware, &app.counts)?;
    session.versions[k] += 1;
    app.persist(&session)?;
    Ok(Json(EditView {
        view: session.view(k),
        regenerated,
    }))
}

#[derive(Deserialize)]
struct ChooseBody {
    lu: String,
    version: Option<u64>,
}

async fn choose(State(app): Shared, Path((s, u, n)): Path<(String, String, String)>, body: Bytes) -> ApiResult<Json<EditView>> {
    let node = node_id(&n)?;
    let req: ChooseBody = parse_body(&body)?;
    apply_edit(&app, &s, &u, req.version, Edit::ChooseLu { node, lu: req.lu })
}

#[derive(Deserialize)]
struct AttributeBody {
    name: String,
    value: String,
    level: AttrLevel,
    version: Option<u64>,
}

async fn attributes(State(app): Shared, Path((s, u, n)): Path<(String, String, String)>, body: Bytes) -> ApiResult<Json<EditView>> {
    let node = node_id(&n)?;
    let req: AttributeBody = parse_body(&body)?;
    let edit = Edit::SetAttribute {
        level: req.level,
        node,
        name: req.name,
        value: req.value,
    };
    apply_edit(&app, &s, &u, req.version, edit)
}

#[derive(Deserialize)]
struct ReplaceBody {
    from_lu: String,
    to_lu: String,
}

#[derive(Serialize)]
struct ReplaceView {
    #[serde(flatten)]
    report: ReplaceReport,
    utterances: Vec<UtteranceView>,
}

async fn replace(State(app): Shared, Path(s): Path<String>, body: Bytes) -> ApiResult<Json<ReplaceView>> {
    let req: ReplaceBody = parse_body(&body)?;
    let session = app.session(&s)?;
    let mut session = session.lock().expect("session lock");
    let report = global_replace(&mut session.states, &req.from_lu, &req.to_lu, &app.lingware, &app.counts)?;
    let mut utterances = Vec::new();
    for id in &report.changed {
        let k = session.index(id)?;
        session.versions[k] += 1;
        utterances.push(session.view(k));
    }
    app.persist(&session)?;
    Ok(Json(ReplaceView { report, utterances }))
}

async fn export(State(app): Shared, Path(s): Path<String>) -> ApiResult<Response> {
    let session = app.session(&s)?;
    let session = session.lock().expect("session lock");
    let text = export_document(&session.states, &app.lingware.inventory)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn set_policy(State(app): Shared, Path(s): Path<String>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let policy: Policy = parse_body(&body)?;
    if policy == Policy::EveryK(0) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed", "k must be at least 1"));
    }
    let session = app.session(&s)?;
    session.lock().expect("session lock").policy = policy;
    Ok(Json(json!({ "session": s, "policy": policy })))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{s}", get(get_session))
        .route("/sessions/{s}/deconvert", post(deconvert_all))
        .route("/sessions/{s}/redeconvert", post(redeconvert))
        .route("/sessions/{s}/replace", post(replace))
        .route("/sessions/{s}/export", get(export))
        .route("/sessions/{s}/policy", put(set_policy))
        .route("/sessions/{s}/utterances/{u}", get(get_utterance))
        .route("/sessions/{s}/utterances/{u}/tokens/{i}/trace", get(trace))
        .route("/sessions/{s}/utterances/{u}/nodes/{n}/candidates", get(candidates))
        .route("/sessions/{s}/utterances/{u}/nodes/{n}/choose", post(choose))
        .route("/sessions/{s}/utterances/{u}/nodes/{n}/attributes", post(attributes))
        .with_state(state)
}

/// Serve until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
