//! HTTP/JSON sessions over the kernel: stepwise derivation with undo, live
//! boundaries and detour reduction.
//!
//! Sessions live in memory. Each one is behind its own lock, so mutations of
//! a session are totally ordered while other sessions proceed independently.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use scrollnet::correctness::{verdict, Verdict};
use scrollnet::derivation::{apply, enumerate_applicable};
use scrollnet::detour::{find_detours, reduce_detour, DetourKind, DetourReport};
use scrollnet::net::{NetJson, Side};
use scrollnet::structure::StructureJson;
use scrollnet::{stlc, Error, EditState, NodeId, ScrollNet, ScrollStructure, Step, Trace};

/// How a session started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Structure,
    Net,
    Stlc,
}

/// One entry of a session script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Apply(Step),
    Reduce(DetourReport),
}

pub struct Session {
    pub id: String,
    pub origin: Origin,
    pub start: ScrollNet,
    pub current: ScrollNet,
    history: Vec<(Action, ScrollNet)>,
}

impl Session {
    pub fn script(&self) -> Vec<Action> {
        self.history.iter().map(|(a, _)| a.clone()).collect()
    }
}

/// Runs a session script against its starting net.
pub fn run_script(start: &ScrollNet, script: &[Action]) -> scrollnet::Result<ScrollNet> {
    let mut n = start.clone();
    for a in script {
        n = match a {
            Action::Apply(st) => apply(&n, st)?,
            Action::Reduce(d) => reduce_detour(&n, d)?,
        };
    }
    Ok(n)
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
    next: AtomicU64,
}

type Shared = Arc<AppState>;

pub fn router() -> Router {
    router_with(Arc::default())
}

pub fn router_with(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/boundaries", get(boundaries))
        .route("/sessions/{id}/applicable", get(applicable))
        .route("/sessions/{id}/apply", post(apply_step))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/detours", get(detours))
        .route("/sessions/{id}/reduce", post(reduce))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/correct", get(correct))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves on 127.0.0.1 until the process is stopped.
pub async fn serve(port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    axum::serve(listener, router()).await
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": msg.into() }) }
    }

    fn conflict(premiss: &str, msg: impl Into<String>) -> Self {
        ApiError { status: StatusCode::CONFLICT, body: json!({ "error": msg.into(), "premiss": premiss }) }
    }

    fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, what)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::UnknownNode(_) => ApiError::not_found(msg),
            Error::Rule(r) | Error::Replay { source: r, .. } => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": msg, "rule": r.rule, "premiss": r.premiss, "detail": r.detail }),
            },
            Error::Detour(_) => ApiError::conflict("reducible", msg),
            Error::Syntax { .. }
            | Error::Schema { .. }
            | Error::InvalidStructure(_)
            | Error::InvalidNet(_)
            | Error::Type(_)
            | Error::Fragment(_) => ApiError::new(StatusCode::BAD_REQUEST, msg),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T = Json<Value>> = Result<T, ApiError>;

/// A JSON body whose decoding errors are reported as 400 with the path.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        Ok(Body(scrollnet::json::from_str(text)?))
    }
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<RwLock<Session>>> {
    let map = state.sessions.read().expect("session map lock");
    map.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
}

fn known(n: &ScrollNet, v: &NodeId) -> ApiResult<()> {
    if n.structure().contains(v) {
        Ok(())
    } else {
        Err(Error::UnknownNode(v.clone()).into())
    }
}

fn view(s: &Session) -> Value {
    json!({
        "id": s.id,
        "origin": s.origin,
        "net": s.current.without_certificate().to_json(),
        "editState": s.current.edit_state().unwrap_or_else(|_| EditState::default()),
        "valid": s.current.is_valid(),
        "history": s.script(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum NewSession {
    Structure(Value),
    Net(Box<NetJson>),
    Stlc(String),
}

async fn create(State(state): State<Shared>, Body(req): Body<NewSession>) -> ApiResult<(StatusCode, Json<Value>)> {
    let (origin, start) = match req {
        NewSession::Structure(Value::String(text)) => {
            let s = ScrollStructure::parse(&text)?;
            (Origin::Structure, certified_start(s)?)
        }
        NewSession::Structure(raw) => {
            let s = ScrollStructure::from_json(scrollnet::json::from_value::<StructureJson>(raw)?)?;
            (Origin::Structure, certified_start(s)?)
        }
        NewSession::Net(raw) => (Origin::Net, ScrollNet::from_json(*raw)?),
        NewSession::Stlc(src) => {
            let (ctx, t) = stlc::parse_judgment(&src)?;
            (Origin::Stlc, stlc::translate(&ctx, &t)?)
        }
    };
    let report = start.validate();
    if !report.is_ok() {
        return Err(Error::InvalidNet(report).into());
    }
    let id = format!("s{}", state.next.fetch_add(1, Ordering::Relaxed) + 1);
    let s = Session { id: id.clone(), origin, start: start.clone(), current: start, history: Vec::new() };
    let body = view(&s);
    state.sessions.write().expect("session map lock").insert(id, Arc::new(RwLock::new(s)));
    Ok((StatusCode::CREATED, Json(body)))
}

fn certified_start(s: ScrollStructure) -> scrollnet::Result<ScrollNet> {
    let report = s.validate();
    if !report.is_ok() {
        return Err(Error::InvalidStructure(report));
    }
    let mut n = ScrollNet::new(s.clone());
    n.set_certificate(Some(Trace::new(s, Vec::new())));
    Ok(n)
}

async fn show(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let s = s.read().expect("session lock");
    Ok(Json(view(&s)))
}

fn side(n: &ScrollNet, which: Side) -> scrollnet::Result<Value> {
    let b = n.boundary(which)?;
    Ok(json!({
        "structure": b.to_json(),
        "text": b.to_text().ok(),
        "formula": b.interpret().ok().map(|f| f.to_string()),
    }))
}

async fn boundaries(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let s = s.read().expect("session lock");
    Ok(Json(json!({
        "premiss": side(&s.current, Side::Premiss)?,
        "conclusion": side(&s.current, Side::Conclusion)?,
    })))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ApplicableQuery {
    node: Option<NodeId>,
    payload_bound: Option<usize>,
}

async fn applicable(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ApplicableQuery>,
) -> ApiResult {
    let s = session(&state, &id)?;
    let s = s.read().expect("session lock");
    if let Some(v) = &q.node {
        known(&s.current, v)?;
    }
    let steps = enumerate_applicable(&s.current, q.node.as_ref(), q.payload_bound.unwrap_or(1))?;
    Ok(Json(json!({ "steps": steps })))
}

async fn apply_step(State(state): State<Shared>, Path(id): Path<String>, Body(step): Body<Step>) -> ApiResult {
    let s = session(&state, &id)?;
    let mut s = s.write().expect("session lock");
    for v in step.references() {
        known(&s.current, v)?;
    }
    let next = apply(&s.current, &step)?;
    let prev = std::mem::replace(&mut s.current, next);
    s.history.push((Action::Apply(step), prev));
    Ok(Json(view(&s)))
}

async fn undo(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let mut s = s.write().expect("session lock");
    let (_, prev) = s.history.pop().ok_or_else(|| ApiError::conflict("history", "nothing to undo"))?;
    s.current = prev;
    Ok(Json(view(&s)))
}

async fn detours(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let s = s.read().expect("session lock");
    Ok(Json(json!({ "detours": find_detours(&s.current)? })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReduceRequest {
    node: NodeId,
    #[serde(default)]
    kind: Option<DetourKind>,
}

async fn reduce(State(state): State<Shared>, Path(id): Path<String>, Body(req): Body<ReduceRequest>) -> ApiResult {
    let s = session(&state, &id)?;
    let mut s = s.write().expect("session lock");
    known(&s.current, &req.node)?;
    let d = find_detours(&s.current)?
        .into_iter()
        .find(|d| d.node == req.node && req.kind.is_none_or(|k| k == d.kind))
        .ok_or_else(|| ApiError::conflict("detour", format!("no detour at `{}`", req.node)))?;
    let next = reduce_detour(&s.current, &d)?;
    let prev = std::mem::replace(&mut s.current, next);
    s.history.push((Action::Reduce(d), prev));
    Ok(Json(view(&s)))
}

async fn export(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let s = s.read().expect("session lock");
    Ok(Json(json!({
        "origin": s.origin,
        "start": s.start.to_json(),
        "script": s.script(),
        "net": s.current.to_json(),
    })))
}

async fn correct(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let n = s.read().expect("session lock").current.clone();
    let v = tokio::task::spawn_blocking(move || verdict(&n))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(match v {
        Verdict::Correct(t) => json!({ "correct": true, "trace": t.to_json() }),
        Verdict::Incorrect(why) => json!({ "correct": false, "reason": why }),
        Verdict::Unknown => json!({ "correct": null, "reason": "sequentialization budget exhausted" }),
    }))
}
