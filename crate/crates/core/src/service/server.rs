use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::actions::{apply, Action};
use super::api_error::ApiError;
use super::store::{valid_session_id, SessionStore};
use super::view::SessionView;
use crate::engine::{Engine, GameSession, Theme};

/// Shared state of a running service.
#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    store: Arc<SessionStore>,
    // one queue per session: writers to the same session take turns
    locks: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, store: SessionStore) -> Self {
        Self { engine, store: Arc::new(store), locks: Arc::default() }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().expect("lock table poisoned").entry(id.to_string()).or_default().clone()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/sessions/{id}/turn", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, |b| Action::empty_body(b, Action::Turn))))
        .route("/sessions/{id}/choice", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, Action::choice_body)))
        .route("/sessions/{id}/collect", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, Action::collect_body)))
        .route("/sessions/{id}/advance", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, |b| Action::empty_body(b, Action::Advance))))
        .route("/sessions/{id}/defense", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, |b| Action::empty_body(b, Action::Defense))))
        .route("/sessions/{id}/defense/answer", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, Action::answer_body)))
        .route("/sessions/{id}/defense/hint", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, Action::hint_body)))
        .route("/sessions/{id}/defense/fifty", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, Action::fifty_body)))
        .route("/sessions/{id}/ask-term", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, Action::ask_term_body)))
        .route("/sessions/{id}/ask-book", post(|s: State<AppState>, p: Path<String>, b: Bytes| act(s, p, b, Action::ask_book_body)))
        .route("/sessions/{id}/review/{day}", get(review))
        .route("/sessions/{id}/image/{day}", get(image))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

/// Runs blocking engine and store work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn check_id(id: &str) -> ApiResult<()> {
    if valid_session_id(id) {
        Ok(())
    } else {
        Err(ApiError::not_found(format!("session {id:?} not found")))
    }
}

fn parse_day(raw: &str) -> ApiResult<u32> {
    raw.parse().map_err(|_| ApiError::bad_request(format!("day {raw:?} is not a number")))
}

fn view(state: &AppState, s: &GameSession) -> SessionView {
    SessionView::new(s, state.engine.config())
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let chunks = state.engine.index().map(|i| i.chunks().len()).ok();
    Json(json!({ "status": if chunks.is_some() { "ok" } else { "not_ready" }, "backend": state.engine.gateway().backend().name(), "chunks": chunks }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    id: Option<String>,
    seed: Option<u64>,
    theme: Option<String>,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let text = if body.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { &body[..] };
    let b: CreateBody = serde_json::from_slice(text).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
    let theme = b.theme.as_deref().map(str::parse::<Theme>).transpose().map_err(ApiError::bad_request)?;
    let id = b.id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    if !valid_session_id(&id) {
        return Err(ApiError::bad_request("session ids use 1-64 letters, digits, '-' or '_'"));
    }
    let seed = b.seed.unwrap_or_else(rand::random);
    let lock = state.lock_for(&id);
    let _guard = lock.lock().await;
    let st = state.clone();
    let v = blocking(move || {
        if st.store.exists(&id) {
            return Err(ApiError::session_exists(&id));
        }
        let s = st.engine.new_session(id, seed, theme)?;
        st.store.save(&s)?;
        Ok(view(&st, &s))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(v)).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    check_id(&id)?;
    let st = state.clone();
    blocking(move || Ok(Json(view(&st, &st.store.load(&id)?)))).await
}

async fn get_transcript(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    check_id(&id)?;
    let st = state.clone();
    let s = blocking(move || Ok(st.store.load(&id)?)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], s.transcript_json()).into_response())
}

/// Loads, applies and saves under the session's queue. The session is saved
/// whenever it changed, also when the action failed part-way (usage of a
/// failed turn is still billed).
async fn act(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
    parse: impl FnOnce(&[u8]) -> ApiResult<Action>,
) -> ApiResult<Json<Value>> {
    check_id(&id)?;
    let action = parse(&body)?;
    let lock = state.lock_for(&id);
    let _guard = lock.lock().await;
    let st = state.clone();
    blocking(move || {
        let before = st.store.load(&id)?;
        let mut s = before.clone();
        let outcome = apply(&st.engine, &mut s, action);
        if s != before {
            st.store.save(&s)?;
        }
        let result = outcome?;
        Ok(Json(json!({ "result": result, "session": view(&st, &s) })))
    })
    .await
}

async fn review(State(state): State<AppState>, Path((id, day)): Path<(String, String)>) -> ApiResult<Json<Value>> {
    check_id(&id)?;
    let day = parse_day(&day)?;
    let st = state.clone();
    blocking(move || {
        let s = st.store.load(&id)?;
        let turn = st.engine.review_day(&s, day)?;
        let url = super::view::image_url(&s.id, day);
        let mut v = json!(turn);
        v["image_url"] = json!(url);
        Ok(Json(v))
    })
    .await
}

async fn image(State(state): State<AppState>, Path((id, day)): Path<(String, String)>) -> ApiResult<Response> {
    check_id(&id)?;
    let day = parse_day(&day)?;
    let st = state.clone();
    let png = blocking(move || {
        let s = st.store.load(&id)?;
        let turn = s.turns.iter().find(|t| t.day == day).ok_or_else(|| ApiError::not_found(format!("no image for day {day}")))?;
        st.engine.images().get(&turn.image.digest).ok_or_else(|| ApiError::not_found(format!("image {} is not cached", turn.image.digest)))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "public, max-age=31536000, immutable")], png).into_response())
}

/// Serves until the listener fails or `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
