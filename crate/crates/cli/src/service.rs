//! HTTP surface over a hot-swappable pipeline snapshot.
//!
//! Handlers clone the current `Arc<Pipeline>` and drop the lock before doing
//! any work, so a reload never blocks on in-flight requests and those requests
//! finish on the graph they started with.

use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use isabel_core::{render_json, InteractionLog, Pipeline, PipelineError};
use serde::Deserialize;
use serde_json::json;

use crate::config::{LoadError, ServiceConfig};

pub struct AppState {
    snapshot: RwLock<Option<Arc<Pipeline>>>,
    log: Option<Arc<InteractionLog>>,
    config: ServiceConfig,
}

impl AppState {
    /// State with nothing loaded yet; health reports 503 until a reload.
    pub fn new(config: ServiceConfig) -> Self {
        let log = config.log_path.clone().map(|p| Arc::new(InteractionLog::new(p)));
        Self {
            snapshot: RwLock::new(None),
            log,
            config,
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn current(&self) -> Option<Arc<Pipeline>> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    pub fn install(&self, pipeline: Pipeline) {
        *self.snapshot.write().expect("snapshot lock poisoned") = Some(Arc::new(pipeline));
    }

    /// Build a fresh pipeline from the configured paths and swap it in. On
    /// failure the previous snapshot stays active.
    pub fn reload(&self) -> Result<Arc<Pipeline>, LoadError> {
        let fresh = Arc::new(self.config.load_pipeline()?);
        *self.snapshot.write().expect("snapshot lock poisoned") = Some(fresh.clone());
        Ok(fresh)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/link", post(link))
        .route("/v1/packages", get(packages))
        .route("/v1/health", get(health))
        .route("/v1/reload", post(reload))
        .with_state(state)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRequest {
    text: String,
}

fn json_body(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    json_body(status, json!({ "error": message.to_string() }).to_string())
}

fn not_loaded() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "knowledge graph not loaded")
}

async fn link(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let Ok(body) = std::str::from_utf8(&body) else {
        return error(StatusCode::UNPROCESSABLE_ENTITY, "request body is not valid UTF-8");
    };
    let request: LinkRequest = match serde_json::from_str(body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    let Some(pipeline) = state.current() else {
        return not_loaded();
    };
    let log = state.log.clone();
    let outcome =
        tokio::task::spawn_blocking(move || pipeline.run_logged(&request.text, log.as_deref())).await;
    match outcome {
        Ok(Ok(result)) => json_body(StatusCode::OK, render_json(&result)),
        Ok(Err(e @ PipelineError::InputTooLong { .. })) => error(StatusCode::PAYLOAD_TOO_LARGE, e),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn packages(State(state): State<Arc<AppState>>) -> Response {
    let Some(pipeline) = state.current() else {
        return not_loaded();
    };
    let list: Vec<_> = pipeline.knowledge_graph().packages().collect();
    let mut body = serde_json::to_string_pretty(&list).expect("packages serialize");
    body.push('\n');
    json_body(StatusCode::OK, body)
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    match state.current() {
        None => json_body(
            StatusCode::SERVICE_UNAVAILABLE,
            json!({ "status": "loading" }).to_string(),
        ),
        Some(p) => {
            let kg = p.knowledge_graph();
            json_body(
                StatusCode::OK,
                json!({
                    "status": "ok",
                    "entities": kg.entity_count(),
                    "packages": kg.packages().count(),
                })
                .to_string(),
            )
        }
    }
}

async fn reload(State(state): State<Arc<AppState>>) -> Response {
    let swapped = tokio::task::spawn_blocking(move || state.reload()).await;
    match swapped {
        Ok(Ok(p)) => json_body(
            StatusCode::OK,
            json!({
                "status": "reloaded",
                "entities": p.knowledge_graph().entity_count(),
                "packages": p.knowledge_graph().packages().count(),
            })
            .to_string(),
        ),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Reload on SIGHUP for as long as the process lives.
#[cfg(unix)]
pub fn reload_on_sighup(state: Arc<AppState>) -> std::io::Result<()> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut hangups = signal(SignalKind::hangup())?;
    tokio::spawn(async move {
        while hangups.recv().await.is_some() {
            let state = state.clone();
            match tokio::task::spawn_blocking(move || state.reload()).await {
                Ok(Ok(_)) => eprintln!("reloaded knowledge graph"),
                Ok(Err(e)) => eprintln!("reload failed, keeping previous graph: {e}"),
                Err(e) => eprintln!("reload task failed: {e}"),
            }
        }
    });
    Ok(())
}

#[cfg(not(unix))]
pub fn reload_on_sighup(_state: Arc<AppState>) -> std::io::Result<()> {
    Ok(())
}
