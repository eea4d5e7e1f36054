use std::collections::HashMap;
use std::net::SocketAddr;
use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::sync::oneshot;
use uuid::Uuid;

use robobench_core::Track;

use crate::app::{Service, SubmitError};
use crate::config::ServiceConfig;
use crate::error::{Result, ServiceError};

struct ApiError(StatusCode, serde_json::Value);

impl ApiError {
    fn new(status: StatusCode, msg: impl ToString) -> Self {
        ApiError(status, json!({ "error": msg.to_string() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<SubmitError> for ApiError {
    fn from(e: SubmitError) -> Self {
        let status = match &e {
            SubmitError::UnknownTrack(_) => StatusCode::NOT_FOUND,
            SubmitError::Invalid { record, message } => {
                return ApiError(StatusCode::BAD_REQUEST, json!({ "error": message, "record": record }));
            }
            SubmitError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            SubmitError::RateLimited { .. } => StatusCode::TOO_MANY_REQUESTS,
            SubmitError::Internal(ServiceError::Shutdown) => StatusCode::SERVICE_UNAVAILABLE,
            SubmitError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e)
    }
}

fn track(service: &Service, name: &str) -> std::result::Result<Track, ApiError> {
    Track::from_str(name)
        .ok()
        .filter(|t| service.has_track(*t))
        .ok_or_else(|| SubmitError::UnknownTrack(name.to_string()).into())
}

pub fn router(service: Arc<Service>) -> Router {
    let limit = service.config().max_upload_bytes;
    Router::new()
        .route("/api/v1/healthz", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/api/v1/tracks/{track}/submissions", post(submit))
        .route("/api/v1/tracks/{track}/leaderboard", get(leaderboard))
        .route("/api/v1/submissions/{id}", get(status))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(service)
}

async fn submit(
    State(service): State<Arc<Service>>,
    Path(name): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> std::result::Result<impl IntoResponse, ApiError> {
    let track = track(&service, &name)?;
    let text = String::from_utf8(body.to_vec()).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))?;
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    let submitted = service.submit(track, text, token).await?;
    Ok((StatusCode::ACCEPTED, Json(submitted)))
}

async fn status(State(service): State<Arc<Service>>, Path(id): Path<String>) -> std::result::Result<impl IntoResponse, ApiError> {
    let id = Uuid::parse_str(&id).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("bad submission id: {e}")))?;
    service
        .get(&id)
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no submission {id}")))
}

async fn leaderboard(
    State(service): State<Arc<Service>>,
    Path(name): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> std::result::Result<Response, ApiError> {
    let lb = service.leaderboard(track(&service, &name)?)?;
    Ok(match q.get("format").map(String::as_str) {
        None | Some("json") => Json(lb).into_response(),
        Some("csv") => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], lb.to_csv()).into_response(),
        Some("markdown") => ([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], lb.to_markdown()).into_response(),
        Some(f) => return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("unknown format `{f}`"))),
    })
}

async fn serve_on(service: Arc<Service>, listener: tokio::net::TcpListener, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| ServiceError::io("<listener>", e))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| ServiceError::io("<runtime>", e))
}

async fn bind(addr: SocketAddr) -> Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await.map_err(|e| ServiceError::io(format!("<bind {addr}>"), e))
}

/// Serve until ctrl-c or SIGTERM. Prints `listening on <addr>` once bound.
pub fn run(config: ServiceConfig) -> Result<()> {
    let service = Service::start(config)?;
    let rt = runtime()?;
    let result = rt.block_on(async {
        let listener = bind(service.config().bind).await?;
        let addr = listener.local_addr().map_err(|e| ServiceError::io("<listener>", e))?;
        println!("listening on {addr}");
        use std::io::Write;
        let _ = std::io::stdout().flush();
        serve_on(service.clone(), listener, shutdown_signal()).await
    });
    service.shutdown();
    result
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// A server running on a background thread.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub service: Arc<Service>,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<Result<()>>>,
}

impl ServerHandle {
    /// Shut down gracefully and wait for in-flight requests and workers.
    pub fn stop(mut self) -> Result<()> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        let result = match self.thread.take() {
            Some(t) => t.join().unwrap_or(Err(ServiceError::Shutdown)),
            None => Ok(()),
        };
        self.service.shutdown();
        result
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}

/// Start the service and serve it on `config.bind` from a background thread.
pub fn spawn(config: ServiceConfig) -> Result<ServerHandle> {
    let service = Service::start(config)?;
    let rt = runtime()?;
    let listener = rt.block_on(bind(service.config().bind))?;
    let addr = listener.local_addr().map_err(|e| ServiceError::io("<listener>", e))?;
    let (stop, stopped) = oneshot::channel::<()>();
    let svc = service.clone();
    let thread = std::thread::Builder::new()
        .name("http".into())
        .spawn(move || {
            rt.block_on(serve_on(svc, listener, async {
                let _ = stopped.await;
            }))
        })
        .map_err(|e| ServiceError::io("<thread>", e))?;
    Ok(ServerHandle { addr, service, stop: Some(stop), thread: Some(thread) })
}
