//! JSON-over-HTTP service: `POST /parse`, `POST /synthesize`, `GET /health`.

use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cpi_core::rational::parse_rational;
use cpi_core::Impact;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::{json, Number};
use tokio::sync::Semaphore;

use crate::run::{describe, load, report_json, synthesize, AppError, BoardStats, Engine};

#[derive(Clone)]
pub struct AppState {
    pub node_cap: usize,
    /// Caps simultaneous board constructions.
    pub permits: Arc<Semaphore>,
}

impl AppState {
    pub fn new(node_cap: usize, max_concurrent: usize) -> Self {
        AppState { node_cap, permits: Arc::new(Semaphore::new(max_concurrent.max(1))) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/parse", post(parse))
        .route("/synthesize", post(synthesize_route))
        .with_state(state)
}

pub async fn serve(port: u16, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    axum::serve(listener, router(state)).await
}

struct ApiError(StatusCode, serde_json::Value);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, json!({ "kind": "request", "message": message.into() }))
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Parse(p) => ApiError(StatusCode::BAD_REQUEST, serde_json::to_value(p).expect("errors serialize")),
            AppError::Invalid(m) => ApiError(StatusCode::BAD_REQUEST, json!({ "kind": "invalid", "message": m })),
            AppError::Budget(m) => ApiError(StatusCode::PAYLOAD_TOO_LARGE, json!({ "kind": "budget", "message": m })),
            AppError::Disagreement(m) => {
                ApiError(StatusCode::INTERNAL_SERVER_ERROR, json!({ "kind": "disagreement", "message": m }))
            }
        }
    }
}

fn decode<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    if body.is_empty() {
        return Err(bad_request("empty request body"));
    }
    serde_json::from_slice(body).map_err(|e| bad_request(e.to_string()))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
struct ParseRequest {
    text: String,
}

async fn parse(body: Bytes) -> Result<Response, ApiError> {
    let req: ParseRequest = decode(&body)?;
    let loaded = load(&req.text)?;
    Ok(Json(describe(&loaded)).into_response())
}

/// Bound components may be JSON numbers or strings such as `"1/3"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum BoundValue {
    Number(Number),
    Text(String),
}

#[derive(Deserialize)]
struct SynthesizeRequest {
    text: String,
    bound: Vec<BoundValue>,
    #[serde(default)]
    engine: Engine,
    node_cap: Option<usize>,
}

#[derive(Serialize)]
struct SynthesizeResponse {
    strategy: Box<RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<BoardStats>,
    wall_time_ms: f64,
}

fn bound_of(values: &[BoundValue]) -> Result<Impact, ApiError> {
    values
        .iter()
        .map(|v| {
            let text = match v {
                BoundValue::Number(n) => n.to_string(),
                BoundValue::Text(s) => s.clone(),
            };
            parse_rational(text.trim()).map_err(|e| bad_request(format!("bound component `{text}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Impact::new)
}

async fn synthesize_route(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: SynthesizeRequest = decode(&body)?;
    let bound = bound_of(&req.bound)?;
    let node_cap = req.node_cap.map_or(state.node_cap, |c| c.min(state.node_cap));
    let _permit = state.permits.clone().acquire_owned().await.expect("semaphore is never closed");
    let started = Instant::now();
    let outcome = tokio::task::spawn_blocking(move || {
        let loaded = load(&req.text)?;
        synthesize(&loaded, &bound, req.engine, node_cap)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, json!({ "kind": "internal", "message": e.to_string() })))??;
    let response = SynthesizeResponse {
        strategy: RawValue::from_string(report_json(&outcome.report)).expect("report is valid JSON"),
        stats: outcome.stats,
        wall_time_ms: started.elapsed().as_secs_f64() * 1000.0,
    };
    Ok(Json(response).into_response())
}
