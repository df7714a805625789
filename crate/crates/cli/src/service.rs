//! JSON-over-HTTP reward, parse and metrics service.
//!
//! Handlers are pure functions of the request body and the process-wide
//! [`RewardConfig`], so responses do not depend on request order or
//! concurrency.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use msti_core::metrics::{msti_evaluate, MetricsError, MstiReport};
use msti_core::rewards::RewardError;
use msti_core::{parse_response, score_group, ParsedResponse, RewardConfig, RewardVector, Sample};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config_file::merge_reward_overrides;
use crate::VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardItem {
    pub ground_truth: Sample,
    pub completions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardRequest {
    /// Partial reward configuration applied on top of the service default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
    pub items: Vec<RewardItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardItemResult {
    pub rewards: Vec<RewardVector>,
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardResponse {
    pub version: String,
    pub items: Vec<RewardItemResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParseRequest {
    pub completion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub id: String,
    pub completion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRequest {
    pub predictions: Vec<Prediction>,
    pub references: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

/// Structured error body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error_code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn client(code: &str, message: impl Into<String>, detail: Value) -> Self {
        ApiError { status: 400, error_code: code.into(), message: message.into(), detail }
    }

    pub fn internal() -> Self {
        ApiError { status: 500, error_code: "Internal".into(), message: "internal error".into(), detail: Value::Null }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json_response(status, &self)
    }
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match serde_json::to_vec(body) {
        Ok(bytes) => (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => {
            tracing::error!("response serialization failed: {e}");
            let fallback = br#"{"error_code":"Internal","message":"internal error","detail":null}"#.to_vec();
            (StatusCode::INTERNAL_SERVER_ERROR, [(header::CONTENT_TYPE, "application/json")], fallback).into_response()
        }
    }
}

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        let code = if e.is_syntax() || e.is_eof() { "InvalidJson" } else { "InvalidRequest" };
        ApiError::client(code, e.to_string(), serde_json::json!({"line": e.line(), "column": e.column()}))
    })
}

/// Scores every item of a reward request under `base` plus any overrides.
pub fn handle_reward(base: &RewardConfig, req: &RewardRequest) -> Result<RewardResponse, ApiError> {
    let cfg = match &req.config {
        None => base.clone(),
        Some(overrides) => {
            let cfg = merge_reward_overrides(base, overrides)
                .map_err(|e| ApiError::client("InvalidConfig", e, overrides.clone()))?;
            tracing::info!(overrides = %overrides, "reward request overrides the service config");
            cfg
        }
    };
    if req.items.is_empty() {
        return Err(ApiError::client("EmptyRequest", "items must not be empty", Value::Null));
    }
    let g = req.items[0].completions.len();
    for (i, item) in req.items.iter().enumerate() {
        let n = item.completions.len();
        if n < 2 {
            return Err(ApiError::client(
                "GroupTooSmall",
                format!("item {i} has {n} completion(s); at least 2 are required"),
                serde_json::json!({"item": i, "completions": n}),
            ));
        }
        if n != g {
            return Err(ApiError::client(
                "InconsistentGroupSize",
                format!("item {i} has {n} completions, item 0 has {g}"),
                serde_json::json!({"item": i, "completions": n, "expected": g}),
            ));
        }
        item.ground_truth
            .check_label_consistency()
            .map_err(|e| ApiError::client("InvalidSample", e.to_string(), serde_json::json!({"item": i, "field": e.field()})))?;
    }
    let items = req
        .items
        .iter()
        .map(|item| match score_group(&item.completions, &item.ground_truth, &cfg) {
            Ok(s) => Ok(RewardItemResult { rewards: s.rewards, advantages: s.scores.advantages }),
            Err(RewardError::GroupTooSmall(n)) => {
                Err(ApiError::client("GroupTooSmall", format!("{n} completions"), Value::Null))
            }
            Err(e) => {
                tracing::error!("scoring failed: {e}");
                Err(ApiError::internal())
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RewardResponse { version: VERSION.to_string(), items })
}

pub fn handle_parse(req: &ParseRequest) -> ParsedResponse {
    parse_response(&req.completion)
}

pub fn handle_metrics(req: &MetricsRequest) -> Result<MstiReport, ApiError> {
    let preds: Vec<(String, ParsedResponse)> =
        req.predictions.iter().map(|p| (p.id.clone(), parse_response(&p.completion))).collect();
    msti_evaluate(&preds, &req.references).map_err(|e| {
        let code = match e {
            MetricsError::LengthMismatch { .. } | MetricsError::IdMismatch(_) => "IdMismatch",
            MetricsError::Empty => "EmptyRequest",
            _ => "InvalidRequest",
        };
        ApiError::client(code, e.to_string(), Value::Null)
    })
}

type Shared = Arc<RewardConfig>;

async fn reward(State(cfg): State<Shared>, body: Bytes) -> Response {
    match decode::<RewardRequest>(&body).and_then(|req| handle_reward(&cfg, &req)) {
        Ok(r) => json_response(StatusCode::OK, &r),
        Err(e) => e.into_response(),
    }
}

async fn parse(body: Bytes) -> Response {
    match decode::<ParseRequest>(&body) {
        Ok(req) => json_response(StatusCode::OK, &handle_parse(&req)),
        Err(e) => e.into_response(),
    }
}

async fn metrics(body: Bytes) -> Response {
    match decode::<MetricsRequest>(&body).and_then(|req| handle_metrics(&req)) {
        Ok(r) => json_response(StatusCode::OK, &r),
        Err(e) => e.into_response(),
    }
}

async fn healthz() -> Response {
    json_response(StatusCode::OK, &Health { status: "ok".into(), version: VERSION.into() })
}

async fn not_found() -> Response {
    ApiError { status: 404, error_code: "NotFound".into(), message: "no such route".into(), detail: Value::Null }
        .into_response()
}

pub fn router(cfg: RewardConfig) -> Router {
    Router::new()
        .route("/v1/reward", post(reward))
        .route("/v1/parse", post(parse))
        .route("/v1/metrics", post(metrics))
        .route("/healthz", get(healthz))
        .fallback(not_found)
        .with_state(Arc::new(cfg))
}

/// Binds `addr` and serves until the future is dropped or ctrl-c arrives.
pub async fn serve(addr: SocketAddr, cfg: RewardConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, version = VERSION, "serving");
    axum::serve(listener, router(cfg))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
