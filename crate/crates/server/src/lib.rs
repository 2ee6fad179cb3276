//! HTTP API over the validation store and the scoring engine.
//!
//! | route | method | success | errors |
//! |---|---|---|---|
//! | `/api/health` | GET | 200 | |
//! | `/api/ingest/snapshot` | POST | 201 (200 on idempotent replay) | 400, 409 |
//! | `/api/graph/versions` | GET | 200 | |
//! | `/api/graph/snapshot` | GET | 200 | 400, 404 |
//! | `/api/score/report` | GET | 200 | 400, 404, 503 |
//! | `/api/review/queue` | GET | 200 | |
//! | `/api/review/{id}/decision` | POST | 200 | 400, 404, 409 |
//! | `/api/validation/settings` | GET, PUT | 200 | 400 |
//! | `/api/validation/stats` | GET | 200 | |
//!
//! Bodies are JSON (`application/json`). Errors are
//! `{"error": {"code", "message"}}`; with a bearer token configured every
//! `/api` route except health answers 401 without it.

pub mod error;
pub mod views;

use std::sync::Arc;

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tracing::info;

use pqready_core::graph::ValidationStatus;
use pqready_core::snapshot::parse_snapshot;
use pqready_core::{score, AttributionMethod, ExposureReport, Mode, ScoringConfig};
use pqready_validation::store::IngestReceipt;
use pqready_validation::{pipeline_stats, HumanDecision, ItemId, Store, ValidationItem, ValidationSettings};

pub use error::{ApiError, ErrorCode};
use views::{chokepoint_view, heatmap_view, service_mesh_view, validation_status_view, GraphView, ViewKind};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    /// Static bearer token; `None` disables auth.
    pub bearer_token: Option<String>,
    /// Scoring runs allowed at once; further requests wait.
    pub scoring_workers: usize,
    /// Default `N` for the chokepoint view.
    pub chokepoint_min_paths: usize,
    /// Path enumeration cap handed to the exact backend.
    pub path_cap: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bearer_token: None,
            scoring_workers: 2,
            chokepoint_min_paths: 2,
            path_cap: ScoringConfig::default().path_cap,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Store,
    pub config: Arc<ServerConfig>,
    scoring: Arc<Semaphore>,
}

impl AppState {
    pub fn new(store: Store, config: ServerConfig) -> Self {
        let workers = config.scoring_workers.max(1);
        Self {
            store,
            config: Arc::new(config),
            scoring: Arc::new(Semaphore::new(workers)),
        }
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/ingest/snapshot", post(ingest_snapshot))
        .route("/graph/versions", get(list_versions))
        .route("/graph/snapshot", get(graph_snapshot))
        .route("/score/report", get(score_report))
        .route("/review/queue", get(review_queue))
        .route("/review/{id}/decision", post(review_decision))
        .route("/validation/settings", get(get_settings).put(put_settings))
        .route("/validation/stats", get(stats))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_bearer));
    Router::new()
        .route("/api/health", get(|| async { Json(serde_json::json!({ "status": "ok" })) }))
        .nest("/api", api)
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    info!(addr = ?listener.local_addr()?, "api listening");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

async fn require_bearer(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.config.bearer_token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::new(ErrorCode::Unauthorized, "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

async fn ingest_snapshot(State(state): State<AppState>, headers: HeaderMap, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let doc = parse_snapshot(&body)?;
    let key = headers.get(IDEMPOTENCY_HEADER).map(|v| v.to_str().map_err(|_| ApiError::invalid("idempotency key is not ASCII"))).transpose()?;
    let receipt: IngestReceipt = state.store.ingest_snapshot(&doc, key, Utc::now())?;
    let status = if receipt.replayed { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(receipt)).into_response())
}

async fn list_versions(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.store.versions())
}

#[derive(Debug, Default, Deserialize)]
struct ViewQuery {
    version: Option<u64>,
    #[serde(default)]
    view: ViewKind,
    status: Option<String>,
    min_paths: Option<usize>,
}

async fn graph_snapshot(State(state): State<AppState>, query: Result<Query<ViewQuery>, axum::extract::rejection::QueryRejection>) -> Result<Json<GraphView>, ApiError> {
    let Query(q) = query?;
    let (version, graph) = state.store.graph(q.version)?;
    let status = q
        .status
        .as_deref()
        .map(|s| ValidationStatus::parse(s).ok_or_else(|| ApiError::invalid(format!("unknown validation status {s:?}"))))
        .transpose()?;
    let (nodes, edges, summary) = match q.view {
        ViewKind::ValidationStatus => validation_status_view(&graph, status),
        ViewKind::PqHeatmap => heatmap_view(&graph),
        ViewKind::ServiceMesh => service_mesh_view(&graph),
        ViewKind::VpnChokepoints => {
            let n = q.min_paths.unwrap_or(state.config.chokepoint_min_paths);
            let cfg = scoring_config(&graph, Mode::ExactPaths, &state.config)?;
            let _permit = state.scoring.clone().acquire_owned().await.map_err(|_| ApiError::new(ErrorCode::Unavailable, "shutting down"))?;
            tokio::task::spawn_blocking(move || chokepoint_view(&graph, &cfg, n))
                .await
                .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))??
        }
    };
    Ok(Json(GraphView { version, view: q.view, nodes, edges, summary }))
}

fn scoring_config(graph: &pqready_core::AssetGraph, mode: Mode, server: &ServerConfig) -> Result<ScoringConfig, ApiError> {
    let mut cfg = ScoringConfig::from_graph(graph)?.with_mode(mode);
    cfg.path_cap = server.path_cap;
    Ok(cfg)
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MethodParam {
    Exact,
    MonteCarlo,
    Auto,
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    version: Option<u64>,
    mode: Option<String>,
    method: Option<MethodParam>,
    seed: Option<u64>,
    permutations: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct VersionedReport {
    pub version: u64,
    #[serde(flatten)]
    pub report: ExposureReport,
}

async fn score_report(State(state): State<AppState>, query: Result<Query<ReportQuery>, axum::extract::rejection::QueryRejection>) -> Result<Json<VersionedReport>, ApiError> {
    let Query(q) = query?;
    let mode: Mode = q.mode.as_deref().unwrap_or("auto").parse()?;
    let seed = q.seed.unwrap_or(0);
    let method = match q.method.unwrap_or(MethodParam::Auto) {
        MethodParam::Exact => AttributionMethod::Exact,
        MethodParam::MonteCarlo => AttributionMethod::MonteCarlo { permutations: q.permutations, seed },
        MethodParam::Auto => AttributionMethod::Auto { seed },
    };
    let (version, graph) = state.store.graph(q.version)?;
    let cfg = scoring_config(&graph, mode, &state.config)?;
    let _permit = state.scoring.clone().acquire_owned().await.map_err(|_| ApiError::new(ErrorCode::Unavailable, "shutting down"))?;
    let report = tokio::task::spawn_blocking(move || score(&graph, &cfg, method))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?
        .map_err(|e| match e {
            pqready_core::CoreError::PathExplosion { cap } => ApiError::new(
                ErrorCode::Unavailable,
                format!("exact path enumeration exceeded {cap} paths; retry with mode=katz"),
            ),
            other => other.into(),
        })?;
    Ok(Json(VersionedReport { version, report }))
}

async fn review_queue(State(state): State<AppState>) -> Json<Vec<ValidationItem>> {
    Json(state.store.review_queue())
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    decision: HumanDecision,
    reviewer: String,
}

async fn review_decision(
    State(state): State<AppState>,
    Path(id): Path<ItemId>,
    body: Result<Json<DecisionBody>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<ValidationItem>, ApiError> {
    let Json(body) = body?;
    let item = state.store.record_human_decision(id, body.decision, &body.reviewer, Utc::now())?;
    info!(item = id, decision = ?body.decision, reviewer = %body.reviewer, "review decision recorded");
    Ok(Json(item))
}

async fn get_settings(State(state): State<AppState>) -> Json<ValidationSettings> {
    Json(state.store.settings())
}

async fn put_settings(
    State(state): State<AppState>,
    body: Result<Json<ValidationSettings>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<ValidationSettings>, ApiError> {
    let Json(settings) = body?;
    Ok(Json(state.store.put_settings(settings)?))
}

async fn stats(State(state): State<AppState>) -> impl IntoResponse {
    Json(pipeline_stats(&state.store))
}
