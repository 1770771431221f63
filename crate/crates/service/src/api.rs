use std::sync::Arc;

use axum::body::Body;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crowdwalk_core::gallery::{
    CrowdScore, GalleryStore, Rating, SolutionId, SolutionRecord, SolutionSummary, SolutionView,
};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

use crate::error::ApiError;

/// Largest accepted request body. A 10 s walker trace is a few hundred KiB.
const BODY_LIMIT: usize = 32 * 1024 * 1024;
pub const DEFAULT_TOP_K: usize = 10;
pub const MAX_TOP_K: usize = 1000;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<GalleryStore>,
    pub page_size: usize,
}

/// One page of `GET /api/solutions`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionPage {
    pub items: Vec<SolutionSummary>,
    /// Pass back as `?cursor=` to fetch the next page; absent on the last page.
    pub next_cursor: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub id: SolutionId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingRequest {
    pub value: f64,
    pub rater_token: String,
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    cursor: Option<String>,
    skeleton: Option<String>,
}

#[derive(Debug, Deserialize)]
struct TopQuery {
    skeleton: Option<String>,
    k: Option<usize>,
}

// Cursors are offsets into the insertion-ordered listing, wrapped so that
// clients treat them as tokens rather than doing arithmetic on them.
pub(crate) fn encode_cursor(offset: usize) -> String {
    format!("o{offset:x}")
}

pub(crate) fn decode_cursor(cursor: &str) -> Option<usize> {
    let hex = cursor.strip_prefix('o')?;
    if hex.is_empty() || hex.len() > 16 {
        return None;
    }
    usize::from_str_radix(hex, 16).ok()
}

fn parse_id(raw: &str) -> Result<SolutionId, ApiError> {
    // An id that cannot exist is reported the same way as one that does not.
    SolutionId::new(raw).map_err(|_| ApiError::not_found(format!("solution {raw} not found")))
}

/// Runs a store operation off the async workers: writes fsync, trace reads hit disk.
async fn with_store<T, F>(state: &AppState, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&GalleryStore) -> Result<T, ApiError> + Send + 'static,
{
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || f(&store)).await.map_err(|e| {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", format!("worker failed: {e}"))
    })?
}

async fn list(
    State(state): State<AppState>,
    query: Result<Query<ListQuery>, QueryRejection>,
) -> Result<Json<SolutionPage>, ApiError> {
    let Query(query) = query?;
    let offset = match query.cursor.as_deref() {
        None | Some("") => 0,
        Some(c) => decode_cursor(c)
            .ok_or_else(|| ApiError::bad_request("invalid_cursor", format!("unrecognized cursor {c:?}")))?,
    };
    let (items, next) = state.store.list(query.skeleton.as_deref(), offset, state.page_size);
    Ok(Json(SolutionPage { items, next_cursor: next.map(encode_cursor) }))
}

async fn top(
    State(state): State<AppState>,
    query: Result<Query<TopQuery>, QueryRejection>,
) -> Result<Json<Vec<SolutionView>>, ApiError> {
    let Query(query) = query?;
    let k = query.k.unwrap_or(DEFAULT_TOP_K);
    if !(1..=MAX_TOP_K).contains(&k) {
        return Err(ApiError::bad_request("invalid_query", format!("k must be in 1..={MAX_TOP_K}, got {k}")));
    }
    let skeleton = query.skeleton;
    let views = with_store(&state, move |s| Ok(s.top_rated(skeleton.as_deref(), k))).await?;
    Ok(Json(views))
}

async fn detail(
    State(state): State<AppState>,
    Path(raw): Path<String>,
) -> Result<Json<SolutionView>, ApiError> {
    let id = parse_id(&raw)?;
    Ok(Json(state.store.view(&id)?))
}

async fn trace(State(state): State<AppState>, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let id = parse_id(&raw)?;
    let bytes = with_store(&state, move |s| Ok(s.trace_bytes(&id)?)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], Body::from(bytes)).into_response())
}

async fn create(
    State(state): State<AppState>,
    body: Result<Json<SolutionRecord>, JsonRejection>,
) -> Result<(StatusCode, [(header::HeaderName, String); 1], Json<Created>), ApiError> {
    let Json(record) = body?;
    let id = with_store(&state, move |s| Ok(s.put_solution(&record)?)).await?;
    tracing::info!(%id, "solution stored");
    let location = format!("/api/solutions/{id}");
    Ok((StatusCode::CREATED, [(header::LOCATION, location)], Json(Created { id })))
}

async fn rate(
    State(state): State<AppState>,
    Path(raw): Path<String>,
    body: Result<Json<RatingRequest>, JsonRejection>,
) -> Result<Json<CrowdScore>, ApiError> {
    let id = parse_id(&raw)?;
    let Json(req) = body?;
    let rating = Rating::new(req.value, req.rater_token);
    let score = with_store(&state, move |s| Ok(s.submit_rating(&id, rating)?)).await?;
    Ok(Json(score))
}

async fn healthz(State(state): State<AppState>) -> Result<&'static str, ApiError> {
    let root = state.store.root().to_path_buf();
    with_store(&state, move |_| {
        std::fs::read_dir(&root).map(|_| "ok").map_err(|e| {
            ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "store_unreadable", format!("{}: {e}", root.display()))
        })
    })
    .await
}

async fn no_route() -> ApiError {
    ApiError::not_found("no such endpoint")
}

/// The router answers unsupported methods with an empty 405; give it the
/// standard error body. (A router-wide 405 fallback would also swallow the
/// per-route CORS preflight handling.)
async fn error_body_for_405(resp: Response) -> Response {
    if resp.status() != StatusCode::METHOD_NOT_ALLOWED || resp.headers().contains_key(header::CONTENT_TYPE) {
        return resp;
    }
    let allow = resp.headers().get(header::ALLOW).cloned();
    let mut out =
        ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed for this endpoint")
            .into_response();
    if let Some(allow) = allow {
        out.headers_mut().insert(header::ALLOW, allow);
    }
    out
}

fn cors(methods: &[Method]) -> CorsLayer {
    CorsLayer::new()
        .allow_origin(Any)
        .allow_methods(methods.to_vec())
        .allow_headers([header::CONTENT_TYPE])
}

/// All endpoints. Cross-origin access is granted for reads and rating
/// submission only; uploads are expected from the CLI, not from browsers.
pub fn router(state: AppState) -> Router {
    let reads = || cors(&[Method::GET]);
    Router::new()
        .route("/healthz", get(healthz).layer(reads()))
        .route("/api/solutions", get(list).post(create).layer(reads()))
        .route("/api/solutions/top", get(top).layer(reads()))
        .route("/api/solutions/{id}", get(detail).layer(reads()))
        .route("/api/solutions/{id}/trace", get(trace).layer(reads()))
        .route("/api/solutions/{id}/ratings", post(rate).layer(cors(&[Method::GET, Method::POST])))
        .fallback(no_route)
        .layer(axum::middleware::map_response(error_body_for_405))
        .layer(axum::extract::DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}
