//! HTTP adapter over [`narql_core::api`]. Handlers only decode requests and
//! encode responses; every result comes from the shared library calls.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use narql_core::api::{self, ApiError, ExplainRequest, QueryRequest, ServiceConfig};
use narql_core::StatementStore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServerConfig {
    pub service: ServiceConfig,
    /// Allowed CORS origins; empty allows any origin.
    pub cors_origins: Vec<String>,
}

struct AppState {
    store: StatementStore,
    config: ServiceConfig,
}

type Shared = Arc<AppState>;

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    (
        status,
        [(CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        api::to_json(body),
    )
        .into_response()
}

struct ErrorResponse(ApiError);

impl IntoResponse for ErrorResponse {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json(status, &self.0)
    }
}

impl From<ApiError> for ErrorResponse {
    fn from(e: ApiError) -> Self {
        Self(e)
    }
}

type Reply = Result<Response, ErrorResponse>;

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ErrorResponse> {
    serde_json::from_slice(body)
        .map_err(|e| ErrorResponse(ApiError::bad_request("InvalidRequest", format!("invalid request body: {e}"))))
}

/// Runs blocking engine work off the async executor.
async fn compute<T, F>(state: Shared, f: F) -> Result<T, ErrorResponse>
where
    T: Send + 'static,
    F: FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ErrorResponse(ApiError::new(500, "Internal", e.to_string())))?
        .map_err(ErrorResponse)
}

async fn query(State(state): State<Shared>, body: Bytes) -> Reply {
    let req: QueryRequest = decode(&body)?;
    let resp = compute(state, move |s| api::run_query(&s.store, &req, &s.config)).await?;
    Ok(json(StatusCode::OK, &resp))
}

async fn explain(State(state): State<Shared>, body: Bytes) -> Reply {
    let req: ExplainRequest = decode(&body)?;
    let resp = compute(state, move |s| api::run_explain(&s.store, &req, &s.config)).await?;
    Ok(json(StatusCode::OK, &resp))
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    #[serde(default)]
    q: String,
    #[serde(rename = "type")]
    ty: Option<String>,
}

async fn vocabulary_search(State(state): State<Shared>, Query(p): Query<SearchParams>) -> Reply {
    let hits = api::vocabulary_search(&state.store, &p.q, p.ty.as_deref())?;
    Ok(json(StatusCode::OK, &hits))
}

async fn document(State(state): State<Shared>, Path(id): Path<String>) -> Reply {
    let view = api::document_view(&state.store, &id)?;
    Ok(json(StatusCode::OK, &view))
}

async fn not_found() -> ErrorResponse {
    ErrorResponse(ApiError::not_found("NotFound", "no such endpoint"))
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([CONTENT_TYPE]);
    if origins.is_empty() {
        return layer.allow_origin(Any);
    }
    let allowed: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    layer.allow_origin(AllowOrigin::list(allowed))
}

pub fn router(store: StatementStore, config: ServerConfig) -> Router {
    let state = Arc::new(AppState {
        store,
        config: config.service,
    });
    Router::new()
        .route("/query", post(query))
        .route("/explain", post(explain))
        .route("/vocabulary/search", get(vocabulary_search))
        .route("/documents/{id}", get(document))
        .fallback(not_found)
        .layer(cors(&config.cors_origins))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, store: StatementStore, config: ServerConfig) -> std::io::Result<()> {
    axum::serve(listener, router(store, config)).await
}
