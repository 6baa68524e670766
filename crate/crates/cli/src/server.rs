//! HTTP wrapper around [`Explorer`].
//!
//! Routes:
//! - `GET /runs`
//! - `GET /runs/{id}/front?order_by=k`
//! - `GET /runs/{id}/solutions/{index}?max_points=n`
//! - `POST /runs/{id}/combinations` with a [`CombinationRequest`] body

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mobss::explorer::{CombinationRequest, Explorer, ExplorerError};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

pub struct ApiError(ExplorerError);

impl From<ExplorerError> for ApiError {
    fn from(e: ExplorerError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ExplorerError::NotFound(_) | ExplorerError::OutOfRange { .. } => StatusCode::NOT_FOUND,
            ExplorerError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ExplorerError::Unavailable { .. } | ExplorerError::Io { .. } | ExplorerError::Internal(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let details = match &self.0 {
            ExplorerError::Invalid(v) => v.clone(),
            _ => Vec::new(),
        };
        let body = ErrorBody {
            error: self.0.to_string(),
            details,
        };
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<Explorer>;

#[derive(Debug, Deserialize)]
struct FrontQuery {
    #[serde(default)]
    order_by: usize,
}

#[derive(Debug, Deserialize)]
struct SolutionQuery {
    max_points: Option<usize>,
}

async fn list_runs(State(ex): State<Shared>) -> impl IntoResponse {
    Json(ex.list_runs())
}

async fn front(
    State(ex): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FrontQuery>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(ex.get_front(&id, q.order_by)?))
}

async fn solution(
    State(ex): State<Shared>,
    Path((id, index)): Path<(String, usize)>,
    Query(q): Query<SolutionQuery>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(ex.get_solution(&id, index, q.max_points)?))
}

async fn combination(
    State(ex): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<CombinationRequest>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(ex.post_combination(&id, &req)?))
}

pub fn router(explorer: Explorer) -> Router {
    Router::new()
        .route("/runs", get(list_runs))
        .route("/runs/{id}/front", get(front))
        .route("/runs/{id}/solutions/{index}", get(solution))
        .route("/runs/{id}/combinations", post(combination))
        .layer(CorsLayer::permissive())
        .with_state(Arc::new(explorer))
}
