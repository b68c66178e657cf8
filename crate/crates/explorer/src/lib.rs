//! Exploration service over a sampled near-optimal design space.
//!
//! [`Space`] answers bounds, metric and preset queries against an immutable
//! sample store; [`router`] exposes them over HTTP together with sessions
//! and the submission log.

mod service;
mod space;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use nearopt_core::DesignPoint;
use serde_json::json;
use thiserror::Error;

pub use service::{router, serve, AppState, ServeConfig, SessionState, DEFAULT_SESSION_TTL, EXPORT_SECRET_HEADER};
pub use space::{BoundsResponse, DimBounds, DimensionInfo, MetricsResponse, MinimizeResponse, Space, SpaceSummary};

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("sample store not loaded yet")]
    NotLoaded,
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("unknown or expired session")]
    UnknownSession,
    #[error("stale point")]
    Stale { distance: f64, nearest: DesignPoint },
    #[error("session already submitted")]
    Duplicate,
    #[error("invalid submission: {0}")]
    Invalid(String),
    #[error("missing or wrong export secret")]
    Unauthorized,
    #[error("export is disabled on this server")]
    ExportDisabled,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ExplorerError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::NotLoaded => StatusCode::SERVICE_UNAVAILABLE,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::UnknownSession => StatusCode::NOT_FOUND,
            Self::Stale { .. } | Self::Duplicate => StatusCode::CONFLICT,
            Self::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::Unauthorized => StatusCode::UNAUTHORIZED,
            Self::ExportDisabled => StatusCode::FORBIDDEN,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ExplorerError {
    fn into_response(self) -> Response {
        let body = match &self {
            Self::Stale { distance, nearest } => json!({
                "error": self.to_string(),
                "distance": distance,
                "nearest": nearest,
            }),
            _ => json!({ "error": self.to_string() }),
        };
        (self.status(), Json(body)).into_response()
    }
}
