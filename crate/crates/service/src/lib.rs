//! HTTP façade over the Tirettes core: live play with scaffolding hints,
//! session replay and analytics snapshots.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/exercises`, `/exercises/{id}` | slider surfaces only |
//! | POST | `/sessions` | `{exercise_id, student_id, initial_vector?}` |
//! | POST | `/sessions/{id}/move` | `{slider_index, new_position}` |
//! | POST | `/sessions/{id}/validate` | `{result}` and nothing more |
//! | GET | `/sessions/{id}/hints` | server-sent scaffold triggers |
//! | GET | `/sessions/{id}/replay` | trajectory and events |
//! | GET | `/analytics/summary`, `/analytics/convergence?exercise=` | |

mod config;
mod routes;
mod state;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;

pub use config::ServiceConfig;
pub use routes::{router, serve};
pub use state::{AppState, Replay, ReplayEvent};

/// Startup failures.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Pack(#[from] tirettes_core::pack::PackError),
    #[error(transparent)]
    Scaffold(#[from] tirettes_core::scaffold::ScaffoldError),
    #[error("log directory: {0}")]
    Io(#[from] std::io::Error),
    #[error("log directory: {0}")]
    Ingest(#[from] tirettes_core::ingest::IngestError),
}

/// Request failures, rendered as `{"error": message}`.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}
