use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use bpexplain_core::Error;
use serde_json::json;

/// Error reply: a status code and a JSON body `{"error": message}`.
#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    /// BP produced a zero product on a valid request.
    Unprocessable(String),
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn message(&self) -> &str {
        match self {
            ApiError::BadRequest(m)
            | ApiError::NotFound(m)
            | ApiError::Unprocessable(m)
            | ApiError::Internal(m) => m,
        }
    }

    /// Unknown nodes are 404s; other input problems are 400s.
    pub fn lookup(e: Error) -> Self {
        match e {
            Error::UnknownNode(_) => ApiError::NotFound(e.to_string()),
            other => other.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::DegenerateMessage { .. } | Error::DegenerateBelief(_) => {
                ApiError::Unprocessable(e.to_string())
            }
            // Files named by a request are client input.
            _ => ApiError::BadRequest(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if let ApiError::Internal(m) = &self {
            tracing::error!("{m}");
        }
        (self.status(), Json(json!({ "error": self.message() }))).into_response()
    }
}
