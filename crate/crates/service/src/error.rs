use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use crowdwalk_core::gallery::GalleryError;
use serde::{Deserialize, Serialize};

/// Body of every non-2xx response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    /// Stable, machine-readable; clients branch on this rather than the message.
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status: status.as_u16(), code: code.to_string(), message: message.into() }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn status_code(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status, self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status_code(), Json(self)).into_response()
    }
}

impl From<GalleryError> for ApiError {
    fn from(e: GalleryError) -> Self {
        let message = e.to_string();
        match e {
            GalleryError::NotFound(_) => ApiError::not_found(message),
            GalleryError::Duplicate(_) => ApiError::new(StatusCode::CONFLICT, "duplicate", message),
            GalleryError::RatingOutOfRange(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "rating_out_of_range", message)
            }
            GalleryError::Validation { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", message)
            }
            GalleryError::SchemaVersion { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unsupported_schema_version", message)
            }
            GalleryError::Corrupt { .. } | GalleryError::Io(_) => {
                tracing::error!(error = %message, "store failure");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", message)
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        // Oversized and wrongly-typed bodies keep their own status; anything
        // else about the body is the client sending something unparseable.
        match r.status() {
            StatusCode::PAYLOAD_TOO_LARGE => {
                ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", r.body_text())
            }
            StatusCode::UNSUPPORTED_MEDIA_TYPE => {
                ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_media_type", r.body_text())
            }
            _ => ApiError::bad_request("malformed_body", r.body_text()),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request("invalid_query", r.body_text())
    }
}
