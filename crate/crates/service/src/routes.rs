use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use metacust_core::engine::{ResumeError, Session};
use metacust_core::io::{load_customization, load_model, save_model, IoError};
use metacust_core::model::{concern_guidance, ModelError};
use metacust_core::{Decision, Operation, Reason};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::session::{SessionGone, SessionHandle};
use crate::{AppState, DEFAULT_TENANT};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/models", post(load_model_handler))
        .route("/v1/models/{id}", get(get_model))
        .route("/v1/models/{id}/sessions", post(create_session))
        .route("/v1/models/{id}/concerns/{cid}/paths", get(guidance))
        .route("/v1/sessions/{id}", get(get_state))
        .route("/v1/sessions/{id}/ops", post(apply_op))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl ToString) -> Self {
        ApiError {
            status,
            body: json!({ "error": code, "message": message.to_string() }),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("unknown {what} `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        match &e {
            IoError::Parse { .. } => ApiError::new(StatusCode::BAD_REQUEST, "ParseError", &e),
            IoError::Schema(_) => ApiError::new(StatusCode::BAD_REQUEST, "SchemaError", &e),
            IoError::ModelInvalid(report) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({ "error": "ModelInvalid", "message": e.to_string(), "report": report }),
            },
            IoError::RevisionMismatch { .. } => ApiError::new(StatusCode::CONFLICT, "RevisionMismatch", &e),
            IoError::CustomizationInvalid(violations) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({ "error": "CustomizationInvalid", "message": e.to_string(), "violations": violations }),
            },
        }
    }
}

impl From<SessionGone> for ApiError {
    fn from(e: SessionGone) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "SessionGone", e)
    }
}

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn load_model_handler(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let model = load_model(&body)?;
    let summary = json!({
        "id": model.id,
        "revision": model.revision,
        "components": model.components().count(),
        "concerns": model.concern_count(),
    });
    let mut models = state.store.models.write().expect("model store poisoned");
    if let Some(existing) = models.get(&model.id) {
        if save_model(existing) != save_model(&model) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "ModelExists",
                format!("model `{}` is already loaded with different content", model.id),
            ));
        }
    } else {
        models.insert(model.id.clone(), Arc::new(model));
    }
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn get_model(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let model = state.store.model(&id).ok_or_else(|| ApiError::not_found("model", &id))?;
    Ok(json_bytes(StatusCode::OK, save_model(&model)))
}

#[derive(Debug, Deserialize)]
struct SessionQuery {
    tenant: Option<String>,
}

async fn create_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<SessionQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let model = state.store.model(&id).ok_or_else(|| ApiError::not_found("model", &id))?;
    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let session = if body.iter().all(u8::is_ascii_whitespace) {
        let tenant = query.tenant.as_deref().unwrap_or(DEFAULT_TENANT);
        Session::new(session_id.clone(), model.clone(), tenant)
    } else {
        let td = load_customization(&body, &model)?;
        Session::resume(session_id.clone(), model.clone(), td).map_err(|e| match e {
            ResumeError::RevisionMismatch => ApiError::new(StatusCode::CONFLICT, "RevisionMismatch", &e),
            ResumeError::Invalid(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "CustomizationInvalid", &e),
        })?
    };
    let version = session.state_version();

    let snapshot = state
        .config
        .snapshot_dir
        .as_ref()
        .map(|dir| dir.join(format!("{session_id}.jsonl")));
    {
        let mut sessions = state.store.sessions.write().expect("session store poisoned");
        if sessions.len() >= state.config.max_sessions {
            return Err(ApiError::new(
                StatusCode::TOO_MANY_REQUESTS,
                "TooManySessions",
                format!("session limit {} reached", state.config.max_sessions),
            ));
        }
        let handle = SessionHandle::spawn(session, model.id.clone(), snapshot);
        sessions.insert(session_id.clone(), handle);
    }
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session": session_id, "model": model.id, "state_version": version })),
    )
        .into_response())
}

async fn apply_op(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let handle = state.store.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let op: Operation = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MalformedOperation", e))?;
    let decision: Decision = handle.apply(op).await?;
    let status = if decision.reason == Reason::RevisionMismatch {
        StatusCode::CONFLICT
    } else {
        StatusCode::OK
    };
    Ok((status, Json(decision)).into_response())
}

async fn get_state(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let handle = state.store.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    Ok(json_bytes(StatusCode::OK, handle.state().await?))
}

async fn guidance(
    State(state): State<AppState>,
    Path((id, cid)): Path<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let model = state.store.model(&id).ok_or_else(|| ApiError::not_found("model", &id))?;
    let target = query.get("target").cloned();
    // closure enumeration can be expensive on dense concerns
    let entries = tokio::task::spawn_blocking(move || concern_guidance(&model, &cid, target.as_deref()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e))?;
    match entries {
        Ok(list) => Ok(Json(list).into_response()),
        Err(e @ ModelError::UnknownConcern(_)) => Err(ApiError::new(StatusCode::NOT_FOUND, "UnknownConcern", e)),
        Err(e @ ModelError::UnknownElement { .. }) => Err(ApiError::new(StatusCode::NOT_FOUND, "UnknownElement", e)),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e)),
    }
}
