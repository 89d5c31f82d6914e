//! Thin async client for the customization session service.

use metacust_core::model::GuidanceEntry;
use metacust_core::{Decision, Operation};
use reqwest::StatusCode;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server answered {status}: {error}: {message}")]
    Api {
        status: u16,
        error: String,
        message: String,
    },
    #[error("unexpected response body: {0}")]
    Decode(#[from] serde_json::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub revision: String,
    pub components: usize,
    pub concerns: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SessionCreated {
    pub session: String,
    pub model: String,
    pub state_version: u64,
}

#[derive(Debug, Default, Deserialize)]
struct ErrorBody {
    #[serde(default)]
    error: String,
    #[serde(default)]
    message: String,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn load_model(&self, document: Vec<u8>) -> Result<ModelSummary, ClientError> {
        let resp = self
            .http
            .post(self.url("/v1/models"))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(document)
            .send()
            .await?;
        decode(resp, &[StatusCode::CREATED]).await
    }

    pub async fn model(&self, id: &str) -> Result<Vec<u8>, ClientError> {
        let resp = self.http.get(self.url(&format!("/v1/models/{id}"))).send().await?;
        raw(resp).await
    }

    /// Starts a session, resumed from `initial` when given.
    pub async fn create_session(
        &self,
        model: &str,
        tenant: Option<&str>,
        initial: Option<Vec<u8>>,
    ) -> Result<SessionCreated, ClientError> {
        let mut req = self.http.post(self.url(&format!("/v1/models/{model}/sessions")));
        if let Some(t) = tenant {
            req = req.query(&[("tenant", t)]);
        }
        if let Some(body) = initial {
            req = req.header(reqwest::header::CONTENT_TYPE, "application/json").body(body);
        }
        decode(req.send().await?, &[StatusCode::CREATED]).await
    }

    /// Invalid verdicts are returned as decisions, including the 409 a
    /// revision mismatch produces.
    pub async fn apply(&self, session: &str, op: &Operation) -> Result<Decision, ClientError> {
        let resp = self
            .http
            .post(self.url(&format!("/v1/sessions/{session}/ops")))
            .json(op)
            .send()
            .await?;
        decode(resp, &[StatusCode::OK, StatusCode::CONFLICT]).await
    }

    /// The session's customization document, byte for byte.
    pub async fn state(&self, session: &str) -> Result<Vec<u8>, ClientError> {
        let resp = self.http.get(self.url(&format!("/v1/sessions/{session}"))).send().await?;
        raw(resp).await
    }

    pub async fn guidance(
        &self,
        model: &str,
        concern: &str,
        target: Option<&str>,
    ) -> Result<Vec<GuidanceEntry>, ClientError> {
        let mut req = self.http.get(self.url(&format!("/v1/models/{model}/concerns/{concern}/paths")));
        if let Some(t) = target {
            req = req.query(&[("target", t)]);
        }
        decode(req.send().await?, &[StatusCode::OK]).await
    }
}

async fn raw(resp: reqwest::Response) -> Result<Vec<u8>, ClientError> {
    let status = resp.status();
    let bytes = resp.bytes().await?;
    if status == StatusCode::OK {
        Ok(bytes.to_vec())
    } else {
        Err(api_error(status, &bytes))
    }
}

async fn decode<T: serde::de::DeserializeOwned>(
    resp: reqwest::Response,
    accept: &[StatusCode],
) -> Result<T, ClientError> {
    let status = resp.status();
    let bytes = resp.bytes().await?;
    if accept.contains(&status) {
        // a 409 on an op still carries a decision; any other 409 falls through
        match serde_json::from_slice(&bytes) {
            Ok(v) => return Ok(v),
            Err(e) if status.is_success() => return Err(e.into()),
            Err(_) => {}
        }
    }
    Err(api_error(status, &bytes))
}

fn api_error(status: StatusCode, body: &[u8]) -> ClientError {
    let parsed: ErrorBody = serde_json::from_slice(body).unwrap_or_default();
    ClientError::Api {
        status: status.as_u16(),
        error: parsed.error,
        message: if parsed.message.is_empty() {
            String::from_utf8_lossy(body).into_owned()
        } else {
            parsed.message
        },
    }
}
