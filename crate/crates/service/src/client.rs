//! Minimal async client for the gallery API, used by the CLI.

use crowdwalk_core::gallery::{CrowdScore, SolutionId, SolutionRecord, SolutionView};
use reqwest::Method;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::{ApiError, Created, RatingRequest, SolutionPage};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{endpoint}: {cause}")]
    Transport { endpoint: String, cause: String },
    #[error("{endpoint}: {error}")]
    Api { endpoint: String, error: ApiError },
    #[error("{endpoint}: unexpected response: {cause}")]
    Decode { endpoint: String, cause: String },
}

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base_url` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base_url: &str) -> Self {
        Self { base: base_url.trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn send(
        &self,
        method: Method,
        path: &str,
        query: &[(&str, String)],
        body: Option<Vec<u8>>,
    ) -> Result<Vec<u8>, ClientError> {
        let endpoint = format!("{method} {}{path}", self.base);
        let mut req = self.http.request(method, format!("{}{path}", self.base)).query(query);
        if let Some(body) = body {
            req = req.header(reqwest::header::CONTENT_TYPE, "application/json").body(body);
        }
        let transport = |e: reqwest::Error| ClientError::Transport {
            endpoint: endpoint.clone(),
            cause: std::error::Error::source(&e).map_or_else(|| e.to_string(), |s| format!("{e}: {s}")),
        };
        let resp = req.send().await.map_err(transport)?;
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(transport)?.to_vec();
        if status.is_success() {
            return Ok(bytes);
        }
        let error = serde_json::from_slice::<ApiError>(&bytes).unwrap_or_else(|_| ApiError {
            status: status.as_u16(),
            code: "unknown".into(),
            message: String::from_utf8_lossy(&bytes).into_owned(),
        });
        Err(ClientError::Api { endpoint, error })
    }

    async fn json<T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        query: &[(&str, String)],
        body: Option<&impl Serialize>,
    ) -> Result<T, ClientError> {
        let body = body.map(|b| serde_json::to_vec(b).expect("request bodies serialize"));
        let bytes = self.send(method.clone(), path, query, body).await?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode {
            endpoint: format!("{method} {}{path}", self.base),
            cause: e.to_string(),
        })
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        self.send(Method::GET, "/healthz", &[], None).await.map(|_| ())
    }

    pub async fn upload(&self, record: &SolutionRecord) -> Result<SolutionId, ClientError> {
        let created: Created = self.json(Method::POST, "/api/solutions", &[], Some(record)).await?;
        Ok(created.id)
    }

    pub async fn solution(&self, id: &SolutionId) -> Result<SolutionView, ClientError> {
        self.json(Method::GET, &format!("/api/solutions/{id}"), &[], None::<&()>).await
    }

    /// The stored trace document, unparsed.
    pub async fn trace_bytes(&self, id: &SolutionId) -> Result<Vec<u8>, ClientError> {
        self.send(Method::GET, &format!("/api/solutions/{id}/trace"), &[], None).await
    }

    pub async fn rate(&self, id: &SolutionId, value: f64, rater_token: &str) -> Result<CrowdScore, ClientError> {
        let body = RatingRequest { value, rater_token: rater_token.to_string() };
        self.json(Method::POST, &format!("/api/solutions/{id}/ratings"), &[], Some(&body)).await
    }

    pub async fn page(&self, cursor: Option<&str>, skeleton: Option<&str>) -> Result<SolutionPage, ClientError> {
        let mut query = Vec::new();
        if let Some(c) = cursor {
            query.push(("cursor", c.to_string()));
        }
        if let Some(s) = skeleton {
            query.push(("skeleton", s.to_string()));
        }
        self.json(Method::GET, "/api/solutions", &query, None::<&()>).await
    }

    pub async fn top_rated(&self, skeleton: Option<&str>, k: usize) -> Result<Vec<SolutionView>, ClientError> {
        let mut query = vec![("k", k.to_string())];
        if let Some(s) = skeleton {
            query.push(("skeleton", s.to_string()));
        }
        self.json(Method::GET, "/api/solutions/top", &query, None::<&()>).await
    }
}
