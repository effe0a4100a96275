//! Blocking HTTP client for the node API.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use fundchain_node::api::ApiError;

#[derive(Debug, Error)]
pub enum CliError {
    /// The node or the chain refused the request; `code` is the reason
    /// exactly as reported, e.g. `UNAUTHORIZED_WITHDRAWER`.
    #[error("{code}: {message}")]
    Rejected { code: String, message: String },
    #[error("node unreachable at {url}: {reason}")]
    Unreachable { url: String, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Rejected { .. } => 1,
            _ => 2,
        }
    }

    pub fn rejected(code: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Rejected {
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self, CliError::Rejected { code, .. } if code == "NOT_FOUND")
    }
}

#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    agent: ureq::Agent,
}

impl ApiClient {
    pub fn new(base: &str) -> Self {
        Self {
            base: base.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(30))
                .build(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn check(
        &self,
        path: &str,
        r: Result<ureq::Response, ureq::Error>,
    ) -> Result<ureq::Response, CliError> {
        match r {
            Ok(resp) => Ok(resp),
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                Err(match serde_json::from_str::<ApiError>(&body) {
                    Ok(e) => CliError::rejected(e.error, e.message),
                    Err(_) => CliError::rejected(format!("HTTP_{status}"), body),
                })
            }
            Err(e) => Err(CliError::Unreachable {
                url: self.url(path),
                reason: e.to_string(),
            }),
        }
    }

    fn decode<T: DeserializeOwned>(resp: ureq::Response) -> Result<T, CliError> {
        resp.into_json()
            .map_err(|e| CliError::Other(format!("unexpected response: {e}")))
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, CliError> {
        let resp = self.check(path, self.agent.get(&self.url(path)).call())?;
        Self::decode(resp)
    }

    pub fn get_text(&self, path: &str) -> Result<String, CliError> {
        let resp = self.check(path, self.agent.get(&self.url(path)).call())?;
        resp.into_string().map_err(CliError::Io)
    }

    pub fn get_bytes(&self, path: &str) -> Result<Vec<u8>, CliError> {
        let resp = self.check(path, self.agent.get(&self.url(path)).call())?;
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut resp.into_reader(), &mut buf)?;
        Ok(buf)
    }

    pub fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, CliError> {
        let resp = self.check(path, self.agent.post(&self.url(path)).send_json(body))?;
        Self::decode(resp)
    }

    pub fn post_bytes<T: DeserializeOwned>(&self, path: &str, body: &[u8]) -> Result<T, CliError> {
        let resp = self.check(
            path,
            self.agent
                .post(&self.url(path))
                .set("content-type", "application/octet-stream")
                .send_bytes(body),
        )?;
        Self::decode(resp)
    }
}
