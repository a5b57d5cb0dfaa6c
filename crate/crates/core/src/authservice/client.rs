use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::{AdminAlarm, LoginChallenge, LoginOutcome, RegistrationSummary};
use crate::alternatives::AnswerSubmission;
use crate::model::CatalogEntry;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server said {status}: {error}: {message}")]
    Server { status: u16, error: String, message: String },
}

#[derive(Debug, Deserialize)]
struct ErrorReply {
    error: String,
    #[serde(default)]
    message: String,
}

#[derive(Debug, Deserialize)]
struct LoginReply {
    result: LoginOutcome,
}

/// Blocking client for the auth server. Must not be used from async code.
pub struct AuthClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl AuthClient {
    pub fn new(base_url: impl Into<String>) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder().timeout(Duration::from_secs(30)).build()?;
        Ok(AuthClient { base: base_url.into().trim_end_matches('/').to_string(), http })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn decode<T: for<'de> Deserialize<'de>>(resp: reqwest::blocking::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() || status.as_u16() == 429 {
            return Ok(resp.json()?);
        }
        let body: ErrorReply = resp.json().unwrap_or(ErrorReply { error: "unknown".into(), message: String::new() });
        Err(ClientError::Server { status: status.as_u16(), error: body.error, message: body.message })
    }

    pub fn questions(&self) -> Result<Vec<CatalogEntry>, ClientError> {
        Self::decode(self.http.get(self.url("/questions")).send()?)
    }

    pub fn register(&self, username: &str, answers: &[AnswerSubmission]) -> Result<RegistrationSummary, ClientError> {
        let body = serde_json::json!({ "username": username, "answers": answers });
        Self::decode(self.http.post(self.url("/register")).json(&body).send()?)
    }

    pub fn challenge(&self, username: &str) -> Result<LoginChallenge, ClientError> {
        let user = percent_encoding::utf8_percent_encode(username, percent_encoding::NON_ALPHANUMERIC);
        Self::decode(self.http.get(self.url(&format!("/challenge/{user}"))).send()?)
    }

    pub fn login(&self, username: &str, sequence: &str) -> Result<LoginOutcome, ClientError> {
        let body = serde_json::json!({ "username": username, "sequence": sequence });
        let reply: LoginReply = Self::decode(self.http.post(self.url("/login")).json(&body).send()?)?;
        Ok(reply.result)
    }

    pub fn alarms(&self) -> Result<Vec<AdminAlarm>, ClientError> {
        Self::decode(self.http.get(self.url("/admin/alarms")).send()?)
    }
}
