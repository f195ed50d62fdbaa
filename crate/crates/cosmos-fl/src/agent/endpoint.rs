//! Model endpoints: the HTTP client for live model runners and the trait the
//! scripted mock shares with it.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::agent::wire::{ChatRequest, ChatResponse};

/// Connection settings for one ensemble member.
///
/// `base_url` is the full completions URL (e.g.
/// `http://localhost:11434/v1/chat`); `name` identifies the member inside the
/// ensemble and must be unique there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub name: String,
    pub base_url: String,
    pub model_id: String,
    #[serde(default = "default_timeout_s")]
    pub request_timeout_s: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_timeout_s() -> u64 {
    120
}

fn default_max_retries() -> u32 {
    2
}

#[derive(Debug, thiserror::Error)]
pub enum EndpointError {
    #[error("endpoint {endpoint} unreachable after {attempts} attempts: {message}")]
    Unreachable {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("endpoint {endpoint} request invalid: {message}")]
    Invalid { endpoint: String, message: String },
}

/// A completion plus how long the exchange took.
///
/// Live endpoints measure real elapsed time; the scripted mock reports a
/// deterministic synthetic latency so replays are bit-stable.
#[derive(Debug, Clone)]
pub struct TimedResponse {
    pub response: ChatResponse,
    pub elapsed_ms: u64,
}

/// Anything the agent loop can talk to.
pub trait ChatEndpoint: Send + Sync {
    /// Ensemble member name.
    fn name(&self) -> &str;
    /// Model identifier placed in each request.
    fn model_id(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<TimedResponse, EndpointError>;
}

/// Blocking HTTP client for a live endpoint. Retries transport errors,
/// non-2xx statuses, and malformed bodies up to `max_retries` extra attempts.
pub struct HttpEndpoint {
    endpoint: ModelEndpoint,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(endpoint: ModelEndpoint) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(endpoint.request_timeout_s)))
            .http_status_as_error(false)
            .build();
        HttpEndpoint {
            endpoint,
            agent: config.into(),
        }
    }

    fn attempt(&self, body: &str) -> Result<ChatResponse, String> {
        let mut response = self
            .agent
            .post(&self.endpoint.base_url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| format!("transport: {e}"))?;
        let status = response.status();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| format!("read: {e}"))?;
        if !status.is_success() {
            return Err(format!("http {status}: {text}"));
        }
        serde_json::from_str(&text).map_err(|e| format!("malformed response: {e}"))
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn name(&self) -> &str {
        &self.endpoint.name
    }

    fn model_id(&self) -> &str {
        &self.endpoint.model_id
    }

    fn complete(&self, request: &ChatRequest) -> Result<TimedResponse, EndpointError> {
        let body = serde_json::to_string(request).map_err(|e| EndpointError::Invalid {
            endpoint: self.endpoint.name.clone(),
            message: e.to_string(),
        })?;
        let attempts = 1 + self.endpoint.max_retries;
        let started = Instant::now();
        let mut last_error = String::new();
        for _ in 0..attempts {
            match self.attempt(&body) {
                Ok(response) => {
                    return Ok(TimedResponse {
                        response,
                        elapsed_ms: started.elapsed().as_millis() as u64,
                    })
                }
                Err(message) => last_error = message,
            }
        }
        Err(EndpointError::Unreachable {
            endpoint: self.endpoint.name.clone(),
            attempts,
            message: last_error,
        })
    }
}
