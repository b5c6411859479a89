//! Chat-completion gateway.
//!
//! [`Gateway`] is the seam between the recommendation engine and a language
//! model. Two backends ship: [`OpenAiGateway`] for any OpenAI-compatible
//! `/chat/completions` endpoint, and [`MockGateway`], a seeded offline stand-in.

mod mock;
mod openai;

pub use mock::MockGateway;
pub use openai::{wire_payload, OpenAiConfig, OpenAiGateway, DEFAULT_BASE_URL};

use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_BASE_URL: &str = "CPD_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "CPD_LLM_API_KEY";
pub const ENV_MODEL: &str = "CPD_LLM_MODEL";

pub const DEFAULT_MODEL: &str = "gpt-4";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Sampling parameters sent with every request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            model: DEFAULT_MODEL.to_string(),
            temperature: 1.0,
            max_tokens: 256,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
        }
    }
}

impl GenerationParams {
    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionRequest {
    /// Sent as the system message (the definitions preamble).
    pub system: String,
    /// Sent as the user message.
    pub user: String,
    /// Explicit override; `None` uses the backend's configured parameters.
    pub params: Option<GenerationParams>,
    pub request_id: String,
}

impl CompletionRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            user: user.into(),
            params: None,
            request_id: uuid::Uuid::new_v4().to_string(),
        }
    }

    pub fn with_params(mut self, params: GenerationParams) -> Self {
        self.params = Some(params);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionResponse {
    pub text: String,
    pub model: String,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("authentication failed (HTTP {status}): {message}")]
    Auth { status: u16, message: String },
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("rate limited{}", retry_after.map(|d| format!(", retry after {}s", d.as_secs())).unwrap_or_default())]
    RateLimited { retry_after: Option<Duration> },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Api { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("backend not configured: {0}")]
    NotConfigured(String),
}

pub trait Gateway: Send + Sync {
    /// Short identifier recorded in suggestion provenance, e.g. `mock:42`.
    fn backend_id(&self) -> String;

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError>;
}

impl<G: Gateway + ?Sized> Gateway for Arc<G> {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<G: Gateway + ?Sized> Gateway for Box<G> {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        (**self).complete(request)
    }
}

/// Wraps another gateway and keeps a copy of every request it forwards.
pub struct RecordingGateway<G> {
    inner: G,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl<G: Gateway> RecordingGateway<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().clone()
    }
}

impl<G: Gateway> Gateway for RecordingGateway<G> {
    fn backend_id(&self) -> String {
        self.inner.backend_id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        self.requests.lock().push(request.clone());
        self.inner.complete(request)
    }
}

/// How the CLI and service pick a backend.
#[derive(Clone, Debug)]
pub enum BackendChoice {
    Mock { seed: u64 },
    /// Read base URL, key and model from `CPD_LLM_*`.
    Env,
}

pub fn build_gateway(choice: &BackendChoice) -> Result<Box<dyn Gateway>, GatewayError> {
    match choice {
        BackendChoice::Mock { seed } => Ok(Box::new(MockGateway::new(*seed))),
        BackendChoice::Env => Ok(Box::new(OpenAiGateway::new(OpenAiConfig::from_env()?)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_parameters() {
        let p = GenerationParams::default();
        assert_eq!(p.temperature, 1.0);
        assert_eq!(p.max_tokens, 256);
        assert_eq!(p.top_p, 1.0);
        assert_eq!(p.frequency_penalty, 0.0);
        assert_eq!(p.presence_penalty, 0.0);
    }

    #[test]
    fn recording_keeps_requests() {
        let g = RecordingGateway::new(MockGateway::new(1));
        let req = CompletionRequest::new("defs", "Recommend 5 possible barrier:");
        g.complete(&req).unwrap();
        assert_eq!(g.requests(), vec![req]);
    }

    #[test]
    fn rate_limit_message() {
        let e = GatewayError::RateLimited {
            retry_after: Some(Duration::from_secs(7)),
        };
        assert_eq!(e.to_string(), "rate limited, retry after 7s");
    }
}
