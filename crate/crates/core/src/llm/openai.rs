//! OpenAI-compatible `/chat/completions` client.

use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::header::{HeaderMap, RETRY_AFTER};
use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{
    CompletionRequest, CompletionResponse, Gateway, GatewayError, GenerationParams, DEFAULT_TIMEOUT, ENV_API_KEY,
    ENV_BASE_URL, ENV_MODEL,
};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(Clone, Debug)]
pub struct OpenAiConfig {
    pub base_url: String,
    pub api_key: String,
    pub params: GenerationParams,
    pub timeout: Duration,
}

impl OpenAiConfig {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: api_key.into(),
            params: GenerationParams::default(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn from_env() -> Result<Self, GatewayError> {
        let api_key = std::env::var(ENV_API_KEY)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| GatewayError::NotConfigured(format!("set {ENV_API_KEY} or use --mock")))?;
        let base_url = std::env::var(ENV_BASE_URL)
            .ok()
            .filter(|u| !u.is_empty())
            .unwrap_or_else(|| DEFAULT_BASE_URL.to_string());
        let mut cfg = Self::new(base_url, api_key);
        if let Some(model) = std::env::var(ENV_MODEL).ok().filter(|m| !m.is_empty()) {
            cfg.params.model = model;
        }
        Ok(cfg)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_params(mut self, params: GenerationParams) -> Self {
        self.params = params;
        self
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Blocking client. Thread-safe; the underlying connection pool is shared
/// across concurrent requests.
pub struct OpenAiGateway {
    config: OpenAiConfig,
    client: Client,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    model: Option<String>,
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: Option<u32>,
    completion_tokens: Option<u32>,
}

/// The JSON body sent for a request. Sampling parameters come from
/// `defaults` unless the request overrides them.
pub fn wire_payload(request: &CompletionRequest, defaults: &GenerationParams) -> Value {
    let p = request.params.as_ref().unwrap_or(defaults);
    json!({
        "model": p.model,
        "messages": [
            {"role": "system", "content": request.system},
            {"role": "user", "content": request.user},
        ],
        "temperature": p.temperature,
        "max_tokens": p.max_tokens,
        "top_p": p.top_p,
        "frequency_penalty": p.frequency_penalty,
        "presence_penalty": p.presence_penalty,
    })
}

fn retry_after(headers: &HeaderMap) -> Option<Duration> {
    headers
        .get(RETRY_AFTER)?
        .to_str()
        .ok()?
        .trim()
        .parse::<u64>()
        .ok()
        .map(Duration::from_secs)
}

impl OpenAiGateway {
    pub fn new(config: OpenAiConfig) -> Result<Self, GatewayError> {
        let client = Client::builder()
            .timeout(config.timeout)
            .connect_timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &OpenAiConfig {
        &self.config
    }

    fn attempt(&self, payload: &Value) -> Result<(Value, Duration), GatewayError> {
        let started = Instant::now();
        let resp = self
            .client
            .post(self.config.endpoint())
            .bearer_auth(&self.config.api_key)
            .json(payload)
            .send()
            .map_err(|e| self.classify(e))?;
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp.text().map_err(|e| self.classify(e))?;
        match status {
            s if s.is_success() => {
                let value = serde_json::from_str(&body).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
                Ok((value, started.elapsed()))
            }
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Err(GatewayError::Auth {
                status: status.as_u16(),
                message: body,
            }),
            StatusCode::TOO_MANY_REQUESTS => Err(GatewayError::RateLimited {
                retry_after: retry_after(&headers),
            }),
            _ => Err(GatewayError::Api {
                status: status.as_u16(),
                body,
            }),
        }
    }

    fn classify(&self, e: reqwest::Error) -> GatewayError {
        if e.is_timeout() {
            GatewayError::Timeout(self.config.timeout)
        } else {
            GatewayError::Transport(e.to_string())
        }
    }
}

impl Gateway for OpenAiGateway {
    fn backend_id(&self) -> String {
        format!("openai-compatible:{}", self.config.params.model)
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let payload = wire_payload(request, &self.config.params);
        debug!(request_id = %request.request_id, endpoint = %self.config.endpoint(), "chat completion");
        // one retry, transport failures only
        let (value, latency) = match self.attempt(&payload) {
            Err(GatewayError::Transport(first)) => {
                warn!(request_id = %request.request_id, error = %first, "transport failure, retrying once");
                self.attempt(&payload)?
            }
            other => other?,
        };
        let wire: WireResponse =
            serde_json::from_value(value).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        let text = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::MalformedResponse("response has no message content".into()))?;
        Ok(CompletionResponse {
            text,
            model: wire.model.unwrap_or_else(|| payload["model"].as_str().unwrap_or_default().to_string()),
            prompt_tokens: wire.usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: wire.usage.as_ref().and_then(|u| u.completion_tokens),
            latency,
        })
    }
}
