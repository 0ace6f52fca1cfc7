//! Chat-completion transport with per-vendor request shapes.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;

/// Request/response shape spoken by an endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// `POST {base_url}/chat/completions`, bearer auth.
    #[default]
    OpenAi,
    /// `POST {base_url}/messages`, `x-api-key` auth.
    Anthropic,
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_OUTPUT_TOKENS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    /// Name used in trial keys and reports.
    pub name: String,
    pub base_url: String,
    /// Environment variable holding the credential.
    pub auth_env_var: String,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    /// Vendor model identifier; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default)]
    pub protocol: Protocol,
}

impl ModelEndpoint {
    pub fn new(name: &str, base_url: &str, auth_env_var: &str) -> Self {
        ModelEndpoint {
            name: name.to_string(),
            base_url: base_url.to_string(),
            auth_env_var: auth_env_var.to_string(),
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            model_id: None,
            protocol: Protocol::OpenAi,
        }
    }

    pub fn model_id(&self) -> &str {
        self.model_id.as_deref().unwrap_or(&self.name)
    }

    pub fn check(&self) -> Result<()> {
        if self.max_output_tokens == 0 {
            return Err(Error::Config(format!("endpoint {}: max_output_tokens must be positive", self.name)));
        }
        reqwest::Url::parse(&self.base_url)
            .map_err(|e| Error::Config(format!("endpoint {}: bad base_url: {e}", self.name)))?;
        Ok(())
    }

    /// Reads the credential from the environment.
    pub fn credential(&self) -> Result<String> {
        std::env::var(&self.auth_env_var).map_err(|_| Error::MissingCredential(self.auth_env_var.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, base_delay_ms: 1000, timeout_ms: 120_000 }
    }
}

impl RetryPolicy {
    /// Exponential backoff with multiplicative jitter in [0.5, 1.5).
    pub fn delay(&self, attempt: u32) -> Duration {
        let base = self.base_delay_ms.saturating_mul(1u64 << attempt.min(16)) as f64;
        let jitter: f64 = rand::rng().random_range(0.5..1.5);
        Duration::from_millis((base * jitter) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
}

/// How a call failed after retries were exhausted or judged pointless.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallFailure {
    Timeout(String),
    Transport(String),
}

#[derive(Debug)]
pub struct ChatReply {
    pub text: String,
    pub latency_ms: u64,
    pub attempts: u32,
}

enum Attempt {
    Done(String),
    Retry(CallFailure),
    Fail(CallFailure),
}

/// HTTP client bound to one endpoint and its credential.
#[derive(Clone)]
pub struct ChatClient {
    endpoint: ModelEndpoint,
    credential: String,
    http: reqwest::Client,
    retry: RetryPolicy,
}

impl ChatClient {
    pub fn new(endpoint: &ModelEndpoint, retry: RetryPolicy) -> Result<Self> {
        endpoint.check()?;
        let credential = endpoint.credential()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_millis(retry.timeout_ms))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(ChatClient { endpoint: endpoint.clone(), credential, http, retry })
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    fn url(&self) -> String {
        let base = self.endpoint.base_url.trim_end_matches('/');
        match self.endpoint.protocol {
            Protocol::OpenAi => format!("{base}/chat/completions"),
            Protocol::Anthropic => format!("{base}/messages"),
        }
    }

    fn body(&self, req: &ChatRequest) -> Value {
        let model = self.endpoint.model_id();
        let max_tokens = self.endpoint.max_output_tokens;
        match self.endpoint.protocol {
            Protocol::OpenAi => json!({
                "model": model,
                "messages": [
                    {"role": "system", "content": req.system},
                    {"role": "user", "content": req.user},
                ],
                "temperature": req.temperature,
                "max_tokens": max_tokens,
            }),
            Protocol::Anthropic => json!({
                "model": model,
                "system": req.system,
                "messages": [{"role": "user", "content": req.user}],
                "temperature": req.temperature,
                "max_tokens": max_tokens,
            }),
        }
    }

    fn parse_reply(&self, value: &Value) -> Option<String> {
        match self.endpoint.protocol {
            Protocol::OpenAi => value.pointer("/choices/0/message/content").and_then(Value::as_str).map(str::to_string),
            Protocol::Anthropic => {
                let parts = value.get("content")?.as_array()?;
                let text: Vec<&str> = parts.iter().filter_map(|p| p.get("text")?.as_str()).collect();
                (!text.is_empty()).then(|| text.concat())
            }
        }
    }

    async fn attempt(&self, req: &ChatRequest) -> Result<Attempt> {
        let builder = self.http.post(self.url()).json(&self.body(req));
        let builder = match self.endpoint.protocol {
            Protocol::OpenAi => builder.bearer_auth(&self.credential),
            Protocol::Anthropic => {
                builder.header("x-api-key", &self.credential).header("anthropic-version", "2023-06-01")
            }
        };
        let resp = match builder.send().await {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Ok(Attempt::Retry(CallFailure::Timeout(e.to_string()))),
            Err(e) => return Ok(Attempt::Retry(CallFailure::Transport(e.to_string()))),
        };
        let status = resp.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(Error::AuthFailed { endpoint: self.endpoint.name.clone(), status: status.as_u16() });
        }
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Ok(Attempt::Retry(CallFailure::Transport(format!("HTTP {}", status.as_u16()))));
        }
        if !status.is_success() {
            return Ok(Attempt::Fail(CallFailure::Transport(format!("HTTP {}", status.as_u16()))));
        }
        let bytes = match resp.bytes().await {
            Ok(b) => b,
            Err(e) if e.is_timeout() => return Ok(Attempt::Retry(CallFailure::Timeout(e.to_string()))),
            Err(e) => return Ok(Attempt::Retry(CallFailure::Transport(e.to_string()))),
        };
        let parsed = serde_json::from_slice::<Value>(&bytes).ok();
        match parsed.as_ref().and_then(|v| self.parse_reply(v)) {
            Some(text) => Ok(Attempt::Done(text)),
            None => Ok(Attempt::Fail(CallFailure::Transport("malformed endpoint reply".into()))),
        }
    }

    /// Sends one request, retrying transient failures. `Err` is reserved for
    /// failures that should abort the whole run.
    pub async fn complete(&self, req: &ChatRequest) -> Result<std::result::Result<ChatReply, (CallFailure, u64)>> {
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            let outcome = self.attempt(req).await?;
            let elapsed = started.elapsed().as_millis() as u64;
            match outcome {
                Attempt::Done(text) => return Ok(Ok(ChatReply { text, latency_ms: elapsed, attempts: attempt + 1 })),
                Attempt::Fail(f) => return Ok(Err((f, elapsed))),
                Attempt::Retry(f) if attempt >= self.retry.max_retries => return Ok(Err((f, elapsed))),
                Attempt::Retry(f) => {
                    tracing::debug!(endpoint = %self.endpoint.name, attempt, failure = ?f, "retrying");
                    tokio::time::sleep(self.retry.delay(attempt)).await;
                    attempt += 1;
                }
            }
        }
    }
}
