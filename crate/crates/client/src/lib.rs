//! Client for OpenAI-compatible chat-completion endpoints, in free-form and
//! schema-guided modes.
//!
//! Requests are deterministic by default (temperature 0). A guided request
//! carries the schema text verbatim under a configurable body field
//! (`guided_json` by default). Transport failures, 429 and 5xx responses are
//! retried with exponential backoff; a context-length rejection is surfaced as
//! its own error and never retried. In-flight requests are capped by a
//! semaphore shared by all callers of one [`LlmClient`].

mod prompt;
mod transport;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tabeval_core::schema::SchemaDocument;
use thiserror::Error;
use tokio::sync::Semaphore;

pub use prompt::{build_freeform_prompt, build_guided_prompt, schema_hint, Exemplar, PromptBundle, PromptTemplate};
pub use transport::{ChatTransport, HttpReply, HttpTransport};

/// Environment variable holding the endpoint API key.
pub const API_KEY_ENV: &str = "TABEVAL_API_KEY";

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("invalid prompt template: {0}")]
    Template(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status} after {attempts} attempt(s): {body}")]
    Http { status: u16, attempts: u32, body: String },
    #[error("prompt exceeds the model context: {0}")]
    ContextLengthExceeded(String),
    #[error("malformed completion response: {0}")]
    InvalidResponse(String),
}

impl ClientError {
    /// True when the endpoint could not be reached at all, as opposed to a
    /// per-request rejection.
    pub fn is_unreachable(&self) -> bool {
        matches!(self, ClientError::Transport { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub max_context_tokens: u32,
    #[serde(with = "secs")]
    pub request_timeout: Duration,
    pub max_concurrent_requests: usize,
    pub retry_limit: u32,
    #[serde(with = "secs")]
    pub retry_base_delay: Duration,
    /// Request-body field that carries the guided-decoding JSON schema.
    pub guided_field: String,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            endpoint_url: "http://localhost:8000/v1".into(),
            model_name: String::new(),
            temperature: 0.0,
            max_new_tokens: 4096,
            max_context_tokens: 6144,
            request_timeout: Duration::from_secs(600),
            max_concurrent_requests: 8,
            retry_limit: 3,
            retry_base_delay: Duration::from_millis(500),
            guided_field: "guided_json".into(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ClientError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_new_tokens >= self.max_context_tokens {
            return Err(ClientError::InvalidConfig(format!(
                "max_new_tokens ({}) must be below max_context_tokens ({})",
                self.max_new_tokens, self.max_context_tokens
            )));
        }
        if self.max_concurrent_requests == 0 {
            return Err(ClientError::InvalidConfig(
                "max_concurrent_requests must be positive".into(),
            ));
        }
        if self.guided_field.is_empty() {
            return Err(ClientError::InvalidConfig("guided_field must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    /// Completion text exactly as returned by the endpoint.
    pub raw_text: String,
    pub usage: Usage,
    #[serde(with = "secs")]
    pub latency: Duration,
    pub attempts: u32,
}

/// Serializes the chat-completion request body. A guided schema is spliced in
/// as raw text so the bytes sent equal `doc.json_schema_text`.
pub fn request_body(bundle: &PromptBundle, config: &GenerationConfig, guided: Option<&SchemaDocument>) -> String {
    let mut messages = Vec::new();
    if !bundle.system_text.is_empty() {
        messages.push(json!({"role": "system", "content": bundle.system_text}));
    }
    messages.push(json!({"role": "user", "content": bundle.user_text}));
    let base = json!({
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "max_tokens": config.max_new_tokens,
    });
    let mut body = serde_json::to_string(&base).expect("serializable");
    if let Some(doc) = guided {
        body.pop();
        body.push(',');
        body.push_str(&serde_json::to_string(&config.guided_field).expect("string"));
        body.push(':');
        body.push_str(&doc.json_schema_text);
        body.push('}');
    }
    body
}

fn is_context_overflow(body: &str) -> bool {
    let lower = body.to_lowercase();
    ["context length", "context_length", "maximum context", "context window"]
        .iter()
        .any(|needle| lower.contains(needle))
}

fn parse_completion(body: &str) -> Result<(String, Usage), ClientError> {
    let value: Value = serde_json::from_str(body).map_err(|e| ClientError::InvalidResponse(e.to_string()))?;
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ClientError::InvalidResponse("no choices[0].message.content".into()))?;
    let usage = value
        .get("usage")
        .and_then(|u| serde_json::from_value::<Usage>(u.clone()).ok())
        .unwrap_or_default();
    Ok((content.to_string(), usage))
}

fn retryable_status(status: u16) -> bool {
    status == 429 || status >= 500
}

pub struct LlmClient<T = HttpTransport> {
    transport: T,
    config: GenerationConfig,
    permits: Semaphore,
}

impl LlmClient<HttpTransport> {
    /// HTTP client for `config.endpoint_url`, reading the key from [`API_KEY_ENV`].
    pub fn from_config(config: GenerationConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        let transport = HttpTransport::new(&config.endpoint_url, api_key, config.request_timeout)?;
        Self::new(transport, config)
    }
}

impl<T: ChatTransport> LlmClient<T> {
    pub fn new(transport: T, config: GenerationConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let permits = Semaphore::new(config.max_concurrent_requests);
        Ok(LlmClient {
            transport,
            config,
            permits,
        })
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub async fn generate(
        &self,
        bundle: &PromptBundle,
        guided: Option<&SchemaDocument>,
    ) -> Result<Generation, ClientError> {
        let body = request_body(bundle, &self.config, guided);
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let started = Instant::now();
        let max_attempts = self.config.retry_limit + 1;
        let mut attempt = 0;
        loop {
            attempt += 1;
            let failure = match self.transport.post(body.clone()).await {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let (raw_text, usage) = parse_completion(&reply.body)?;
                    return Ok(Generation {
                        raw_text,
                        usage,
                        latency: started.elapsed(),
                        attempts: attempt,
                    });
                }
                Ok(reply) if reply.status == 400 && is_context_overflow(&reply.body) => {
                    return Err(ClientError::ContextLengthExceeded(reply.body));
                }
                Ok(reply) if !retryable_status(reply.status) => {
                    return Err(ClientError::Http {
                        status: reply.status,
                        attempts: attempt,
                        body: reply.body,
                    });
                }
                Ok(reply) => ClientError::Http {
                    status: reply.status,
                    attempts: attempt,
                    body: reply.body,
                },
                Err(message) => ClientError::Transport {
                    attempts: attempt,
                    message,
                },
            };
            if attempt >= max_attempts {
                return Err(failure);
            }
            let delay = self.config.retry_base_delay * 2u32.saturating_pow(attempt - 1);
            tracing::warn!(attempt, ?delay, error = %failure, "retrying completion request");
            tokio::time::sleep(delay).await;
        }
    }
}
