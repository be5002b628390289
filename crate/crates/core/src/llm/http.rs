use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{CompletionRequest, CompletionResponse, LlmBackend, LlmError};

/// Environment variable holding the bearer credential.
pub const API_KEY_ENV: &str = "RAV_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL; requests go to `<base_url>/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub timeout: Duration,
}

/// One attempt per call against an OpenAI-compatible chat endpoint. Wrap in
/// [`Client`](super::Client) for retries.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpBackend {
    /// Reads the credential from `RAV_API_KEY` when set.
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: HttpConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Transport { detail: e.to_string(), retryable: false })?;
        Ok(Self { config, api_key, http })
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &request.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": request.user_text}));
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if !request.stop_sequences.is_empty() {
            body["stop"] = json!(request.stop_sequences);
        }
        body
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        request.validate()?;
        let started = Instant::now();
        let mut builder = self.http.post(self.endpoint()).json(&self.request_body(request));
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| LlmError::Transport {
            detail: e.to_string(),
            retryable: e.is_timeout() || e.is_connect() || e.is_request(),
        })?;
        let status = response.status().as_u16();
        let retry_after_ms = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .map(|secs| (secs * 1000.0) as u64);
        let body = response
            .text()
            .map_err(|e| LlmError::Transport { detail: e.to_string(), retryable: true })?;
        if status != 200 {
            return Err(classify_status(status, &body, retry_after_ms));
        }
        parse_success(&body, started.elapsed().as_millis() as u64)
    }
}

/// Maps a non-200 reply onto the error taxonomy.
pub(crate) fn classify_status(status: u16, body: &str, retry_after_ms: Option<u64>) -> LlmError {
    let lower = body.to_lowercase();
    let overflow = ["context_length_exceeded", "context length", "maximum context", "too many tokens", "prompt is too long"]
        .iter()
        .any(|needle| lower.contains(needle));
    match status {
        401 | 403 => LlmError::AuthFailed { detail: format!("HTTP {status}") },
        429 => LlmError::RateLimited { retry_after_ms },
        413 => LlmError::ContextOverflow { detail: format!("HTTP {status}") },
        400 | 422 if overflow => LlmError::ContextOverflow { detail: snippet(body) },
        408 | 500..=599 => LlmError::Transport { detail: format!("HTTP {status}: {}", snippet(body)), retryable: true },
        _ => LlmError::Transport { detail: format!("HTTP {status}: {}", snippet(body)), retryable: false },
    }
}

fn snippet(body: &str) -> String {
    body.chars().take(200).collect()
}

pub(crate) fn parse_success(body: &str, latency_ms: u64) -> Result<CompletionResponse, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::Transport {
        detail: format!("unparseable response body: {e}"),
        retryable: true,
    })?;
    let content = &v["choices"][0]["message"]["content"];
    let text = match content {
        Value::String(s) => s.trim_end().to_string(),
        Value::Null => String::new(),
        other => {
            return Err(LlmError::Transport { detail: format!("unexpected content shape: {other}"), retryable: false })
        }
    };
    if v["choices"][0]["finish_reason"] == "length" && text.is_empty() {
        return Err(LlmError::ContextOverflow { detail: "completion truncated before any output".into() });
    }
    let usage = &v["usage"];
    Ok(CompletionResponse {
        text,
        prompt_tokens: usage["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: usage["completion_tokens"].as_u64().unwrap_or(0),
        latency_ms,
    })
}
