//! Completion backends: an OpenAI-compatible chat endpoint and a scripted
//! backend for tests, behind one trait, plus retry, concurrency limiting
//! and run logging.

mod client;
mod http;
mod scripted;

pub use client::{Client, RunLog, RunLogEntry, TokenCounts};
pub use http::{HttpBackend, HttpConfig, API_KEY_ENV};
pub use scripted::{ScriptedBackend, ScriptedReply};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_text: Option<String>,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop_sequences: Vec<String>,
    /// Agent role and step, e.g. `c12/0/QG:3`. Scripts are keyed by it.
    pub tag: String,
}

impl CompletionRequest {
    pub fn new(tag: impl Into<String>, user_text: impl Into<String>) -> Self {
        Self {
            system_text: None,
            user_text: user_text.into(),
            temperature: 0.0,
            max_tokens: 512,
            stop_sequences: Vec::new(),
            tag: tag.into(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.user_text.is_empty() {
            return Err(LlmError::InvalidRequest { detail: "user_text is empty".into() });
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest { detail: format!("temperature {} outside [0, 2]", self.temperature) });
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest { detail: "max_tokens must be positive".into() });
        }
        if self.stop_sequences.len() > 4 {
            return Err(LlmError::InvalidRequest { detail: "at most 4 stop sequences".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmError {
    #[error("transport error: {detail}")]
    Transport { detail: String, retryable: bool },
    #[error("rate limited by provider")]
    RateLimited { retry_after_ms: Option<u64> },
    #[error("authentication failed: {detail}")]
    AuthFailed { detail: String },
    #[error("request exceeds the model context: {detail}")]
    ContextOverflow { detail: String },
    #[error("no scripted response for tag `{tag}`")]
    UnscriptedTag { tag: String },
    #[error("invalid request: {detail}")]
    InvalidRequest { detail: String },
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport { retryable, .. } => *retryable,
            LlmError::RateLimited { .. } => true,
            _ => false,
        }
    }
}

/// Anything that can turn a request into a completion.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for std::sync::Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<B: LlmBackend + ?Sized> LlmBackend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub max_concurrent: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 5, base_backoff_ms: 500, max_backoff_ms: 30_000, max_concurrent: 4 }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_attempts == 0 {
            return Err(LlmError::InvalidRequest { detail: "max_attempts must be at least 1".into() });
        }
        if self.max_concurrent == 0 {
            return Err(LlmError::InvalidRequest { detail: "max_concurrent must be at least 1".into() });
        }
        Ok(())
    }

    /// Delay before attempt `attempt + 1`, given `attempt` failures so far:
    /// exponential in the attempt number plus up to one base unit of jitter.
    pub fn backoff_ms(&self, attempt: u32, jitter_unit: f64) -> u64 {
        let exp = self.base_backoff_ms.saturating_mul(1u64 << attempt.saturating_sub(1).min(20));
        let jitter = (self.base_backoff_ms as f64 * jitter_unit.clamp(0.0, 1.0)) as u64;
        exp.saturating_add(jitter).min(self.max_backoff_ms.max(self.base_backoff_ms))
    }
}
