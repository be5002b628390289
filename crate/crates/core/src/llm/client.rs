use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CompletionRequest, CompletionResponse, LlmBackend, LlmError, RetryPolicy};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub prompt: u64,
    pub completion: u64,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub tag: String,
    pub request: CompletionRequest,
    /// `None` when the final attempt failed.
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<LlmError>,
    pub tokens: TokenCounts,
    pub latency_ms: u64,
    pub attempt: u32,
}

/// Append-only JSONL log of every request outcome.
#[derive(Debug)]
pub struct RunLog {
    out: Mutex<BufWriter<File>>,
}

impl RunLog {
    pub fn append(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { out: Mutex::new(BufWriter::new(file)) })
    }

    pub fn record(&self, entry: &RunLogEntry) -> std::io::Result<()> {
        let mut out = self.out.lock().unwrap();
        serde_json::to_writer(&mut *out, entry)?;
        out.write_all(b"\n")?;
        out.flush()
    }
}

#[derive(Debug, Default)]
struct Gate {
    in_flight: usize,
    peak: usize,
}

#[derive(Debug)]
struct Limiter {
    max: usize,
    gate: Mutex<Gate>,
    freed: Condvar,
}

impl Limiter {
    fn acquire(&self) -> Permit<'_> {
        let mut gate = self.gate.lock().unwrap();
        while gate.in_flight >= self.max {
            gate = self.freed.wait(gate).unwrap();
        }
        gate.in_flight += 1;
        gate.peak = gate.peak.max(gate.in_flight);
        Permit { limiter: self }
    }
}

struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut gate = self.limiter.gate.lock().unwrap();
        gate.in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

/// Wraps a backend with retries, a global in-flight cap and optional run
/// logging. Cheap to clone; clones share the limiter and log.
#[derive(Clone)]
pub struct Client {
    inner: Arc<dyn LlmBackend>,
    policy: RetryPolicy,
    limiter: Arc<Limiter>,
    log: Option<Arc<RunLog>>,
    sleep: Arc<dyn Fn(Duration) + Send + Sync>,
}

impl std::fmt::Debug for Client {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Client").field("policy", &self.policy).finish_non_exhaustive()
    }
}

impl Client {
    pub fn new(inner: impl LlmBackend + 'static, policy: RetryPolicy) -> Self {
        Self::from_arc(Arc::new(inner), policy)
    }

    pub fn from_arc(inner: Arc<dyn LlmBackend>, policy: RetryPolicy) -> Self {
        let max = policy.max_concurrent.max(1);
        Self {
            inner,
            policy,
            limiter: Arc::new(Limiter { max, gate: Mutex::new(Gate::default()), freed: Condvar::new() }),
            log: None,
            sleep: Arc::new(std::thread::sleep),
        }
    }

    pub fn with_log(mut self, log: RunLog) -> Self {
        self.log = Some(Arc::new(log));
        self
    }

    /// Replaces `thread::sleep` between attempts (tests use a no-op).
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn policy(&self) -> &RetryPolicy {
        &self.policy
    }

    /// Highest number of simultaneous in-flight requests seen so far.
    pub fn peak_in_flight(&self) -> usize {
        self.limiter.gate.lock().unwrap().peak
    }

    fn log(&self, request: &CompletionRequest, outcome: &Result<CompletionResponse, LlmError>, attempt: u32) {
        let Some(log) = &self.log else { return };
        let entry = match outcome {
            Ok(r) => RunLogEntry {
                tag: request.tag.clone(),
                request: request.clone(),
                response: Some(r.text.clone()),
                error: None,
                tokens: TokenCounts { prompt: r.prompt_tokens, completion: r.completion_tokens },
                latency_ms: r.latency_ms,
                attempt,
            },
            Err(e) => RunLogEntry {
                tag: request.tag.clone(),
                request: request.clone(),
                response: None,
                error: Some(e.clone()),
                tokens: TokenCounts::default(),
                latency_ms: 0,
                attempt,
            },
        };
        if let Err(e) = log.record(&entry) {
            log::warn!("failed to append run log entry for {}: {e}", request.tag);
        }
    }
}

impl LlmBackend for Client {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        request.validate()?;
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.limiter.acquire();
                self.inner.complete(request)
            };
            match outcome {
                Err(e) if e.is_retryable() && attempt < self.policy.max_attempts => {
                    let mut delay = self.policy.backoff_ms(attempt, rand::thread_rng().gen::<f64>());
                    if let LlmError::RateLimited { retry_after_ms: Some(ms) } = e {
                        delay = delay.max(ms);
                    }
                    log::debug!("{}: attempt {attempt} failed ({e}); retrying in {delay} ms", request.tag);
                    (self.sleep)(Duration::from_millis(delay));
                }
                outcome => {
                    self.log(request, &outcome, attempt);
                    return outcome;
                }
            }
        }
    }
}
