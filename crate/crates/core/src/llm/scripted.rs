use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{CompletionRequest, CompletionResponse, LlmBackend, LlmError, RunLogEntry};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScriptedReply {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl From<&str> for ScriptedReply {
    fn from(text: &str) -> Self {
        Self { text: text.to_string(), ..Default::default() }
    }
}

impl From<String> for ScriptedReply {
    fn from(text: String) -> Self {
        Self { text, ..Default::default() }
    }
}

#[derive(Debug)]
enum Entry {
    /// Returned on every call.
    Fixed(ScriptedReply),
    /// Consumed front to back, one per call.
    Queue(VecDeque<Result<ScriptedReply, LlmError>>),
}

/// Deterministic backend answering from a tag-keyed script.
///
/// A request tag like `c7/0/QG:3` is looked up as-is, then with leading
/// `/`-segments stripped (`0/QG:3`, `QG:3`), then as a role wildcard
/// (`QG:*`), then `*`. The first key present wins.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    script: Mutex<HashMap<String, Entry>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptValue {
    One(String),
    Many(Vec<String>),
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same text for every call with this tag.
    pub fn with(self, tag: impl Into<String>, text: impl Into<ScriptedReply>) -> Self {
        self.script.lock().unwrap().insert(tag.into(), Entry::Fixed(text.into()));
        self
    }

    /// Successive calls with this tag consume `texts` in order.
    pub fn with_sequence<T: Into<ScriptedReply>>(self, tag: impl Into<String>, texts: impl IntoIterator<Item = T>) -> Self {
        let queue = texts.into_iter().map(|t| Ok(t.into())).collect();
        self.script.lock().unwrap().insert(tag.into(), Entry::Queue(queue));
        self
    }

    /// Loads a JSON object mapping tag -> string or tag -> list of strings.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let map: BTreeMap<String, ScriptValue> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut backend = Self::new();
        for (tag, value) in map {
            backend = match value {
                ScriptValue::One(s) => backend.with(tag, s),
                ScriptValue::Many(v) => backend.with_sequence(tag, v),
            };
        }
        Ok(backend)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, String> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| format!("{}: {e}", path.as_ref().display()))?;
        Self::from_json(&text)
    }

    /// Rebuilds a backend that replays a run log: per tag, the recorded
    /// responses and errors in the order they were written.
    pub fn from_run_log(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut queues: HashMap<String, VecDeque<Result<ScriptedReply, LlmError>>> = HashMap::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: RunLogEntry = serde_json::from_str(&line).map_err(std::io::Error::from)?;
            let item = match (entry.response, entry.error) {
                (Some(text), _) => Ok(ScriptedReply { text, prompt_tokens: entry.tokens.prompt, completion_tokens: entry.tokens.completion }),
                (None, Some(e)) => Err(e),
                (None, None) => continue,
            };
            queues.entry(entry.tag).or_default().push_back(item);
        }
        let script = queues.into_iter().map(|(k, q)| (k, Entry::Queue(q))).collect();
        Ok(Self { script: Mutex::new(script) })
    }

    fn lookup_keys(tag: &str) -> Vec<String> {
        let mut keys = vec![tag.to_string()];
        let mut rest = tag;
        while let Some((_, tail)) = rest.split_once('/') {
            keys.push(tail.to_string());
            rest = tail;
        }
        if let Some((role, _)) = rest.split_once(':') {
            keys.push(format!("{role}:*"));
        }
        keys.push("*".to_string());
        keys
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let mut script = self.script.lock().unwrap();
        for key in Self::lookup_keys(&request.tag) {
            let reply = match script.get_mut(&key) {
                None => continue,
                Some(Entry::Fixed(r)) => r.clone(),
                Some(Entry::Queue(q)) => match q.pop_front() {
                    Some(Ok(r)) => r,
                    Some(Err(e)) => return Err(e),
                    None => return Err(LlmError::UnscriptedTag { tag: request.tag.clone() }),
                },
            };
            return Ok(CompletionResponse {
                text: reply.text.trim_end().to_string(),
                prompt_tokens: reply.prompt_tokens,
                completion_tokens: reply.completion_tokens,
                latency_ms: 0,
            });
        }
        Err(LlmError::UnscriptedTag { tag: request.tag.clone() })
    }
}
