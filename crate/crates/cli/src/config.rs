//! Flat `key = value` run configuration with section prefixes.
//!
//! ```text
//! # comments and blank lines are ignored
//! dataset.path = data/pfo_test.jsonl
//! dataset.space = five
//! backend.kind = http
//! backend.base_url = http://localhost:8000/v1
//! backend.model = llama-3.1-70b-instruct
//! pipeline.strategy = P2_iterative
//! pipeline.k = 10
//! output.path = results/pfo.jsonl
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rav_core::agents::{EvidenceMode, QuestionTypes};
use rav_core::dataset::{FieldMap, LabelSpace};
use rav_core::llm::RetryPolicy;
use rav_core::pipeline::{PipelineConfig, Strategy};

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub file: String,
    pub origin: Origin,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            Origin::Line(n) => write!(f, "{}:{n}: {}: {}", self.file, self.key, self.message),
            Origin::Flag => write!(f, "--{}: {}", self.key, self.message),
            Origin::Default => write!(f, "{}: {}: {}", self.file, self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Http,
    /// Tag-keyed JSON script (`backend.script`).
    Scripted,
    /// Replays a run log (`backend.replay_log`).
    Replay,
}

#[derive(Debug, Clone)]
pub struct BackendSettings {
    pub kind: BackendKind,
    pub base_url: String,
    pub model: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub script: Option<PathBuf>,
    pub replay_log: Option<PathBuf>,
    pub run_log: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset_path: PathBuf,
    pub space: LabelSpace,
    pub field_map: FieldMap,
    pub backend: BackendSettings,
    pub pipeline: PipelineConfig,
    pub workers: usize,
    pub prompts_dir: Option<PathBuf>,
    pub output_path: PathBuf,
}

/// Every accepted key. Flags may use the part after `pipeline.` alone.
pub const KEYS: &[&str] = &[
    "dataset.path",
    "dataset.space",
    "dataset.field_map",
    "backend.kind",
    "backend.base_url",
    "backend.model",
    "backend.timeout_secs",
    "backend.max_attempts",
    "backend.base_backoff_ms",
    "backend.max_backoff_ms",
    "backend.max_concurrent",
    "backend.script",
    "backend.replay_log",
    "backend.run_log",
    "pipeline.strategy",
    "pipeline.qtypes",
    "pipeline.k",
    "pipeline.min_questions",
    "pipeline.num_trajectories",
    "pipeline.reasoning_on",
    "pipeline.evidence_mode",
    "pipeline.temperature",
    "pipeline.qg_temperature",
    "pipeline.ag_temperature",
    "pipeline.lg_temperature",
    "pipeline.max_reasks",
    "pipeline.evidence_char_budget",
    "pipeline.keep_transcripts",
    "pipeline.workers",
    "prompts.dir",
    "output.path",
];

/// Maps a flag name to its config key: `pipeline.k` and `k` both give
/// `pipeline.k`.
pub fn flag_key(flag: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == flag || k.strip_prefix("pipeline.") == Some(flag))
}

/// Splits `args` into `(key, value)` overrides for known config keys and
/// the remaining arguments. Accepts `--key value` and `--key=value`.
pub fn extract_overrides(args: Vec<String>) -> (Vec<(String, String)>, Vec<String>) {
    let mut overrides = Vec::new();
    let mut rest = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (flag, None),
        };
        let Some(key) = flag_key(name) else {
            rest.push(arg);
            continue;
        };
        match inline.or_else(|| it.next()) {
            Some(value) => overrides.push((key.to_string(), value)),
            None => {
                // Leave it for the argument parser to report.
                rest.push(arg);
            }
        }
    }
    (overrides, rest)
}

struct Entry {
    value: String,
    origin: Origin,
}

struct Raw<'a> {
    file: &'a str,
    base: &'a Path,
    entries: BTreeMap<String, Entry>,
}

impl Raw<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let origin = self.entries.get(key).map_or(Origin::Default, |e| e.origin.clone());
        ConfigError { file: self.file.to_string(), origin, key: key.to_string(), message: message.into() }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| self.err(key, "required key is missing"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| self.err(key, format!("invalid value `{v}`: {e}"))),
        }
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key).map(|v| v.parse().map_err(|e| self.err(key, format!("invalid value `{v}`: {e}")))).transpose()
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(v) => Err(self.err(key, format!("expected true or false, got `{v}`"))),
        }
    }

    /// Resolves a path relative to the config file and checks it exists.
    fn existing_path(&self, key: &str) -> Result<Option<PathBuf>, ConfigError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let p = self.resolve(v);
        if !p.exists() {
            return Err(self.err(key, format!("path does not exist: {}", p.display())));
        }
        Ok(Some(p))
    }

    fn resolve(&self, v: &str) -> PathBuf {
        let p = PathBuf::from(v);
        if p.is_absolute() {
            p
        } else {
            self.base.join(p)
        }
    }
}

pub fn field_map_by_name(name: &str) -> Option<FieldMap> {
    match name {
        "default" => Some(FieldMap::default()),
        "fever_binary" => Some(FieldMap::fever_binary()),
        "explanation_as_evidence" => Some(FieldMap::explanation_as_evidence()),
        _ => None,
    }
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: file.clone(),
            origin: Origin::Default,
            key: "config".into(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &file, base, overrides)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, file: &str, base: &Path, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut raw = Raw { file, base, entries: BTreeMap::new() };
        let line_err = |n: usize, key: &str, message: String| ConfigError { file: file.to_string(), origin: Origin::Line(n), key: key.to_string(), message };
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(line_err(n, line, "expected `key = value`".into()));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(line_err(n, key, "unknown key".into()));
            }
            let entry = Entry { value: value.trim().to_string(), origin: Origin::Line(n) };
            if let Some(prev) = raw.entries.insert(key.to_string(), entry) {
                if let Origin::Line(p) = prev.origin {
                    return Err(line_err(n, key, format!("already set on line {p}")));
                }
            }
        }
        for (key, value) in overrides {
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError { file: file.into(), origin: Origin::Flag, key: key.clone(), message: "unknown key".into() });
            }
            raw.entries.insert(key.clone(), Entry { value: value.clone(), origin: Origin::Flag });
        }
        Self::build(&raw)
    }

    fn build(raw: &Raw<'_>) -> Result<Self, ConfigError> {
        let dataset_path = raw.require("dataset.path").map(|v| raw.resolve(v))?;
        if !dataset_path.exists() {
            return Err(raw.err("dataset.path", format!("path does not exist: {}", dataset_path.display())));
        }
        let space_name = raw.get("dataset.space").unwrap_or("five");
        let space = LabelSpace::by_name(space_name).ok_or_else(|| raw.err("dataset.space", format!("unknown label space `{space_name}`")))?;
        let name = raw.get("dataset.field_map").unwrap_or("default");
        let field_map = field_map_by_name(name).ok_or_else(|| raw.err("dataset.field_map", format!("unknown field map `{name}`")))?;

        let kind = match raw.get("backend.kind").unwrap_or("http") {
            "http" => BackendKind::Http,
            "scripted" => BackendKind::Scripted,
            "replay" => BackendKind::Replay,
            other => return Err(raw.err("backend.kind", format!("expected http, scripted or replay, got `{other}`"))),
        };
        let defaults = RetryPolicy::default();
        let retry = RetryPolicy {
            max_attempts: raw.parse("backend.max_attempts", defaults.max_attempts)?,
            base_backoff_ms: raw.parse("backend.base_backoff_ms", defaults.base_backoff_ms)?,
            max_backoff_ms: raw.parse("backend.max_backoff_ms", defaults.max_backoff_ms)?,
            max_concurrent: raw.parse("backend.max_concurrent", defaults.max_concurrent)?,
        };
        retry.validate().map_err(|e| raw.err("backend.max_attempts", e.to_string()))?;
        let script = raw.existing_path("backend.script")?;
        let replay_log = raw.existing_path("backend.replay_log")?;
        let base_url = match (kind, raw.get("backend.base_url")) {
            (BackendKind::Http, None) => return Err(raw.err("backend.base_url", "required for backend.kind = http")),
            (_, url) => url.unwrap_or_default().to_string(),
        };
        if kind == BackendKind::Scripted && script.is_none() {
            return Err(raw.err("backend.script", "required for backend.kind = scripted"));
        }
        if kind == BackendKind::Replay && replay_log.is_none() {
            return Err(raw.err("backend.replay_log", "required for backend.kind = replay"));
        }
        let backend = BackendSettings {
            kind,
            base_url,
            model: raw.get("backend.model").unwrap_or_default().to_string(),
            timeout: Duration::from_secs(raw.parse("backend.timeout_secs", 120u64)?),
            retry,
            script,
            replay_log,
            run_log: raw.get("backend.run_log").map(|v| raw.resolve(v)),
        };

        let strategy = match raw.get("pipeline.strategy").unwrap_or("P2_iterative") {
            "P1_all_at_once" | "P1" => Strategy::AllAtOnce,
            "P2_iterative" | "P2" => Strategy::Iterative,
            other => return Err(raw.err("pipeline.strategy", format!("expected P1_all_at_once or P2_iterative, got `{other}`"))),
        };
        let qtypes = match raw.get("pipeline.qtypes").unwrap_or("T1_and_T2") {
            "T1_only" | "T1" => QuestionTypes::T1Only,
            "T1_and_T2" | "T1&2" => QuestionTypes::T1AndT2,
            other => return Err(raw.err("pipeline.qtypes", format!("expected T1_only or T1_and_T2, got `{other}`"))),
        };
        let evidence_mode = match raw.get("pipeline.evidence_mode").unwrap_or("gold_evidence") {
            "gold_evidence" => EvidenceMode::GoldEvidence,
            "pretrained_only" => EvidenceMode::PretrainedOnly,
            other => return Err(raw.err("pipeline.evidence_mode", format!("expected gold_evidence or pretrained_only, got `{other}`"))),
        };
        let all: Option<f64> = raw.opt("pipeline.temperature")?;
        let defaults = PipelineConfig::default();
        let mut pipeline = PipelineConfig {
            strategy,
            qtypes,
            k: raw.parse("pipeline.k", defaults.k)?,
            min_questions: raw.parse("pipeline.min_questions", defaults.min_questions)?,
            num_trajectories: raw.opt("pipeline.num_trajectories")?,
            reasoning_on: raw.bool("pipeline.reasoning_on", defaults.reasoning_on)?,
            evidence_mode,
            temperatures: Default::default(),
            max_reasks: raw.parse("pipeline.max_reasks", defaults.max_reasks)?,
            evidence_char_budget: raw.parse("pipeline.evidence_char_budget", defaults.evidence_char_budget)?,
            keep_transcripts: raw.bool("pipeline.keep_transcripts", defaults.keep_transcripts)?,
        };
        pipeline.temperatures.qg = raw.opt("pipeline.qg_temperature")?.or(all);
        pipeline.temperatures.ag = raw.opt("pipeline.ag_temperature")?.or(all);
        pipeline.temperatures.lg = raw.opt("pipeline.lg_temperature")?.or(all);
        pipeline.validate().map_err(|e| raw.err("pipeline", e.to_string()))?;

        let prompts_dir = raw.existing_path("prompts.dir")?;
        let output_path = raw.require("output.path").map(|v| raw.resolve(v))?;
        if let Some(parent) = output_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.is_dir() {
                return Err(raw.err("output.path", format!("directory does not exist: {}", parent.display())));
            }
        }
        Ok(Self {
            dataset_path,
            space,
            field_map,
            backend,
            pipeline,
            workers: raw.parse("pipeline.workers", 1usize)?.max(1),
            prompts_dir,
            output_path,
        })
    }
}
