//! Recon-Answer-Verify execution: single trajectories, multi-trajectory
//! voting, and resumable batch runs over a dataset.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{
    AgentError, AgentSettings, Agents, Answer, EvidenceMode, Exchange, History, QgOutcome, Question, QuestionTypes, Session,
};
use crate::dataset::{ClaimRecord, Dataset, LabelSpace};
use crate::llm::{LlmBackend, TokenCounts};
use crate::metrics::{evaluate, MetricsError, MetricsReport};
use crate::prompt::{render_history, zeroshot_template_name, PromptBinding, TemplateSet};

/// Prediction recorded for a claim whose trajectories all failed.
pub const FAILED_LABEL: &str = "__failed__";

const TRUNCATION_MARKER: &str = " …[truncated]";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("no trajectory finished successfully")]
    NoSuccessfulTrajectory,
    #[error("k sweep needs at least one k")]
    EmptySweep,
    #[error("k = {k} is below min_questions = {min}")]
    KBelowMinimum { k: usize, min: usize },
    #[error("{path}: line {line}: {detail}")]
    BadResultLine { path: String, line: usize, detail: String },
    #[error("unknown zero-shot prompt `{0}` (expected P1..P7)")]
    UnknownPrompt(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Strategy {
    /// All questions generated up front, then answered in order.
    #[serde(rename = "P1_all_at_once")]
    AllAtOnce,
    /// One question per step, conditioned on the answers so far.
    #[default]
    #[serde(rename = "P2_iterative")]
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RoleTemperatures {
    pub qg: Option<f64>,
    pub ag: Option<f64>,
    pub lg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    pub qtypes: QuestionTypes,
    /// Cap on questions per trajectory.
    pub k: usize,
    pub min_questions: usize,
    /// `None` means 3 for all-at-once and 1 for iterative.
    pub num_trajectories: Option<usize>,
    pub reasoning_on: bool,
    pub evidence_mode: EvidenceMode,
    /// Unset roles default to 0.0 for one trajectory and 0.7 when voting.
    pub temperatures: RoleTemperatures,
    pub max_reasks: usize,
    /// Evidence longer than this many characters is cut at the tail.
    pub evidence_char_budget: usize,
    /// Keep raw prompt/response transcripts in the results file.
    pub keep_transcripts: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Iterative,
            qtypes: QuestionTypes::T1AndT2,
            k: 10,
            min_questions: 1,
            num_trajectories: None,
            reasoning_on: true,
            evidence_mode: EvidenceMode::GoldEvidence,
            temperatures: RoleTemperatures::default(),
            max_reasks: 2,
            evidence_char_budget: 24_000,
            keep_transcripts: true,
        }
    }
}

impl PipelineConfig {
    pub fn variant(strategy: Strategy, qtypes: QuestionTypes) -> Self {
        Self { strategy, qtypes, ..Self::default() }
    }

    pub fn trajectories(&self) -> usize {
        self.num_trajectories.unwrap_or(match self.strategy {
            Strategy::AllAtOnce => 3,
            Strategy::Iterative => 1,
        })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let n = self.trajectories();
        if self.k == 0 {
            return Err(PipelineError::Config("k must be positive".into()));
        }
        if n == 0 {
            return Err(PipelineError::Config("num_trajectories must be positive".into()));
        }
        if n > 1 && n.is_multiple_of(2) {
            return Err(PipelineError::Config(format!("num_trajectories = {n} must be odd when voting")));
        }
        if self.k < self.min_questions {
            return Err(PipelineError::KBelowMinimum { k: self.k, min: self.min_questions });
        }
        for t in [self.temperatures.qg, self.temperatures.ag, self.temperatures.lg].into_iter().flatten() {
            if !(0.0..=2.0).contains(&t) {
                return Err(PipelineError::Config(format!("temperature {t} outside [0, 2]")));
            }
        }
        if self.evidence_char_budget == 0 {
            return Err(PipelineError::Config("evidence_char_budget must be positive".into()));
        }
        Ok(())
    }

    pub fn agent_settings(&self) -> AgentSettings {
        let default = if self.trajectories() > 1 { 0.7 } else { 0.0 };
        AgentSettings {
            max_reasks: self.max_reasks,
            qg_temperature: self.temperatures.qg.unwrap_or(default),
            ag_temperature: self.temperatures.ag.unwrap_or(default),
            lg_temperature: self.temperatures.lg.unwrap_or(default),
            ..AgentSettings::default()
        }
    }

    /// Short name such as `RAV(P2,T1&2)`.
    pub fn label(&self) -> String {
        let p = match self.strategy {
            Strategy::AllAtOnce => "P1",
            Strategy::Iterative => "P2",
        };
        let t = match self.qtypes {
            QuestionTypes::T1Only => "T1",
            QuestionTypes::T1AndT2 => "T1&2",
        };
        let mut s = format!("RAV({p},{t})");
        if self.evidence_mode == EvidenceMode::PretrainedOnly {
            s.push_str("^p");
        }
        if !self.reasoning_on {
            s.push_str(" w/o res");
        }
        s
    }

    /// Every field with defaults resolved, so equivalent configs hash alike.
    fn canonical(&self) -> serde_json::Value {
        let s = self.agent_settings();
        json!({
            "strategy": self.strategy,
            "qtypes": self.qtypes,
            "k": self.k,
            "min_questions": self.min_questions,
            "num_trajectories": self.trajectories(),
            "reasoning_on": self.reasoning_on,
            "evidence_mode": self.evidence_mode,
            "temperatures": [s.qg_temperature, s.ag_temperature, s.lg_temperature],
            "max_reasks": self.max_reasks,
            "evidence_char_budget": self.evidence_char_budget,
            "keep_transcripts": self.keep_transcripts,
        })
    }
}

fn digest(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("json value serializes");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum TrajectoryStatus {
    Ok,
    Failed { reason: String },
}

impl TrajectoryStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, TrajectoryStatus::Ok)
    }
}

/// Everything one pipeline execution produced for a claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub claim_id: String,
    pub index: usize,
    pub variant: String,
    pub history: History,
    pub qg_reasonings: Vec<String>,
    pub lg_reasoning: String,
    pub predicted: String,
    pub status: TrajectoryStatus,
    #[serde(default)]
    pub evidence_truncated: bool,
    pub tokens: TokenCounts,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcripts: Vec<Exchange>,
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimResult {
    pub claim_id: String,
    pub config_hash: String,
    pub gold: String,
    pub final_label: String,
    pub vote_detail: BTreeMap<String, usize>,
    pub trajectories: Vec<Trajectory>,
}

impl ClaimResult {
    pub fn failed(&self) -> bool {
        self.final_label == FAILED_LABEL
    }
}

/// Most frequent label among successful trajectories; ties go to the label
/// held by the earliest trajectory.
pub fn majority_vote(trajectories: &[Trajectory]) -> Result<(String, BTreeMap<String, usize>), PipelineError> {
    let labels: Vec<&str> = trajectories.iter().filter(|t| t.status.is_ok()).map(|t| t.predicted.as_str()).collect();
    vote(&labels)
}

pub(crate) fn vote(labels: &[&str]) -> Result<(String, BTreeMap<String, usize>), PipelineError> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.to_string()).or_default() += 1;
    }
    let best = counts.values().copied().max().ok_or(PipelineError::NoSuccessfulTrajectory)?;
    let winner = labels.iter().find(|l| counts[**l] == best).expect("max count is held by some label");
    Ok((winner.to_string(), counts))
}

/// Cuts `evidence` to `budget` characters, marking the cut.
pub fn truncate_evidence(evidence: &str, budget: usize) -> (String, bool) {
    match evidence.char_indices().nth(budget) {
        None => (evidence.to_string(), false),
        Some((cut, _)) => (format!("{}{TRUNCATION_MARKER}", &evidence[..cut]), true),
    }
}

/// Runs the pipeline for single claims.
pub struct Pipeline<'a> {
    backend: &'a dyn LlmBackend,
    templates: &'a TemplateSet,
    config: PipelineConfig,
    space: LabelSpace,
    identity: String,
}

impl<'a> Pipeline<'a> {
    pub fn new(backend: &'a dyn LlmBackend, templates: &'a TemplateSet, config: PipelineConfig, space: LabelSpace) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self { backend, templates, config, space, identity: String::new() })
    }

    /// Extra text folded into the config hash (e.g. the model name).
    pub fn with_identity(mut self, identity: impl Into<String>) -> Self {
        self.identity = identity.into();
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn config_hash(&self) -> String {
        digest(&json!({
            "pipeline": self.config.canonical(),
            "space": self.space,
            "templates": self.templates.fingerprint(),
            "identity": self.identity,
        }))
    }

    fn agents(&self) -> Agents<'_> {
        Agents::new(self.backend, self.templates, self.config.agent_settings())
    }

    /// Executes one trajectory. Agent errors end up in the trajectory's
    /// status rather than being returned.
    pub fn run_trajectory(&self, claim: &ClaimRecord, index: usize) -> Trajectory {
        let mut session = Session::new(format!("{}/{index}", claim.id));
        let mut state = TrajectoryState::default();
        let outcome = self.drive(claim, &mut session, &mut state);
        let (predicted, status, lg_reasoning) = match outcome {
            Ok(out) => (out.label, TrajectoryStatus::Ok, out.reasoning),
            Err(e) => (FAILED_LABEL.to_string(), TrajectoryStatus::Failed { reason: e.to_string() }, String::new()),
        };
        Trajectory {
            claim_id: claim.id.clone(),
            index,
            variant: self.config.label(),
            history: state.history,
            qg_reasonings: state.qg_reasonings,
            lg_reasoning,
            predicted,
            status,
            evidence_truncated: state.evidence_truncated,
            tokens: session.tokens,
            transcripts: if self.config.keep_transcripts { session.exchanges } else { Vec::new() },
        }
    }

    fn drive(&self, claim: &ClaimRecord, session: &mut Session, st: &mut TrajectoryState) -> Result<crate::agents::LgOutput, AgentError> {
        let cfg = &self.config;
        let agents = self.agents();
        let gold = cfg.evidence_mode == EvidenceMode::GoldEvidence;
        if gold && !claim.has_evidence() {
            return Err(AgentError::EvidenceMissing);
        }
        let mut evidence = Evidence::new(&claim.evidence, cfg.evidence_char_budget);
        st.evidence_truncated = evidence.truncated;

        match cfg.strategy {
            Strategy::Iterative => loop {
                if st.history.len() >= cfg.k {
                    break;
                }
                let out = agents.question(session, &claim.claim, &st.history, cfg.qtypes, cfg.reasoning_on, cfg.min_questions)?;
                if cfg.reasoning_on {
                    st.qg_reasonings.push(out.reasoning);
                }
                let question = match out.outcome {
                    QgOutcome::Stop => break,
                    QgOutcome::Ask(q) => q,
                };
                let step = st.history.len() + 1;
                let answer = self.answer(&agents, session, step, &question, &mut evidence)?;
                st.evidence_truncated |= evidence.truncated;
                st.history.push(question, answer);
            },
            Strategy::AllAtOnce => {
                let plan = agents.question_plan(session, &claim.claim, cfg.qtypes, cfg.k, cfg.min_questions)?;
                st.qg_reasonings.push(plan.reasoning);
                for (i, question) in plan.questions.into_iter().enumerate() {
                    let answer = self.answer(&agents, session, i + 1, &question, &mut evidence)?;
                    st.evidence_truncated |= evidence.truncated;
                    st.history.push(question, answer);
                }
            }
        }
        agents.label(session, &claim.claim, &st.history, &self.space, cfg.reasoning_on)
    }

    /// Answers with the current evidence; on a context overflow the budget
    /// is halved and the question retried, a few times at most.
    fn answer(&self, agents: &Agents<'_>, session: &mut Session, step: usize, q: &Question, evidence: &mut Evidence) -> Result<Answer, AgentError> {
        let mode = self.config.evidence_mode;
        let mut shrinks = 0;
        loop {
            let text = (mode == EvidenceMode::GoldEvidence).then_some(evidence.text.as_str());
            match agents.answer(session, step, q, text, mode) {
                Err(e) if e.is_context_overflow() && mode == EvidenceMode::GoldEvidence && shrinks < 3 => {
                    shrinks += 1;
                    evidence.shrink();
                }
                other => return other,
            }
        }
    }

    /// Runs every trajectory for a claim and votes.
    pub fn run_claim(&self, claim: &ClaimRecord) -> ClaimResult {
        let trajectories: Vec<Trajectory> = (0..self.config.trajectories()).map(|i| self.run_trajectory(claim, i)).collect();
        let (final_label, vote_detail) = majority_vote(&trajectories).unwrap_or_else(|_| (FAILED_LABEL.to_string(), BTreeMap::new()));
        ClaimResult {
            claim_id: claim.id.clone(),
            config_hash: self.config_hash(),
            gold: claim.label.clone(),
            final_label,
            vote_detail,
            trajectories,
        }
    }

    /// Renders the first question-generation prompt for `claim` without
    /// calling the backend.
    pub fn preview_prompt(&self, claim: &ClaimRecord) -> Result<String, AgentError> {
        let qtypes = self.config.qtypes.instruction().to_string();
        let (template, binding) = match self.config.strategy {
            Strategy::Iterative => (
                if self.config.reasoning_on { "qg_iterative" } else { "qg_no_reasoning" },
                PromptBinding::from([
                    ("claim".to_string(), claim.claim.clone()),
                    ("history".to_string(), render_history(&History::new())),
                    ("question_types".to_string(), qtypes),
                ]),
            ),
            Strategy::AllAtOnce => (
                "qg_all_at_once",
                PromptBinding::from([
                    ("claim".to_string(), claim.claim.clone()),
                    ("max_questions".to_string(), self.config.k.to_string()),
                    ("question_types".to_string(), qtypes),
                ]),
            ),
        };
        self.agents().render(template, &binding)
    }

    /// Processes `dataset` into `out`; see [`run_claims`].
    pub fn run_dataset(&self, dataset: &Dataset, out: &Path, workers: usize, progress: Option<&(dyn Fn(&Progress) + Sync)>) -> Result<RunSummary, PipelineError> {
        run_claims(dataset, out, workers, &self.config_hash(), progress, |c| self.run_claim(c))
    }

    /// Runs the dataset once per `k` and evaluates each run. Results go to
    /// `<out stem>.k<k>.jsonl` next to `out`.
    pub fn sweep_k(&self, dataset: &Dataset, ks: &[usize], out: &Path, workers: usize) -> Result<BTreeMap<usize, MetricsReport>, PipelineError> {
        if ks.is_empty() {
            return Err(PipelineError::EmptySweep);
        }
        if let Some(&k) = ks.iter().find(|&&k| k < self.config.min_questions || k == 0) {
            return Err(PipelineError::KBelowMinimum { k, min: self.config.min_questions });
        }
        let mut reports = BTreeMap::new();
        for &k in ks {
            let config = PipelineConfig { k, ..self.config.clone() };
            let run = Pipeline::new(self.backend, self.templates, config, self.space.clone())?.with_identity(self.identity.clone());
            let path = sweep_path(out, k);
            run.run_dataset(dataset, &path, workers, None)?;
            let hash = run.config_hash();
            let results: Vec<ClaimResult> = read_results(&path)?.into_iter().filter(|r| r.config_hash == hash).collect();
            reports.insert(k, evaluate(&results, dataset)?);
        }
        Ok(reports)
    }
}

pub fn sweep_path(out: &Path, k: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.k{k}.jsonl"))
}

#[derive(Default)]
struct TrajectoryState {
    history: History,
    qg_reasonings: Vec<String>,
    evidence_truncated: bool,
}

struct Evidence<'e> {
    original: &'e str,
    budget: usize,
    text: String,
    truncated: bool,
}

impl<'e> Evidence<'e> {
    fn new(original: &'e str, budget: usize) -> Self {
        let (text, truncated) = truncate_evidence(original, budget);
        Self { original, budget, text, truncated }
    }

    fn shrink(&mut self) {
        let current = self.budget.min(self.original.chars().count());
        self.budget = (current / 2).max(1);
        let (text, truncated) = truncate_evidence(self.original, self.budget);
        self.text = text;
        self.truncated |= truncated;
    }
}

/// Zero-shot baseline: one prompt per claim, no decomposition.
pub struct ZeroShot<'a> {
    backend: &'a dyn LlmBackend,
    templates: &'a TemplateSet,
    template: &'static str,
    space: LabelSpace,
    settings: AgentSettings,
    identity: String,
}

impl<'a> ZeroShot<'a> {
    pub fn new(backend: &'a dyn LlmBackend, templates: &'a TemplateSet, prompt_id: &str, space: LabelSpace) -> Result<Self, PipelineError> {
        let template = zeroshot_template_name(prompt_id).ok_or_else(|| PipelineError::UnknownPrompt(prompt_id.to_string()))?;
        Ok(Self { backend, templates, template, space, settings: AgentSettings::default(), identity: String::new() })
    }

    pub fn with_settings(mut self, settings: AgentSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_identity(mut self, identity: impl Into<String>) -> Self {
        self.identity = identity.into();
        self
    }

    pub fn config_hash(&self) -> String {
        digest(&json!({
            "zeroshot": self.template,
            "space": self.space,
            "templates": self.templates.fingerprint(),
            "temperature": self.settings.lg_temperature,
            "max_reasks": self.settings.max_reasks,
            "identity": self.identity,
        }))
    }

    pub fn run_claim(&self, claim: &ClaimRecord) -> ClaimResult {
        let agents = Agents::new(self.backend, self.templates, self.settings.clone());
        let mut session = Session::new(format!("{}/0", claim.id));
        let outcome = agents.zero_shot(&mut session, self.template, &claim.claim, &claim.evidence, &self.space);
        let (predicted, status) = match outcome {
            Ok(label) => (label, TrajectoryStatus::Ok),
            Err(e) => (FAILED_LABEL.to_string(), TrajectoryStatus::Failed { reason: e.to_string() }),
        };
        let trajectory = Trajectory {
            claim_id: claim.id.clone(),
            index: 0,
            variant: format!("zero-shot {}", self.template),
            history: History::new(),
            qg_reasonings: Vec::new(),
            lg_reasoning: String::new(),
            predicted,
            status,
            evidence_truncated: false,
            tokens: session.tokens,
            transcripts: session.exchanges,
        };
        let trajectories = vec![trajectory];
        let (final_label, vote_detail) = majority_vote(&trajectories).unwrap_or_else(|_| (FAILED_LABEL.to_string(), BTreeMap::new()));
        ClaimResult {
            claim_id: claim.id.clone(),
            config_hash: self.config_hash(),
            gold: claim.label.clone(),
            final_label,
            vote_detail,
            trajectories,
        }
    }

    pub fn run_dataset(&self, dataset: &Dataset, out: &Path, workers: usize, progress: Option<&(dyn Fn(&Progress) + Sync)>) -> Result<RunSummary, PipelineError> {
        run_claims(dataset, out, workers, &self.config_hash(), progress, |c| self.run_claim(c))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub total: usize,
    /// Already present in the output with the same config hash.
    pub skipped: usize,
    pub completed: usize,
    pub failed_claims: usize,
    pub failed_trajectories: usize,
}

impl RunSummary {
    /// Failed claims over claims completed in this run.
    pub fn failure_rate(&self) -> f64 {
        if self.completed == 0 {
            0.0
        } else {
            self.failed_claims as f64 / self.completed as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub done: usize,
    pub pending: usize,
    pub failed: usize,
}

#[derive(Deserialize)]
struct ResultKey {
    claim_id: String,
    config_hash: String,
}

/// Drops an unterminated final line (an interrupted write) and returns the
/// claim ids already completed under `hash`.
fn completed_ids(out: &Path, hash: &str) -> Result<HashSet<String>, PipelineError> {
    let mut done = HashSet::new();
    let Ok(mut file) = OpenOptions::new().read(true).write(true).open(out) else {
        return Ok(done);
    };
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let keep = match bytes.iter().rposition(|&b| b == b'\n') {
        Some(i) => i + 1,
        None => 0,
    };
    if keep < bytes.len() {
        log::warn!("{}: dropping {} bytes of an unterminated last line", out.display(), bytes.len() - keep);
        file.set_len(keep as u64)?;
        file.seek(SeekFrom::End(0))?;
    }
    for (i, line) in bytes[..keep].split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match serde_json::from_slice::<ResultKey>(line) {
            Ok(k) if k.config_hash == hash => {
                done.insert(k.claim_id);
            }
            Ok(_) => {}
            Err(e) => log::warn!("{}: line {}: ignoring unreadable result: {e}", out.display(), i + 1),
        }
    }
    Ok(done)
}

/// Applies `run` to every claim not already in `out` under `hash`, using
/// `workers` threads. Lines are appended in dataset order regardless of
/// which worker finishes first.
pub fn run_claims<F>(dataset: &Dataset, out: &Path, workers: usize, hash: &str, progress: Option<&(dyn Fn(&Progress) + Sync)>, run: F) -> Result<RunSummary, PipelineError>
where
    F: Fn(&ClaimRecord) -> ClaimResult + Sync,
{
    let done = completed_ids(out, hash)?;
    let pending: Vec<&ClaimRecord> = dataset.records().iter().filter(|r| !done.contains(&r.id)).collect();
    let mut summary = RunSummary { total: dataset.len(), skipped: dataset.len() - pending.len(), ..Default::default() };
    let mut file = OpenOptions::new().create(true).append(true).open(out)?;
    if pending.is_empty() {
        return Ok(summary);
    }

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, ClaimResult)>();
    let workers = workers.clamp(1, pending.len());
    std::thread::scope(|scope| -> Result<(), PipelineError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, pending, run) = (&next, &pending, &run);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(claim) = pending.get(i) else { break };
                if tx.send((i, run(claim))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut buffered: BTreeMap<usize, ClaimResult> = BTreeMap::new();
        let mut write_pos = 0;
        for (i, result) in rx {
            buffered.insert(i, result);
            while let Some(result) = buffered.remove(&write_pos) {
                let mut line = serde_json::to_vec(&result).map_err(std::io::Error::from)?;
                line.push(b'\n');
                file.write_all(&line)?;
                file.flush()?;
                write_pos += 1;
                summary.completed += 1;
                summary.failed_claims += usize::from(result.failed());
                summary.failed_trajectories += result.trajectories.iter().filter(|t| !t.status.is_ok()).count();
                if let Some(cb) = progress {
                    cb(&Progress { done: summary.completed, pending: pending.len(), failed: summary.failed_claims });
                }
            }
        }
        Ok(())
    })?;
    Ok(summary)
}

/// Reads a results file written by [`run_claims`].
pub fn read_results(path: &Path) -> Result<Vec<ClaimResult>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| PipelineError::BadResultLine {
            path: path.display().to_string(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}
