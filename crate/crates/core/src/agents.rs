//! The three agent roles (question generator, answer generator, label
//! generator) and the parsers that turn raw model text into typed results.
//!
//! Wire markers: `Reasoning:`, `Question:`, `Answer:`, `Label:`, the stop
//! marker `stop_iteration` and the abstain marker `INSUFFICIENT_EVIDENCE`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabelSpace;
use crate::llm::{CompletionRequest, LlmBackend, LlmError, TokenCounts};
use crate::prompt::{render_history, PromptBinding, PromptError, TemplateSet};

pub const STOP_MARKER: &str = "stop_iteration";
pub const ABSTAIN_MARKER: &str = "INSUFFICIENT_EVIDENCE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    /// Answerable true/false; checks one complete triple.
    Verification,
    /// Asks for an entity or a relationship.
    Inquiry,
}

impl QuestionType {
    /// Fallback for untagged questions: auxiliary-verb openers are
    /// verification questions.
    pub fn classify(text: &str) -> Self {
        let first = text
            .split_whitespace()
            .next()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .unwrap_or_default();
        match first.as_str() {
            "did" | "is" | "was" | "does" | "has" | "are" => QuestionType::Verification,
            _ => QuestionType::Inquiry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub text: String,
    pub qtype: QuestionType,
}

impl Question {
    pub fn new(text: impl Into<String>, qtype: QuestionType) -> Self {
        Self { text: text.into(), qtype }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QgOutcome {
    Stop,
    Ask(Question),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QgOutput {
    pub reasoning: String,
    pub outcome: QgOutcome,
}

/// Questions produced in one all-at-once call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionPlan {
    pub reasoning: String,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub text: String,
    pub abstained: bool,
}

impl Answer {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into(), abstained: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LgOutput {
    pub reasoning: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "QaWire", into = "QaWire")]
pub struct QaPair {
    pub question: Question,
    pub answer: Answer,
}

#[derive(Serialize, Deserialize)]
struct QaWire {
    q: String,
    qtype: QuestionType,
    a: String,
    abstained: bool,
}

impl From<QaWire> for QaPair {
    fn from(w: QaWire) -> Self {
        QaPair {
            question: Question { text: w.q, qtype: w.qtype },
            answer: Answer { text: w.a, abstained: w.abstained },
        }
    }
}

impl From<QaPair> for QaWire {
    fn from(p: QaPair) -> Self {
        QaWire { q: p.question.text, qtype: p.question.qtype, a: p.answer.text, abstained: p.answer.abstained }
    }
}

/// Question/answer pairs of one trajectory, in generation order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History {
    pairs: Vec<QaPair>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, question: Question, answer: Answer) {
        self.pairs.push(QaPair { question, answer });
    }

    pub fn pairs(&self) -> &[QaPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum QuestionTypes {
    #[serde(rename = "T1_only")]
    T1Only,
    #[default]
    #[serde(rename = "T1_and_T2")]
    T1AndT2,
}

impl QuestionTypes {
    pub fn instruction(self) -> &'static str {
        match self {
            QuestionTypes::T1Only => {
                "Ask only verification questions: each must be answerable with true or false and check one complete <entity, relationship, entity> triple from the claim. Prefix every question with [V]."
            }
            QuestionTypes::T1AndT2 => {
                "You may ask verification questions, answerable with true or false and checking one complete <entity, relationship, entity> triple (prefix [V]), or inquiry questions that ask for an entity or a relationship (prefix [I])."
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceMode {
    #[default]
    GoldEvidence,
    /// The answerer sees no evidence and relies on the model's own knowledge.
    PretrainedOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty output")]
    Empty,
    #[error("no `{0}` line found")]
    MissingMarker(&'static str),
    #[error("question is malformed: {0}")]
    BadQuestion(String),
    #[error("only verification ([V]) questions are allowed, got an inquiry question")]
    WrongQuestionType,
    #[error("{asked} question(s) asked so far but at least {required} are required before stopping; ask the next question instead of stop_iteration")]
    PrematureStop { asked: usize, required: usize },
    #[error("no questions found")]
    EmptyQuestionList,
    #[error("expected at least {need} questions, got {got}")]
    TooFewQuestions { got: usize, need: usize },
    #[error("answer text is empty")]
    EmptyAnswer,
    #[error("`{0}` does not name exactly one allowed label")]
    UnmappableLabel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("{role}: unparseable output after {attempts} attempt(s): {error}")]
    ParseFailure { role: String, attempts: usize, error: ParseError, raw: String },
    #[error("{role}: label `{raw}` could not be mapped into the label space")]
    UnmappableLabel { role: String, raw: String },
    #[error("question generator produced no questions")]
    EmptyQuestionList,
    #[error("gold-evidence answering requires non-empty evidence")]
    EvidenceMissing,
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

impl AgentError {
    pub fn is_context_overflow(&self) -> bool {
        matches!(self, AgentError::Backend(LlmError::ContextOverflow { .. }))
    }
}

// ---------------------------------------------------------------------------
// Parsing

/// Strips list/markdown decoration and returns the text after `marker`
/// (case-insensitive) when the line starts with it.
fn after_marker<'a>(line: &'a str, marker: &str) -> Option<&'a str> {
    let l = line.trim().trim_start_matches(['*', '#', '-', '>', ' ']);
    let head = l.get(..marker.len())?;
    if head.eq_ignore_ascii_case(marker) {
        Some(l[marker.len()..].trim_start_matches('*').trim())
    } else {
        None
    }
}

/// Accepts `Question:`, `Question 2:` and `Q2:` prefixes.
fn question_line(line: &str) -> Option<&str> {
    let l = line.trim().trim_start_matches(['*', '#', '-', '>', ' ']);
    let lower = l.to_ascii_lowercase();
    let rest = if lower.starts_with("question") {
        &l["question".len()..]
    } else if lower.starts_with('q') && l[1..].starts_with(|c: char| c.is_ascii_digit()) {
        &l[1..]
    } else {
        return None;
    };
    let rest = rest.trim_start_matches(|c: char| c.is_ascii_digit() || c == ' ');
    rest.strip_prefix(':').map(|r| r.trim_start_matches('*').trim())
}

fn is_stop_line(line: &str) -> bool {
    line.to_ascii_lowercase().contains(STOP_MARKER)
}

fn parse_question_text(raw: &str) -> Result<Question, ParseError> {
    let text = raw.trim();
    let (tag, text) = match text.get(..3).map(|t| t.to_ascii_uppercase()) {
        Some(t) if t == "[V]" => (Some(QuestionType::Verification), text[3..].trim()),
        Some(t) if t == "[I]" => (Some(QuestionType::Inquiry), text[3..].trim()),
        _ => (None, text),
    };
    if text.trim_end_matches('?').trim().is_empty() {
        return Err(ParseError::BadQuestion("empty question".into()));
    }
    if !text.ends_with('?') {
        return Err(ParseError::BadQuestion(format!("`{text}` does not end with `?`")));
    }
    Ok(Question { text: text.to_string(), qtype: tag.unwrap_or_else(|| QuestionType::classify(text)) })
}

/// Parses one iterative question-generator reply. Only the text up to the
/// first question or stop line counts.
pub fn parse_qg_output(raw: &str) -> Result<QgOutput, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut reasoning: Vec<&str> = Vec::new();
    let mut in_reasoning = false;
    for line in raw.lines() {
        if let Some(r) = after_marker(line, "Reasoning:") {
            in_reasoning = true;
            reasoning.push(r);
            continue;
        }
        if let Some(q) = question_line(line) {
            let reasoning = reasoning.join("\n").trim().to_string();
            if is_stop_line(q) {
                return Ok(QgOutput { reasoning, outcome: QgOutcome::Stop });
            }
            return Ok(QgOutput { reasoning, outcome: QgOutcome::Ask(parse_question_text(q)?) });
        }
        if is_stop_line(line) {
            let head = line.trim().to_ascii_lowercase();
            if in_reasoning && !head.starts_with(STOP_MARKER) {
                // A reasoning line that happens to mention the marker.
                reasoning.push(line.trim());
                continue;
            }
            return Ok(QgOutput { reasoning: reasoning.join("\n").trim().to_string(), outcome: QgOutcome::Stop });
        }
        if in_reasoning {
            reasoning.push(line.trim());
        }
    }
    Err(ParseError::MissingMarker("Question:"))
}

/// Parses an all-at-once reply: every question line, in order.
pub fn parse_question_plan(raw: &str) -> Result<QuestionPlan, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut reasoning = Vec::new();
    let mut questions = Vec::new();
    let mut in_reasoning = false;
    for line in raw.lines() {
        if let Some(r) = after_marker(line, "Reasoning:") {
            in_reasoning = questions.is_empty();
            reasoning.push(r);
        } else if let Some(q) = question_line(line) {
            in_reasoning = false;
            if is_stop_line(q) {
                continue;
            }
            questions.push(parse_question_text(q)?);
        } else if in_reasoning && !is_stop_line(line) {
            reasoning.push(line.trim());
        }
    }
    if questions.is_empty() {
        return Err(ParseError::EmptyQuestionList);
    }
    Ok(QuestionPlan { reasoning: reasoning.join("\n").trim().to_string(), questions })
}

/// Parses an answer-generator reply.
pub fn parse_answer(raw: &str) -> Result<Answer, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut lines = raw.lines();
    let first = lines
        .by_ref()
        .find_map(|l| after_marker(l, "Answer:"))
        .ok_or(ParseError::MissingMarker("Answer:"))?;
    let mut text = first.to_string();
    for l in lines.take_while(|l| !l.trim().is_empty()) {
        text.push('\n');
        text.push_str(l.trim());
    }
    let text = text.trim().to_string();
    if text.to_ascii_uppercase().contains(ABSTAIN_MARKER) {
        return Ok(Answer { text: ABSTAIN_MARKER.to_string(), abstained: true });
    }
    if text.is_empty() {
        return Err(ParseError::EmptyAnswer);
    }
    Ok(Answer { text, abstained: false })
}

/// Parses a label-generator reply into a label of `space`.
pub fn parse_label_output(raw: &str, space: &LabelSpace) -> Result<LgOutput, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut reasoning = Vec::new();
    let mut in_reasoning = false;
    for line in raw.lines() {
        if let Some(l) = after_marker(line, "Label:") {
            let label = normalize_label(l, space)?;
            return Ok(LgOutput { reasoning: reasoning.join("\n").trim().to_string(), label });
        }
        if let Some(r) = after_marker(line, "Reasoning:") {
            in_reasoning = true;
            reasoning.push(r);
        } else if in_reasoning {
            reasoning.push(line.trim());
        }
    }
    Err(ParseError::MissingMarker("Label:"))
}

/// Zero-shot prompts end with `label:`, so a bare label is accepted too.
pub fn parse_zero_shot_label(raw: &str, space: &LabelSpace) -> Result<String, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    match raw.lines().find_map(|l| after_marker(l, "label:")) {
        Some(l) => normalize_label(l, space),
        None => normalize_label(raw, space),
    }
}

/// Maps free text onto exactly one label of `space`.
///
/// Text is lowercased and split on anything that is not alphanumeric. An
/// exact token match wins; otherwise labels are searched as contiguous token
/// runs, occurrences nested inside a longer matched label are dropped, and
/// exactly one distinct label must remain.
pub fn normalize_label(raw: &str, space: &LabelSpace) -> Result<String, ParseError> {
    let lower = raw.to_lowercase();
    let tokens: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).collect();
    let joined = tokens.join("-");
    if space.contains(&joined) {
        return Ok(joined);
    }
    let mut hits: Vec<(usize, usize, usize)> = Vec::new(); // (start, end, label index)
    for (li, label) in space.labels().iter().enumerate() {
        let lt: Vec<&str> = label.split('-').collect();
        if lt.len() > tokens.len() {
            continue;
        }
        for start in 0..=tokens.len() - lt.len() {
            if tokens[start..start + lt.len()] == lt[..] {
                hits.push((start, start + lt.len(), li));
            }
        }
    }
    let kept: std::collections::BTreeSet<usize> = hits
        .iter()
        .filter(|&&(s, e, _)| !hits.iter().any(|&(s2, e2, _)| s2 <= s && e <= e2 && (e2 - s2) > (e - s)))
        .map(|&(_, _, li)| li)
        .collect();
    match kept.len() {
        1 => Ok(space.labels()[*kept.iter().next().unwrap()].clone()),
        _ => Err(ParseError::UnmappableLabel(raw.trim().to_string())),
    }
}

// ---------------------------------------------------------------------------
// Agents

/// One prompt/response exchange, kept for audit and export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub tag: String,
    pub prompt: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-trajectory call state: tag prefix, transcripts, token totals.
#[derive(Debug, Clone, Default)]
pub struct Session {
    prefix: String,
    pub exchanges: Vec<Exchange>,
    pub tokens: TokenCounts,
}

impl Session {
    pub fn new(prefix: impl Into<String>) -> Self {
        Self { prefix: prefix.into(), ..Default::default() }
    }

    pub fn tag(&self, role: &str) -> String {
        if self.prefix.is_empty() {
            role.to_string()
        } else {
            format!("{}/{role}", self.prefix)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSettings {
    /// Extra attempts after an unparseable reply.
    pub max_reasks: usize,
    pub qg_temperature: f64,
    pub ag_temperature: f64,
    pub lg_temperature: f64,
    pub qg_max_tokens: u32,
    pub ag_max_tokens: u32,
    pub lg_max_tokens: u32,
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self {
            max_reasks: 2,
            qg_temperature: 0.0,
            ag_temperature: 0.0,
            lg_temperature: 0.0,
            qg_max_tokens: 512,
            ag_max_tokens: 64,
            lg_max_tokens: 512,
        }
    }
}

/// Stateless agent wrappers over a template set and a backend.
pub struct Agents<'a> {
    backend: &'a dyn LlmBackend,
    templates: &'a TemplateSet,
    settings: AgentSettings,
}

struct Call<'s> {
    role: &'s str,
    template: &'s str,
    binding: PromptBinding,
    temperature: f64,
    max_tokens: u32,
    stop: Vec<String>,
    reminder: &'s str,
}

impl<'a> Agents<'a> {
    pub fn new(backend: &'a dyn LlmBackend, templates: &'a TemplateSet, settings: AgentSettings) -> Self {
        Self { backend, templates, settings }
    }

    pub fn settings(&self) -> &AgentSettings {
        &self.settings
    }

    /// Renders the prompt a call would send, without sending it.
    pub fn render(&self, template: &str, binding: &PromptBinding) -> Result<String, AgentError> {
        Ok(self.templates.get(template)?.render(binding)?)
    }

    fn ask<T>(&self, session: &mut Session, call: Call<'_>, parse: impl Fn(&str) -> Result<T, ParseError>) -> Result<T, AgentError> {
        let prompt = self.render(call.template, &call.binding)?;
        let tag = session.tag(call.role);
        let mut user_text = prompt.clone();
        let mut last = (ParseError::Empty, String::new());
        let attempts = self.settings.max_reasks + 1;
        for _ in 0..attempts {
            let request = CompletionRequest {
                system_text: None,
                user_text: user_text.clone(),
                temperature: call.temperature,
                max_tokens: call.max_tokens,
                stop_sequences: call.stop.clone(),
                tag: tag.clone(),
            };
            let response = match self.backend.complete(&request) {
                Ok(r) => r,
                Err(e) => {
                    session.exchanges.push(Exchange { tag: tag.clone(), prompt: user_text, response: String::new(), error: Some(e.to_string()) });
                    return Err(e.into());
                }
            };
            session.tokens.prompt += response.prompt_tokens;
            session.tokens.completion += response.completion_tokens;
            session.exchanges.push(Exchange { tag: tag.clone(), prompt: user_text, response: response.text.clone(), error: None });
            match parse(&response.text) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    user_text = format!(
                        "{prompt}\n\nYour previous reply could not be used: {e}.\n{}",
                        call.reminder
                    );
                    last = (e, response.text);
                }
            }
        }
        let (error, raw) = last;
        Err(match error {
            ParseError::UnmappableLabel(raw) => AgentError::UnmappableLabel { role: call.role.to_string(), raw },
            ParseError::EmptyQuestionList => AgentError::EmptyQuestionList,
            error => AgentError::ParseFailure { role: call.role.to_string(), attempts, error, raw },
        })
    }

    /// One iterative question-generation step. The evidence is never part of
    /// this prompt. A stop before `min_questions` pairs exist is re-asked
    /// with a nudge to keep questioning.
    pub fn question(
        &self,
        session: &mut Session,
        claim: &str,
        history: &History,
        qtypes: QuestionTypes,
        reasoning_on: bool,
        min_questions: usize,
    ) -> Result<QgOutput, AgentError> {
        let step = history.len() + 1;
        let role = format!("QG:{step}");
        let binding = PromptBinding::from([
            ("claim".to_string(), claim.to_string()),
            ("history".to_string(), render_history(history)),
            ("question_types".to_string(), qtypes.instruction().to_string()),
        ]);
        let reminder = if reasoning_on {
            "Reply exactly as:\nReasoning: <brief reasoning>\nQuestion: <[V] or [I]> <question>?\nor, when done:\nReasoning: <brief reasoning>\nstop_iteration"
        } else {
            "Reply exactly as:\nQuestion: <[V] or [I]> <question>?\nor, when done:\nstop_iteration"
        };
        let call = Call {
            role: &role,
            template: if reasoning_on { "qg_iterative" } else { "qg_no_reasoning" },
            binding,
            temperature: self.settings.qg_temperature,
            max_tokens: self.settings.qg_max_tokens,
            stop: vec!["\nClaim:".into(), "\nHistory:".into()],
            reminder,
        };
        let asked = history.len();
        self.ask(session, call, |raw| {
            let mut out = parse_qg_output(raw)?;
            match &out.outcome {
                QgOutcome::Stop if asked < min_questions => {
                    return Err(ParseError::PrematureStop { asked, required: min_questions })
                }
                QgOutcome::Ask(q) if qtypes == QuestionTypes::T1Only && q.qtype != QuestionType::Verification => {
                    return Err(ParseError::WrongQuestionType)
                }
                _ => {}
            }
            if !reasoning_on {
                out.reasoning.clear();
            }
            Ok(out)
        })
    }

    /// All-at-once question generation: at most `max_questions` are kept.
    pub fn question_plan(
        &self,
        session: &mut Session,
        claim: &str,
        qtypes: QuestionTypes,
        max_questions: usize,
        min_questions: usize,
    ) -> Result<QuestionPlan, AgentError> {
        let binding = PromptBinding::from([
            ("claim".to_string(), claim.to_string()),
            ("max_questions".to_string(), max_questions.to_string()),
            ("question_types".to_string(), qtypes.instruction().to_string()),
        ]);
        let call = Call {
            role: "QG:all",
            template: "qg_all_at_once",
            binding,
            temperature: self.settings.qg_temperature,
            max_tokens: self.settings.qg_max_tokens,
            stop: vec!["\nClaim:".into()],
            reminder: "Reply exactly as:\nReasoning: <brief reasoning>\nQuestion: <[V] or [I]> <question>?\n(one Question line per question)",
        };
        let need = min_questions.max(1);
        self.ask(session, call, |raw| {
            let mut plan = parse_question_plan(raw)?;
            if qtypes == QuestionTypes::T1Only && plan.questions.iter().any(|q| q.qtype != QuestionType::Verification) {
                return Err(ParseError::WrongQuestionType);
            }
            plan.questions.truncate(max_questions);
            if plan.questions.len() < need {
                return Err(ParseError::TooFewQuestions { got: plan.questions.len(), need });
            }
            Ok(plan)
        })
    }

    /// Answers one question, from the evidence or from model knowledge.
    pub fn answer(
        &self,
        session: &mut Session,
        step: usize,
        question: &Question,
        evidence: Option<&str>,
        mode: EvidenceMode,
    ) -> Result<Answer, AgentError> {
        let role = format!("AG:{step}");
        let mut binding = PromptBinding::from([("question".to_string(), question.text.clone())]);
        let template = match mode {
            EvidenceMode::GoldEvidence => {
                let evidence = evidence.filter(|e| !e.trim().is_empty()).ok_or(AgentError::EvidenceMissing)?;
                binding.insert("evidence".to_string(), evidence.to_string());
                "ag_gold_evidence"
            }
            EvidenceMode::PretrainedOnly => "ag_pretrained_only",
        };
        let call = Call {
            role: &role,
            template,
            binding,
            temperature: self.settings.ag_temperature,
            max_tokens: self.settings.ag_max_tokens,
            stop: vec![],
            reminder: "Reply exactly as:\nAnswer: <answer in 10 words or fewer, or INSUFFICIENT_EVIDENCE>",
        };
        self.ask(session, call, parse_answer)
    }

    /// Predicts the final label from the claim and the QA history.
    pub fn label(
        &self,
        session: &mut Session,
        claim: &str,
        history: &History,
        space: &LabelSpace,
        reasoning_on: bool,
    ) -> Result<LgOutput, AgentError> {
        let binding = PromptBinding::from([
            ("claim".to_string(), claim.to_string()),
            ("history".to_string(), render_history(history)),
            ("labels".to_string(), space.labels().join(", ")),
        ]);
        let call = Call {
            role: "LG",
            template: if reasoning_on { "lg" } else { "lg_no_reasoning" },
            binding,
            temperature: self.settings.lg_temperature,
            max_tokens: self.settings.lg_max_tokens,
            stop: vec!["\nClaim:".into()],
            reminder: if reasoning_on {
                "Reply exactly as:\nReasoning: <reasoning>\nLabel: <one allowed label>"
            } else {
                "Reply exactly as:\nLabel: <one allowed label>"
            },
        };
        self.ask(session, call, |raw| {
            let mut out = parse_label_output(raw, space)?;
            if !reasoning_on {
                out.reasoning.clear();
            }
            Ok(out)
        })
    }

    /// Single-call zero-shot baseline with one of the `zeroshot_p*` prompts.
    pub fn zero_shot(
        &self,
        session: &mut Session,
        template: &str,
        claim: &str,
        evidence: &str,
        space: &LabelSpace,
    ) -> Result<String, AgentError> {
        let binding = PromptBinding::from([
            ("claim".to_string(), claim.to_string()),
            ("evidence".to_string(), evidence.to_string()),
        ]);
        let call = Call {
            role: "ZS",
            template,
            binding,
            temperature: self.settings.lg_temperature,
            max_tokens: 16,
            stop: vec!["\n".into()],
            reminder: "Reply with the label only.",
        };
        self.ask(session, call, |raw| parse_zero_shot_label(raw, space))
    }
}
