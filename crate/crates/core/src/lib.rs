//! Claim verification by iterative question decomposition: a question
//! generator, an answer generator and a label generator driven over a
//! chat-completion backend, plus the dataset, prompt and metrics plumbing
//! around them.

pub mod agents;
pub mod dataset;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod prompt;

pub use agents::{
    AgentError, AgentSettings, Agents, Answer, EvidenceMode, History, LgOutput, ParseError, QaPair, QgOutcome, QgOutput, Question, QuestionType,
    QuestionTypes,
};
pub use dataset::{load_jsonl, ClaimRecord, Dataset, DatasetError, FieldMap, LabelSpace, SplitSizes, SplitStrategy, SplitTag};
pub use llm::{
    Client, CompletionRequest, CompletionResponse, HttpBackend, HttpConfig, LlmBackend, LlmError, RetryPolicy, RunLog, ScriptedBackend, TokenCounts,
};
pub use metrics::{
    complexity_profile, corpus_stats, evaluate, fleiss_kappa, ConfusionMatrix, CorpusStats, MetricsError, MetricsReport, RatingMatrix, TokenCounter,
    WhitespaceTokens,
};
pub use pipeline::{
    majority_vote, read_results, ClaimResult, Pipeline, PipelineConfig, PipelineError, RunSummary, Strategy, Trajectory, TrajectoryStatus, ZeroShot,
    FAILED_LABEL,
};
pub use prompt::{PromptError, PromptTemplate, TemplateSet};
