//! Prompt templates as editable text assets.
//!
//! An asset file has a small header, a `---` line, the body, and optionally
//! few-shot example blocks each introduced by a `===` line:
//!
//! ```text
//! name: lg
//! placeholders: claim, history
//! fewshot: 2
//! ---
//! Decide the label.
//! {examples}
//! Claim: {claim}
//! ===
//! first example
//! ===
//! second example
//! ```
//!
//! Placeholders are `{name}`; `{{` and `}}` produce literal braces. The
//! reserved `{examples}` placeholder marks where few-shot blocks go. When a
//! body has no `{examples}` marker the blocks are prepended.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::agents::History;

/// Reserved placeholder that receives the few-shot blocks.
pub const EXAMPLES_PLACEHOLDER: &str = "examples";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("missing binding for placeholder `{0}`")]
    MissingPlaceholder(String),
    #[error("binding names `{0}`, which the template does not use")]
    UnknownPlaceholder(String),
    #[error("template `{name}`: {detail}")]
    InvalidTemplate { name: String, detail: String },
    #[error("{file}: line {line}: {detail}")]
    Asset { file: String, line: usize, detail: String },
    #[error("no template named `{0}`")]
    UnknownTemplate(String),
    #[error("io error reading {path}: {detail}")]
    Io { path: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    body: String,
    required: BTreeSet<String>,
    fewshot: Vec<String>,
    segments: Vec<Segment>,
}

/// Placeholder name -> value.
pub type PromptBinding = BTreeMap<String, String>;

impl PromptTemplate {
    pub fn new(
        name: impl Into<String>,
        body: impl Into<String>,
        required: impl IntoIterator<Item = impl Into<String>>,
        fewshot: Vec<String>,
    ) -> Result<Self, PromptError> {
        let name = name.into();
        let body = body.into();
        let segments = parse_body(&body).map_err(|detail| PromptError::InvalidTemplate { name: name.clone(), detail })?;
        let used: BTreeSet<&str> = segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(n) => Some(n.as_str()),
                Segment::Text(_) => None,
            })
            .collect();
        let required: BTreeSet<String> = required.into_iter().map(Into::into).collect();
        for r in &required {
            if !used.contains(r.as_str()) {
                return Err(PromptError::InvalidTemplate {
                    name,
                    detail: format!("required placeholder `{r}` does not occur in the body"),
                });
            }
        }
        Ok(Self { name, body, required, fewshot, segments })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn required_placeholders(&self) -> &BTreeSet<String> {
        &self.required
    }

    pub fn fewshot_examples(&self) -> &[String] {
        &self.fewshot
    }

    /// Every placeholder name appearing in the body, `examples` excluded.
    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(n) if n != EXAMPLES_PLACEHOLDER => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Substitutes every placeholder. Bindings the template does not use are
    /// ignored.
    pub fn render(&self, binding: &PromptBinding) -> Result<String, PromptError> {
        self.render_inner(binding, false)
    }

    /// Like [`render`](Self::render) but rejects unused bindings.
    pub fn render_strict(&self, binding: &PromptBinding) -> Result<String, PromptError> {
        self.render_inner(binding, true)
    }

    fn render_inner(&self, binding: &PromptBinding, strict: bool) -> Result<String, PromptError> {
        for r in &self.required {
            if !binding.contains_key(r) {
                return Err(PromptError::MissingPlaceholder(r.clone()));
            }
        }
        if strict {
            let used = self.placeholders();
            if let Some(extra) = binding.keys().find(|k| !used.contains(k.as_str())) {
                return Err(PromptError::UnknownPlaceholder(extra.clone()));
            }
        }
        let examples = self.fewshot.join("\n\n");
        let mut out = String::with_capacity(self.body.len() + examples.len() + 256);
        let has_marker = self.segments.iter().any(|s| matches!(s, Segment::Slot(n) if n == EXAMPLES_PLACEHOLDER));
        if !has_marker && !self.fewshot.is_empty() {
            out.push_str(&examples);
            out.push_str("\n\n");
        }
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(n) if n == EXAMPLES_PLACEHOLDER && !binding.contains_key(n) => out.push_str(&examples),
                Segment::Slot(n) => match binding.get(n) {
                    Some(v) => out.push_str(v),
                    None => return Err(PromptError::MissingPlaceholder(n.clone())),
                },
            }
        }
        Ok(out)
    }

    /// Parses the asset text format described in the module docs.
    pub fn parse_asset(file: &str, text: &str) -> Result<Self, PromptError> {
        let err = |line: usize, detail: String| PromptError::Asset { file: file.to_string(), line, detail };
        let text = text.replace("\r\n", "\n");
        let lines: Vec<&str> = text.split('\n').collect();
        let sep = lines
            .iter()
            .position(|l| l.trim_end() == "---")
            .ok_or_else(|| err(1, "missing `---` line between header and body".into()))?;

        let mut name = None;
        let mut placeholders = Vec::new();
        let mut fewshot_count = None;
        for (i, line) in lines[..sep].iter().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err(i + 1, format!("expected `key: value`, got `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "placeholders" => {
                    placeholders = value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
                }
                "fewshot" => {
                    fewshot_count = Some(value.parse::<usize>().map_err(|_| err(i + 1, format!("bad few-shot count `{value}`")))?)
                }
                other => return Err(err(i + 1, format!("unknown header key `{other}`"))),
            }
        }
        let name = name.ok_or_else(|| err(1, "header lacks `name`".into()))?;

        let mut blocks: Vec<Vec<&str>> = vec![Vec::new()];
        for line in &lines[sep + 1..] {
            if line.trim_end() == "===" {
                blocks.push(Vec::new());
            } else {
                blocks.last_mut().unwrap().push(line);
            }
        }
        let join = |block: &[&str]| block.join("\n").trim_matches('\n').to_string();
        let body = join(&blocks[0]);
        let fewshot: Vec<String> = blocks[1..].iter().map(|b| join(b)).collect();
        let expected = fewshot_count.unwrap_or(0);
        if fewshot.len() != expected {
            return Err(err(
                sep + 1,
                format!("header declares {expected} few-shot examples, found {}", fewshot.len()),
            ));
        }
        Self::new(name, body, placeholders, fewshot).map_err(|e| match e {
            PromptError::InvalidTemplate { detail, .. } => err(sep + 2, detail),
            other => other,
        })
    }

    /// Serializes back to the asset format.
    pub fn to_asset(&self) -> String {
        let mut out = format!(
            "name: {}\nplaceholders: {}\nfewshot: {}\n---\n{}\n",
            self.name,
            self.required.iter().cloned().collect::<Vec<_>>().join(", "),
            self.fewshot.len(),
            self.body
        );
        for ex in &self.fewshot {
            out.push_str("===\n");
            out.push_str(ex);
            out.push('\n');
        }
        out
    }
}

fn parse_body(body: &str) -> Result<Vec<Segment>, String> {
    let mut segments = Vec::new();
    let mut text = String::new();
    let mut chars = body.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        match c {
            '{' if matches!(chars.peek(), Some((_, '{'))) => {
                chars.next();
                text.push('{');
            }
            '}' if matches!(chars.peek(), Some((_, '}'))) => {
                chars.next();
                text.push('}');
            }
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some((_, '}')) => break,
                        Some((_, ch)) if ch.is_ascii_alphanumeric() || ch == '_' => name.push(ch),
                        Some((_, ch)) => return Err(format!("invalid character `{ch}` in placeholder at byte {pos}")),
                        None => return Err(format!("unclosed `{{` at byte {pos}")),
                    }
                }
                if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(format!("invalid placeholder name at byte {pos}"));
                }
                if !text.is_empty() {
                    segments.push(Segment::Text(std::mem::take(&mut text)));
                }
                segments.push(Segment::Slot(name));
            }
            '}' => return Err(format!("unmatched `}}` at byte {pos}")),
            other => text.push(other),
        }
    }
    if !text.is_empty() {
        segments.push(Segment::Text(text));
    }
    Ok(segments)
}

/// Serializes a QA history as numbered `Qn:`/`An:` lines, or `NONE` when
/// empty.
pub fn render_history(history: &History) -> String {
    if history.is_empty() {
        return "NONE".to_string();
    }
    history
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, p)| format!("Q{n}: {}\nA{n}: {}", p.question.text, p.answer.text, n = i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Names of every shipped template.
pub const SHIPPED_TEMPLATES: &[&str] = &[
    "qg_iterative",
    "qg_all_at_once",
    "qg_no_reasoning",
    "ag_gold_evidence",
    "ag_pretrained_only",
    "lg",
    "lg_no_reasoning",
    "zeroshot_p1",
    "zeroshot_p2",
    "zeroshot_p3",
    "zeroshot_p4",
    "zeroshot_p5",
    "zeroshot_p6",
    "zeroshot_p7",
];

const BUILTIN_ASSETS: &[(&str, &str)] = &[
    ("qg_iterative.txt", include_str!("../assets/prompts/qg_iterative.txt")),
    ("qg_all_at_once.txt", include_str!("../assets/prompts/qg_all_at_once.txt")),
    ("qg_no_reasoning.txt", include_str!("../assets/prompts/qg_no_reasoning.txt")),
    ("ag_gold_evidence.txt", include_str!("../assets/prompts/ag_gold_evidence.txt")),
    ("ag_pretrained_only.txt", include_str!("../assets/prompts/ag_pretrained_only.txt")),
    ("lg.txt", include_str!("../assets/prompts/lg.txt")),
    ("lg_no_reasoning.txt", include_str!("../assets/prompts/lg_no_reasoning.txt")),
    ("zeroshot_p1.txt", include_str!("../assets/prompts/zeroshot_p1.txt")),
    ("zeroshot_p2.txt", include_str!("../assets/prompts/zeroshot_p2.txt")),
    ("zeroshot_p3.txt", include_str!("../assets/prompts/zeroshot_p3.txt")),
    ("zeroshot_p4.txt", include_str!("../assets/prompts/zeroshot_p4.txt")),
    ("zeroshot_p5.txt", include_str!("../assets/prompts/zeroshot_p5.txt")),
    ("zeroshot_p6.txt", include_str!("../assets/prompts/zeroshot_p6.txt")),
    ("zeroshot_p7.txt", include_str!("../assets/prompts/zeroshot_p7.txt")),
];

/// A named collection of templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateSet {
    /// The templates compiled into the library from `assets/prompts`.
    pub fn builtin() -> Self {
        let templates = BUILTIN_ASSETS
            .iter()
            .map(|(file, text)| {
                let t = PromptTemplate::parse_asset(file, text).unwrap_or_else(|e| panic!("shipped asset broken: {e}"));
                (t.name().to_string(), t)
            })
            .collect();
        Self { templates }
    }

    /// Builtin set with every `*.txt` asset in `dir` layered on top.
    pub fn builtin_with_overrides(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let mut set = Self::builtin();
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|e| PromptError::Io { path: dir.display().to_string(), detail: e.to_string() })?;
        let mut paths: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|e| PromptError::Io { path: path.display().to_string(), detail: e.to_string() })?;
            let t = PromptTemplate::parse_asset(&path.display().to_string(), &text)?;
            set.insert(t);
        }
        Ok(set)
    }

    pub fn insert(&mut self, t: PromptTemplate) {
        self.templates.insert(t.name().to_string(), t);
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, PromptError> {
        self.templates.get(name).ok_or_else(|| PromptError::UnknownTemplate(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Short content digest over every template, for run fingerprints.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for t in self.templates.values() {
            h.update(t.to_asset().as_bytes());
            h.update([0u8]);
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Maps `P1`..`P7` (any case) to the zero-shot template name.
pub fn zeroshot_template_name(prompt_id: &str) -> Option<&'static str> {
    let id = prompt_id.trim().to_ascii_lowercase();
    let n: usize = id.strip_prefix('p')?.parse().ok()?;
    SHIPPED_TEMPLATES.get(6 + n).filter(|_| (1..=7).contains(&n)).copied()
}
