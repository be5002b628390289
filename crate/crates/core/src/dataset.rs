//! Fact-checking corpora: label spaces, claim records, JSONL IO and splits.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON object: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { field: String, line: usize },
    #[error("line {line}: label `{value}` is not in the label space")]
    UnknownLabel { value: String, line: usize },
    #[error("line {line}: claim text is empty")]
    EmptyClaim { line: usize },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("invalid label space: {0}")]
    InvalidSpace(String),
    #[error("label `{0}` is not in the source label space")]
    SourceNotInSpace(String),
    #[error("label `{0}` is not in the target label space")]
    TargetNotInSpace(String),
    #[error("split sizes sum to {requested} but the dataset has {available} records")]
    SizesExceedDataset { requested: usize, available: usize },
}

/// Ordered set of admissible veracity labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSpace {
    name: String,
    labels: Vec<String>,
}

impl LabelSpace {
    pub fn new<S: Into<String>>(name: impl Into<String>, labels: Vec<S>) -> Result<Self, DatasetError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(DatasetError::InvalidSpace("no labels".into()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !is_canonical_label(label) {
                return Err(DatasetError::InvalidSpace(format!(
                    "`{label}` is not a lowercase hyphen-joined label"
                )));
            }
            if !seen.insert(label.as_str()) {
                return Err(DatasetError::InvalidSpace(format!("`{label}` listed twice")));
            }
        }
        Ok(Self { name: name.into(), labels })
    }

    /// The PolitiFact-style 5-class space, most to least truthful.
    pub fn five_class() -> Self {
        Self::builtin("five", &["true", "mostly-true", "half-true", "mostly-false", "false"])
    }

    /// RAWFC-style 3-class space.
    pub fn three_class() -> Self {
        Self::builtin("three", &["true", "half", "false"])
    }

    /// HOVER/FEVEROUS-style binary space.
    pub fn binary() -> Self {
        Self::builtin("binary", &["supported", "refuted"])
    }

    /// Raw PolitiFact verdicts before `pants-fire` is folded into `false`.
    pub fn politifact_six() -> Self {
        Self::builtin(
            "politifact-six",
            &["true", "mostly-true", "half-true", "mostly-false", "false", "pants-fire"],
        )
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "five" | "5" | "five-class" => Some(Self::five_class()),
            "three" | "3" | "three-class" => Some(Self::three_class()),
            "binary" | "2" | "two" | "two-class" => Some(Self::binary()),
            "politifact-six" | "six" | "6" => Some(Self::politifact_six()),
            _ => None,
        }
    }

    fn builtin(name: &str, labels: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl fmt::Display for LabelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.name, self.labels.join(", "))
    }
}

fn is_canonical_label(label: &str) -> bool {
    !label.is_empty()
        && label
            .split('-')
            .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()))
}

/// Lowercases and turns spaces/underscores into hyphens. Used when reading
/// verdict strings such as `Mostly True` from source files.
pub fn canonicalize_label_token(raw: &str) -> String {
    raw.trim()
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("-")
}

/// A date kept exactly as it appeared in the source, plus its ISO-8601
/// reading when one could be made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDate {
    pub raw: String,
    pub parsed: Option<NaiveDate>,
}

impl RecordDate {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let parsed = parse_loose_date(&raw);
        Self { raw, parsed }
    }
}

fn parse_loose_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    const FORMATS: &[&str] = &["%Y-%m-%d", "%m/%d/%Y", "%B %d, %Y", "%b %d, %Y", "%d %B %Y", "%Y/%m/%d"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
        .or_else(|| s.get(..10).and_then(|head| NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()))
}

impl Serialize for RecordDate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for RecordDate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d).map(RecordDate::new)
    }
}

/// One claim with its evidence, gold label and source metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub label: String,
    pub claim: String,
    pub evidence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factcheck_analysis_link: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factcheck_date: Option<RecordDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_checker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_date: Option<RecordDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_source: Option<String>,
    /// Fields the loader did not recognise, kept verbatim.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl ClaimRecord {
    pub fn new(id: impl Into<String>, label: impl Into<String>, claim: impl Into<String>, evidence: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            claim: claim.into(),
            evidence: evidence.into(),
            speaker: None,
            factcheck_analysis_link: None,
            factcheck_date: None,
            fact_checker: None,
            claim_date: None,
            claim_source: None,
            extra: BTreeMap::new(),
        }
    }

    /// False for records that can only be run evidence-free.
    pub fn has_evidence(&self) -> bool {
        !self.evidence.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
    Validation,
    Unsplit,
}

/// Key renames and label-token rewrites applied while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldMap {
    /// source key -> canonical key (e.g. `explain` -> `evidence`)
    pub keys: BTreeMap<String, String>,
    /// source label token -> canonical label (e.g. `NOT_SUPPORTED` -> `refuted`)
    pub labels: BTreeMap<String, String>,
}

impl FieldMap {
    /// FEVER-family verdict tokens onto the binary space.
    pub fn fever_binary() -> Self {
        let labels = [
            ("SUPPORTED", "supported"),
            ("SUPPORTS", "supported"),
            ("REFUTES", "refuted"),
            ("REFUTED", "refuted"),
            ("NOT_SUPPORTED", "refuted"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        Self { keys: BTreeMap::new(), labels }
    }

    /// LIAR-RAW / RAWFC: the author-written explanation is the gold evidence.
    pub fn explanation_as_evidence() -> Self {
        let mut keys = BTreeMap::new();
        keys.insert("explain".to_string(), "evidence".to_string());
        keys.insert("event_id".to_string(), "id".to_string());
        Self { keys, labels: BTreeMap::new() }
    }

    fn map_label(&self, raw: &str) -> String {
        match self.labels.get(raw) {
            Some(mapped) => mapped.clone(),
            None => canonicalize_label_token(raw),
        }
    }
}

/// An immutable, validated collection of claims over one label space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<ClaimRecord>,
    space: LabelSpace,
    split: SplitTag,
}

impl Dataset {
    pub fn new(records: Vec<ClaimRecord>, space: LabelSpace, split: SplitTag) -> Result<Self, DatasetError> {
        let mut ids = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.claim.trim().is_empty() {
                return Err(DatasetError::EmptyClaim { line: i + 1 });
            }
            if !space.contains(&r.label) {
                return Err(DatasetError::UnknownLabel { value: r.label.clone(), line: i + 1 });
            }
            if !ids.insert(r.id.as_str()) {
                return Err(DatasetError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { records, space, split })
    }

    pub fn records(&self) -> &[ClaimRecord] {
        &self.records
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClaimRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.id.as_str()).collect()
    }

    /// Ids of records whose evidence is blank.
    pub fn missing_evidence(&self) -> Vec<&str> {
        self.records.iter().filter(|r| !r.has_evidence()).map(|r| r.id.as_str()).collect()
    }

    /// Record count per label, in label-space order (zero counts included).
    pub fn label_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; self.space.len()];
        for r in &self.records {
            if let Some(i) = self.space.index_of(&r.label) {
                counts[i] += 1;
            }
        }
        self.space.labels().iter().cloned().zip(counts).collect()
    }

    pub fn with_split(mut self, split: SplitTag) -> Self {
        self.split = split;
        self
    }

    /// Rewrites every label through `mapping` (identity where absent) into
    /// `target`.
    pub fn merge_labels(&self, mapping: &BTreeMap<String, String>, target: &LabelSpace) -> Result<Dataset, DatasetError> {
        for (from, to) in mapping {
            if !self.space.contains(from) {
                return Err(DatasetError::SourceNotInSpace(from.clone()));
            }
            if !target.contains(to) {
                return Err(DatasetError::TargetNotInSpace(to.clone()));
            }
        }
        let mut records = self.records.clone();
        for r in &mut records {
            if let Some(to) = mapping.get(&r.label) {
                r.label = to.clone();
            }
            if !target.contains(&r.label) {
                return Err(DatasetError::TargetNotInSpace(r.label.clone()));
            }
        }
        Ok(Dataset { records, space: target.clone(), split: self.split })
    }

    /// Draws disjoint train/test/validation subsets of exactly the requested
    /// sizes. Deterministic for a fixed seed.
    pub fn split_by(&self, sizes: SplitSizes, seed: u64, strategy: SplitStrategy) -> Result<(Dataset, Dataset, Dataset), DatasetError> {
        let requested = sizes.total();
        if requested > self.records.len() {
            return Err(DatasetError::SizesExceedDataset { requested, available: self.records.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let assignment: [Vec<usize>; 3] = match strategy {
            SplitStrategy::Random => {
                let mut order: Vec<usize> = (0..self.records.len()).collect();
                order.shuffle(&mut rng);
                let (train, rest) = order.split_at(sizes.train);
                let (test, rest) = rest.split_at(sizes.test);
                [train.to_vec(), test.to_vec(), rest[..sizes.validation].to_vec()]
            }
            SplitStrategy::Stratified => {
                let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.space.len()];
                for (i, r) in self.records.iter().enumerate() {
                    by_class[self.space.index_of(&r.label).expect("validated label")].push(i);
                }
                let class_sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
                let quotas = stratified_quotas(&class_sizes, &[sizes.train, sizes.test, sizes.validation]);
                let mut out: [Vec<usize>; 3] = Default::default();
                for (class, members) in by_class.iter_mut().enumerate() {
                    members.shuffle(&mut rng);
                    let mut cursor = 0;
                    for (split, bucket) in out.iter_mut().enumerate() {
                        let take = quotas[class][split];
                        bucket.extend_from_slice(&members[cursor..cursor + take]);
                        cursor += take;
                    }
                }
                out
            }
        };
        let tags = [SplitTag::Train, SplitTag::Test, SplitTag::Validation];
        let mut parts = assignment.into_iter().zip(tags).map(|(mut idx, tag)| {
            idx.sort_unstable();
            Dataset {
                records: idx.into_iter().map(|i| self.records[i].clone()).collect(),
                space: self.space.clone(),
                split: tag,
            }
        });
        Ok((parts.next().unwrap(), parts.next().unwrap(), parts.next().unwrap()))
    }

    /// Stratified split; see [`Dataset::split_by`].
    pub fn stratified_split(&self, sizes: SplitSizes, seed: u64) -> Result<(Dataset, Dataset, Dataset), DatasetError> {
        self.split_by(sizes, seed, SplitStrategy::Stratified)
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let mut w = BufWriter::new(File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub test: usize,
    pub validation: usize,
}

impl SplitSizes {
    pub fn new(train: usize, test: usize, validation: usize) -> Self {
        Self { train, test, validation }
    }

    pub fn total(&self) -> usize {
        self.train + self.test + self.validation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    #[default]
    Stratified,
    Random,
}

/// Per-class, per-split record counts. Column `s` sums to `split_sizes[s]`,
/// row `c` never exceeds `class_sizes[c]`, and each entry is the floor or
/// ceiling of `split_sizes[s] * class_sizes[c] / total`.
pub(crate) fn stratified_quotas(class_sizes: &[usize], split_sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = class_sizes.iter().sum();
    let k = class_sizes.len();
    if total == 0 {
        return vec![vec![0usize; split_sizes.len()]; k];
    }
    // A pseudo-split for unassigned records makes every row sum exact.
    let mut columns: Vec<usize> = split_sizes.to_vec();
    columns.push(total - split_sizes.iter().sum::<usize>());
    let m = columns.len();
    // Start from the floors of the exact shares; the remaining +1s go to
    // cells with a fractional share so that row and column totals come out
    // exact. That is a bipartite transportation problem solved as max flow.
    let mut grid = vec![vec![0usize; m]; k];
    let mut fractional = vec![vec![false; m]; k];
    for c in 0..k {
        for s in 0..m {
            let num = class_sizes[c] * columns[s];
            grid[c][s] = num / total;
            fractional[c][s] = !num.is_multiple_of(total);
        }
    }
    let row_need: Vec<usize> = (0..k).map(|c| class_sizes[c] - grid[c].iter().sum::<usize>()).collect();
    let col_need: Vec<usize> = (0..m).map(|s| columns[s] - grid.iter().map(|r| r[s]).sum::<usize>()).collect();
    for (c, s) in transport(&row_need, &col_need, &fractional) {
        grid[c][s] += 1;
    }
    grid.into_iter().map(|mut row| {
        row.truncate(split_sizes.len());
        row
    }).collect()
}

/// Unit-capacity assignment of `rows[c]` and `cols[s]` units over the
/// allowed cells, by augmenting paths. Returns the cells that get a unit.
fn transport(rows: &[usize], cols: &[usize], allowed: &[Vec<bool>]) -> Vec<(usize, usize)> {
    let (k, m) = (rows.len(), cols.len());
    let mut used = vec![vec![false; m]; k];
    let mut row_left = rows.to_vec();
    let mut col_left = cols.to_vec();
    loop {
        // BFS from rows with spare units to a column with spare units,
        // alternating unused (row->col) and used (col->row) cells.
        let mut prev_col: Vec<Option<usize>> = vec![None; m];
        let mut prev_row: Vec<Option<usize>> = vec![None; k];
        let mut queue: std::collections::VecDeque<usize> = (0..k).filter(|&c| row_left[c] > 0).collect();
        let mut seen_row: Vec<bool> = (0..k).map(|c| row_left[c] > 0).collect();
        let mut target = None;
        'search: while let Some(c) = queue.pop_front() {
            for s in 0..m {
                if !allowed[c][s] || used[c][s] || prev_col[s].is_some() {
                    continue;
                }
                prev_col[s] = Some(c);
                if col_left[s] > 0 {
                    target = Some(s);
                    break 'search;
                }
                for c2 in 0..k {
                    if used[c2][s] && !seen_row[c2] {
                        seen_row[c2] = true;
                        prev_row[c2] = Some(s);
                        queue.push_back(c2);
                    }
                }
            }
        }
        let Some(mut s) = target else { break };
        col_left[s] -= 1;
        loop {
            let c = prev_col[s].expect("path reaches back to a source row");
            used[c][s] = true;
            match prev_row[c] {
                Some(s2) => {
                    used[c][s2] = false;
                    s = s2;
                }
                None => {
                    row_left[c] -= 1;
                    break;
                }
            }
        }
    }
    let mut cells = Vec::new();
    for (c, row) in used.iter().enumerate() {
        for (s, &u) in row.iter().enumerate() {
            if u {
                cells.push((c, s));
            }
        }
    }
    cells
}

/// Reads one JSON object per line into a validated [`Dataset`].
pub fn load_jsonl(path: impl AsRef<Path>, space: &LabelSpace, field_map: &FieldMap) -> Result<Dataset, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(&line, line_no, space, field_map)?;
        if seen.insert(record.id.clone(), line_no).is_some() {
            return Err(DatasetError::DuplicateId(record.id));
        }
        records.push(record);
    }
    Ok(Dataset { records, space: space.clone(), split: SplitTag::Unsplit })
}

fn parse_record(line: &str, line_no: usize, space: &LabelSpace, field_map: &FieldMap) -> Result<ClaimRecord, DatasetError> {
    let value: Value = serde_json::from_str(line).map_err(|e| DatasetError::MalformedLine { line: line_no, detail: e.to_string() })?;
    let Value::Object(obj) = value else {
        return Err(DatasetError::MalformedLine { line: line_no, detail: "not a JSON object".into() });
    };
    let mut fields = Map::new();
    for (k, v) in obj {
        let key = field_map.keys.get(&k).cloned().unwrap_or(k);
        fields.insert(key, v);
    }

    let mut required = |name: &str| -> Result<String, DatasetError> {
        match fields.remove(name) {
            Some(Value::String(s)) => Ok(s),
            Some(Value::Number(n)) if name == "id" => Ok(n.to_string()),
            Some(Value::Null) | None => Err(DatasetError::MissingField { field: name.to_string(), line: line_no }),
            Some(other) => Err(DatasetError::MalformedLine {
                line: line_no,
                detail: format!("field `{name}` should be a string, got {other}"),
            }),
        }
    };
    let id = required("id")?;
    let raw_label = required("label")?;
    let claim = required("claim")?;
    let evidence = required("evidence")?;

    let label = field_map.map_label(&raw_label);
    if !space.contains(&label) {
        return Err(DatasetError::UnknownLabel { value: raw_label, line: line_no });
    }
    if claim.trim().is_empty() {
        return Err(DatasetError::EmptyClaim { line: line_no });
    }

    let mut optional = |name: &str| -> Option<String> {
        match fields.remove(name) {
            Some(Value::String(s)) => Some(s),
            Some(Value::Null) | None => None,
            Some(other) => Some(other.to_string()),
        }
    };
    let speaker = optional("speaker");
    let factcheck_analysis_link = optional("factcheck_analysis_link");
    let factcheck_date = optional("factcheck_date").map(RecordDate::new);
    let fact_checker = optional("fact_checker");
    let claim_date = optional("claim_date").map(RecordDate::new);
    let claim_source = optional("claim_source");

    Ok(ClaimRecord {
        id,
        label,
        claim,
        evidence,
        speaker,
        factcheck_analysis_link,
        factcheck_date,
        fact_checker,
        claim_date,
        claim_source,
        extra: fields.into_iter().collect(),
    })
}
