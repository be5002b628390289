//! Classification metrics, rater agreement, corpus statistics and
//! question-count profiles.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Dataset, LabelSpace};
use crate::pipeline::{ClaimResult, FAILED_LABEL};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("result for claim `{0}` has no gold record")]
    UnknownClaimId(String),
    #[error("claim `{0}` appears more than once in the results")]
    DuplicateClaimId(String),
    #[error("{count} gold claims have no result (first: `{first}`)")]
    MissingResults { count: usize, first: String },
    #[error("nothing to evaluate")]
    Empty,
    #[error("claim `{id}`: label `{label}` is outside the label space")]
    LabelOutsideSpace { id: String, label: String },
    #[error("invalid rating matrix: {0}")]
    InvalidRatings(String),
    #[error("agreement is undefined: every rating falls in one category")]
    DegenerateDistribution,
    #[error("filtered and unfiltered corpora differ in claim ids ({0})")]
    IdMismatch(String),
    #[error("no category for claim `{0}`")]
    MissingCategory(String),
}

/// Rows are gold labels, columns predictions; the last column counts
/// claims whose prediction failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub space: LabelSpace,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(space: LabelSpace) -> Self {
        let n = space.len();
        Self { space, counts: vec![vec![0; n + 1]; n] }
    }

    /// `predicted = None` records a failed claim.
    pub fn add(&mut self, gold: usize, predicted: Option<usize>) {
        let col = predicted.unwrap_or(self.space.len());
        self.counts[gold][col] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn failed(&self) -> u64 {
        self.counts.iter().map(|r| r[self.space.len()]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.space.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\predicted");
        for l in self.space.labels() {
            out.push(',');
            out.push_str(l);
        }
        out.push(',');
        out.push_str(FAILED_LABEL);
        out.push('\n');
        for (label, row) in self.space.labels().iter().zip(&self.counts) {
            out.push_str(label);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n: u64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub failure_rate: f64,
    pub per_class: BTreeMap<String, ClassScores>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let k = confusion.space.len();
        let mut per_class = BTreeMap::new();
        let mut f1_sum = 0.0;
        for (i, label) in confusion.space.labels().iter().enumerate() {
            let tp = confusion.counts[i][i];
            let predicted: u64 = (0..k).map(|g| confusion.counts[g][i]).sum();
            let support: u64 = confusion.counts[i].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            f1_sum += f1;
            per_class.insert(label.clone(), ClassScores { precision, recall, f1, support });
        }
        let n = confusion.total();
        Self {
            n,
            macro_f1: f1_sum / k as f64,
            micro_f1: ratio(confusion.correct(), n),
            failure_rate: ratio(confusion.failed(), n),
            per_class,
            confusion,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let labels = self.confusion.space.labels();
        let w = labels.iter().map(String::len).chain(["macro-F1".len()]).max().unwrap_or(8);
        let mut out = format!("{:<w$}  {:>9}  {:>9}  {:>9}  {:>7}\n", "label", "precision", "recall", "f1", "support");
        for l in labels {
            let s = &self.per_class[l];
            let _ = writeln!(out, "{l:<w$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}", s.precision, s.recall, s.f1, s.support);
        }
        let _ = writeln!(out, "{:<w$}  {:>9.4}", "macro-F1", self.macro_f1);
        let _ = writeln!(out, "{:<w$}  {:>9.4}", "micro-F1", self.micro_f1);
        let _ = writeln!(out, "{:<w$}  {:>9}", "n", self.n);
        let _ = writeln!(out, "{:<w$}  {:>9.4}", "failed", self.failure_rate);
        out
    }
}

/// Scores `results` against the gold labels in `gold`. Every gold claim
/// needs exactly one result.
pub fn evaluate(results: &[ClaimResult], gold: &Dataset) -> Result<MetricsReport, MetricsError> {
    let pairs: Vec<(&str, &str)> = results.iter().map(|r| (r.claim_id.as_str(), r.final_label.as_str())).collect();
    evaluate_predictions(&pairs, gold)
}

/// Same as [`evaluate`] over bare `(claim_id, predicted)` pairs.
pub fn evaluate_predictions(predictions: &[(&str, &str)], gold: &Dataset) -> Result<MetricsReport, MetricsError> {
    if gold.is_empty() && predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let space = gold.space();
    let gold_of: HashMap<&str, &str> = gold.records().iter().map(|r| (r.id.as_str(), r.label.as_str())).collect();
    let mut seen = HashSet::new();
    let mut confusion = ConfusionMatrix::new(space.clone());
    for &(id, predicted) in predictions {
        let g = *gold_of.get(id).ok_or_else(|| MetricsError::UnknownClaimId(id.to_string()))?;
        if !seen.insert(id) {
            return Err(MetricsError::DuplicateClaimId(id.to_string()));
        }
        let gi = space.index_of(g).expect("dataset labels lie in its space");
        let pi = if predicted == FAILED_LABEL {
            None
        } else {
            Some(space.index_of(predicted).ok_or_else(|| MetricsError::LabelOutsideSpace { id: id.to_string(), label: predicted.to_string() })?)
        };
        confusion.add(gi, pi);
    }
    let missing: Vec<&str> = gold.records().iter().map(|r| r.id.as_str()).filter(|id| !seen.contains(id)).collect();
    if let Some(first) = missing.first() {
        return Err(MetricsError::MissingResults { count: missing.len(), first: first.to_string() });
    }
    Ok(MetricsReport::from_confusion(confusion))
}

/// Items × categories grid of how many raters chose each category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatingMatrix {
    pub categories: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub raters_per_item: u64,
}

impl RatingMatrix {
    pub fn new(categories: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        let first = counts.first().ok_or_else(|| MetricsError::InvalidRatings("no items".into()))?;
        let n: u64 = first.iter().sum();
        if n < 2 {
            return Err(MetricsError::InvalidRatings(format!("need at least 2 raters per item, got {n}")));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != categories.len() {
                return Err(MetricsError::InvalidRatings(format!("item {} has {} columns, expected {}", i + 1, row.len(), categories.len())));
            }
            let s: u64 = row.iter().sum();
            if s != n {
                return Err(MetricsError::InvalidRatings(format!("item {} has {s} ratings, expected {n}", i + 1)));
            }
        }
        Ok(Self { categories, counts, raters_per_item: n })
    }

    /// Builds counts from one row of category labels per item. Categories
    /// are ordered by first appearance.
    pub fn from_labels<S: AsRef<str>>(items: &[Vec<S>]) -> Result<Self, MetricsError> {
        let mut categories: Vec<String> = Vec::new();
        for row in items {
            for l in row {
                if !categories.iter().any(|c| c == l.as_ref()) {
                    categories.push(l.as_ref().to_string());
                }
            }
        }
        let counts = items
            .iter()
            .map(|row| {
                let mut c = vec![0; categories.len()];
                for l in row {
                    c[categories.iter().position(|x| x == l.as_ref()).unwrap()] += 1;
                }
                c
            })
            .collect();
        Self::new(categories, counts)
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }
}

/// Fleiss' kappa. Sums are kept in integers so the result does not depend
/// on item or category order.
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64, MetricsError> {
    let big_n = m.counts.len() as i128;
    let n = m.raters_per_item as i128;
    let q = m.categories.len();
    let mut sq: i128 = 0;
    let mut col = vec![0i128; q];
    for row in &m.counts {
        for (j, &c) in row.iter().enumerate() {
            let c = c as i128;
            sq += c * c;
            col[j] += c;
        }
    }
    // P-bar = a / b, P-bar-e = c / d.
    let a = sq - big_n * n;
    let b = big_n * n * (n - 1);
    let c: i128 = col.iter().map(|x| x * x).sum();
    let d = (big_n * n) * (big_n * n);
    if c == d {
        return Err(MetricsError::DegenerateDistribution);
    }
    let exact = a
        .checked_mul(d)
        .zip(c.checked_mul(b))
        .and_then(|(x, y)| x.checked_sub(y))
        .zip(b.checked_mul(d - c));
    Ok(match exact {
        Some((num, den)) => num as f64 / den as f64,
        None => {
            let p = a as f64 / b as f64;
            let pe = c as f64 / d as f64;
            (p - pe) / (1.0 - pe)
        }
    })
}

/// Counts units of text for corpus statistics.
pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

/// Whitespace-separated units.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokens;

impl TokenCounter for WhitespaceTokens {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

impl<F: Fn(&str) -> usize> TokenCounter for F {
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

/// Sentences end at `.`, `!` or `?` followed by whitespace (or the end).
pub fn count_sentences(text: &str) -> usize {
    let mut count = 0;
    let mut pending = false;
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        if matches!(ch, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            if pending {
                count += 1;
            }
            pending = false;
            continue;
        }
        if ch.is_alphanumeric() {
            pending = true;
        }
    }
    count + usize::from(pending)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub label: String,
    pub count: usize,
    pub token_mean: f64,
    pub sentence_mean: f64,
    pub bpe_mean: Option<f64>,
    pub unfiltered_token_mean: Option<f64>,
    /// Percentage length reduction relative to the unfiltered corpus.
    pub lr_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub per_class: Vec<ClassStats>,
    pub overall: ClassStats,
}

pub fn length_reduction(unfiltered_mean: f64, filtered_mean: f64) -> f64 {
    100.0 * (unfiltered_mean - filtered_mean) / unfiltered_mean
}

#[derive(Default)]
struct Acc {
    count: usize,
    tokens: usize,
    sentences: usize,
    bpe: usize,
    unfiltered: usize,
}

impl Acc {
    fn finish(&self, label: &str, with_bpe: bool, paired: bool) -> ClassStats {
        let mean = |x: usize| if self.count == 0 { 0.0 } else { x as f64 / self.count as f64 };
        let token_mean = mean(self.tokens);
        let unfiltered_token_mean = paired.then(|| mean(self.unfiltered));
        ClassStats {
            label: label.to_string(),
            count: self.count,
            token_mean,
            sentence_mean: mean(self.sentences),
            bpe_mean: with_bpe.then(|| mean(self.bpe)),
            unfiltered_token_mean,
            lr_percent: unfiltered_token_mean.filter(|u| *u > 0.0).map(|u| length_reduction(u, token_mean)),
        }
    }
}

/// Per-class and overall evidence length statistics. With a paired
/// unfiltered corpus (same claim ids), also the length reduction; the
/// overall figure uses the overall means.
pub fn corpus_stats(filtered: &Dataset, unfiltered: Option<&Dataset>, tokens: &dyn TokenCounter, bpe: Option<&dyn TokenCounter>) -> Result<CorpusStats, MetricsError> {
    let unfiltered_by_id: Option<HashMap<&str, &str>> = match unfiltered {
        None => None,
        Some(u) => {
            let map: HashMap<&str, &str> = u.records().iter().map(|r| (r.id.as_str(), r.evidence.as_str())).collect();
            if let Some(r) = filtered.records().iter().find(|r| !map.contains_key(r.id.as_str())) {
                return Err(MetricsError::IdMismatch(format!("`{}` only in filtered", r.id)));
            }
            if u.len() != filtered.len() {
                let ids: HashSet<&str> = filtered.records().iter().map(|r| r.id.as_str()).collect();
                let extra = u.records().iter().find(|r| !ids.contains(r.id.as_str())).map(|r| r.id.as_str()).unwrap_or("?");
                return Err(MetricsError::IdMismatch(format!("`{extra}` only in unfiltered")));
            }
            Some(map)
        }
    };
    let mut per: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut all = Acc::default();
    for r in filtered.records() {
        let t = tokens.count(&r.evidence);
        let s = count_sentences(&r.evidence);
        let b = bpe.map_or(0, |c| c.count(&r.evidence));
        let u = unfiltered_by_id.as_ref().map_or(0, |m| tokens.count(m[r.id.as_str()]));
        for acc in [per.entry(r.label.as_str()).or_default(), &mut all] {
            acc.count += 1;
            acc.tokens += t;
            acc.sentences += s;
            acc.bpe += b;
            acc.unfiltered += u;
        }
    }
    let paired = unfiltered.is_some();
    let per_class = filtered
        .space()
        .labels()
        .iter()
        .filter_map(|l| per.get(l.as_str()).map(|a| a.finish(l, bpe.is_some(), paired)))
        .collect();
    Ok(CorpusStats { per_class, overall: all.finish("total", bpe.is_some(), paired) })
}

impl CorpusStats {
    pub fn to_table(&self) -> String {
        let w = self.per_class.iter().map(|c| c.label.len()).chain([5]).max().unwrap();
        let mut out = format!("{:<w$}  {:>6}  {:>9}  {:>8}  {:>9}  {:>11}  {:>7}\n", "label", "count", "token_mu", "sent_mu", "bpe_mu", "unfilt_mu", "LR%");
        for c in self.per_class.iter().chain([&self.overall]) {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
            let _ = writeln!(
                out,
                "{:<w$}  {:>6}  {:>9.2}  {:>8.2}  {:>9}  {:>11}  {:>7}",
                c.label,
                c.count,
                c.token_mean,
                c.sentence_mean,
                opt(c.bpe_mean),
                opt(c.unfiltered_token_mean),
                opt(c.lr_percent)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryProfile {
    pub trajectories: usize,
    pub mean_questions: f64,
    /// Questions asked -> number of trajectories.
    pub histogram: BTreeMap<usize, usize>,
}

/// Mean and distribution of questions asked per successful trajectory,
/// grouped by claim category (e.g. hop count).
pub fn complexity_profile(results: &[ClaimResult], category_of: &HashMap<String, String>) -> Result<BTreeMap<String, CategoryProfile>, MetricsError> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in results {
        let cat = category_of.get(&r.claim_id).ok_or_else(|| MetricsError::MissingCategory(r.claim_id.clone()))?;
        let lens = groups.entry(cat.clone()).or_default();
        lens.extend(r.trajectories.iter().filter(|t| t.status.is_ok()).map(|t| t.history.len()));
    }
    Ok(groups
        .into_iter()
        .map(|(cat, lens)| {
            let mut histogram = BTreeMap::new();
            for &l in &lens {
                *histogram.entry(l).or_default() += 1;
            }
            let mean = if lens.is_empty() { 0.0 } else { lens.iter().sum::<usize>() as f64 / lens.len() as f64 };
            (cat, CategoryProfile { trajectories: lens.len(), mean_questions: mean, histogram })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClaimRecord, SplitTag};
    use proptest::prelude::*;

    fn three() -> LabelSpace {
        LabelSpace::new("abc", vec!["a", "b", "c"]).unwrap()
    }

    fn gold(space: LabelSpace, labels: &[&str]) -> Dataset {
        let recs = labels.iter().enumerate().map(|(i, l)| ClaimRecord::new(format!("c{i}"), *l, "claim", "some evidence.")).collect();
        Dataset::new(recs, space, SplitTag::Test).unwrap()
    }

    fn preds<'a>(labels: &'a [&'a str]) -> Vec<(String, &'a str)> {
        labels.iter().enumerate().map(|(i, l)| (format!("c{i}"), *l)).collect()
    }

    fn eval(d: &Dataset, p: &[(String, &str)]) -> Result<MetricsReport, MetricsError> {
        let pairs: Vec<(&str, &str)> = p.iter().map(|(i, l)| (i.as_str(), *l)).collect();
        evaluate_predictions(&pairs, d)
    }

    #[test]
    fn derived_fixture() {
        let d = gold(three(), &["a", "a", "b", "c"]);
        let r = eval(&d, &preds(&["a", "b", "b", "c"])).unwrap();
        assert!((r.per_class["a"].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.per_class["b"].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.per_class["c"].f1, 1.0);
        assert!((r.macro_f1 - 7.0 / 9.0).abs() < 1e-12);
        assert_eq!(r.micro_f1, 0.75);
    }

    #[test]
    fn perfect_and_failed() {
        let d = gold(three(), &["a", "b", "c", "a"]);
        let r = eval(&d, &preds(&["a", "b", "c", "a"])).unwrap();
        assert_eq!((r.macro_f1, r.micro_f1, r.failure_rate), (1.0, 1.0, 0.0));
        let r = eval(&d, &preds(&["a", "b", "c", FAILED_LABEL])).unwrap();
        assert_eq!((r.micro_f1, r.failure_rate), (0.75, 0.25));
        assert_eq!(r.confusion.counts[0][3], 1);
    }

    #[test]
    fn id_errors() {
        let d = gold(three(), &["a", "b"]);
        let p = vec![("c0".to_string(), "a"), ("zz".to_string(), "a")];
        assert_eq!(eval(&d, &p), Err(MetricsError::UnknownClaimId("zz".into())));
        let p = vec![("c0".to_string(), "a"), ("c0".to_string(), "a")];
        assert_eq!(eval(&d, &p), Err(MetricsError::DuplicateClaimId("c0".into())));
        let p = vec![("c0".to_string(), "a")];
        assert!(matches!(eval(&d, &p), Err(MetricsError::MissingResults { count: 1, .. })));
    }

    #[test]
    fn absent_class_counts_zero() {
        let d = gold(three(), &["a", "a"]);
        let r = eval(&d, &preds(&["a", "a"])).unwrap();
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exports() {
        let d = gold(three(), &["a", "a", "b", "c"]);
        let r = eval(&d, &preds(&["a", "b", "b", FAILED_LABEL])).unwrap();
        assert_eq!(r.confusion.to_csv(), "gold\\predicted,a,b,c,__failed__\na,1,1,0,0\nb,0,1,0,0\nc,0,0,0,1\n");
        let table = r.to_table();
        assert!(table.contains("macro-F1"));
        let widths: HashSet<usize> = table.lines().take(4).map(str::len).collect();
        assert_eq!(widths.len(), 1, "{table}");
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["n"], 4);
    }

    #[test]
    fn kappa_examples() {
        let m = RatingMatrix::from_labels(&[vec!["A", "A"], vec!["A", "B"]]).unwrap();
        assert!((fleiss_kappa(&m).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        let m = RatingMatrix::from_labels(&[vec!["A", "A", "A"], vec!["B", "B", "B"]]).unwrap();
        assert_eq!(fleiss_kappa(&m).unwrap(), 1.0);
        let m = RatingMatrix::from_labels(&[vec!["A", "A"], vec!["A", "A"]]).unwrap();
        assert_eq!(fleiss_kappa(&m), Err(MetricsError::DegenerateDistribution));
        assert!(RatingMatrix::new(vec!["a".into()], vec![vec![1]]).is_err());
        assert!(RatingMatrix::new(vec!["a".into(), "b".into()], vec![vec![2, 0], vec![1, 0]]).is_err());
    }

    #[test]
    fn sentences() {
        assert_eq!(count_sentences("One. Two! Three? Four"), 4);
        assert_eq!(count_sentences("Pi is 3.14 exactly. Yes."), 2);
        assert_eq!(count_sentences(""), 0);
        assert_eq!(count_sentences("... ."), 0);
    }

    #[test]
    fn stats_identity_and_mismatch() {
        let d = gold(LabelSpace::five_class(), &["false", "true"]);
        let s = corpus_stats(&d, Some(&d), &WhitespaceTokens, None).unwrap();
        assert_eq!(s.overall.lr_percent, Some(0.0));
        assert_eq!(s.overall.token_mean, 2.0);
        assert_eq!(s.per_class.len(), 2);
        let other = gold(LabelSpace::five_class(), &["false"]);
        assert!(matches!(corpus_stats(&d, Some(&other), &WhitespaceTokens, None), Err(MetricsError::IdMismatch(_))));
        let bpe = |t: &str| t.len();
        let s = corpus_stats(&d, None, &WhitespaceTokens, Some(&bpe)).unwrap();
        assert_eq!(s.overall.bpe_mean, Some(14.0));
        assert!(s.to_table().contains("total"));
    }

    #[test]
    fn lr_arithmetic() {
        assert!((length_reduction(788.05, 589.77) - 25.1608).abs() < 1e-4);
        // The table's own overall means give 17.80, not the printed 17.79.
        assert!((length_reduction(901.78, 741.23) - 17.8037).abs() < 1e-4);
        assert_eq!(length_reduction(5.0, 5.0), 0.0);
    }

    fn naive_macro(gold: &[usize], pred: &[usize], k: usize) -> (f64, f64) {
        let mut f1s = 0.0;
        for c in 0..k {
            let tp = gold.iter().zip(pred).filter(|(g, p)| **g == c && **p == c).count() as f64;
            let fp = gold.iter().zip(pred).filter(|(g, p)| **g != c && **p == c).count() as f64;
            let fne = gold.iter().zip(pred).filter(|(g, p)| **g == c && **p != c).count() as f64;
            let p = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            let r = if tp + fne == 0.0 { 0.0 } else { tp / (tp + fne) };
            f1s += if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        }
        let acc = gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64 / gold.len() as f64;
        (f1s / k as f64, acc)
    }

    proptest! {
        #[test]
        fn matches_naive(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..=50)) {
            let space = LabelSpace::five_class();
            let labels = space.labels().to_vec();
            let g: Vec<&str> = pairs.iter().map(|(g, _)| labels[*g].as_str()).collect();
            let p: Vec<&str> = pairs.iter().map(|(_, p)| labels[*p].as_str()).collect();
            let d = gold(space, &g);
            let r = eval(&d, &preds(&p)).unwrap();
            let (m, a) = naive_macro(&pairs.iter().map(|x| x.0).collect::<Vec<_>>(), &pairs.iter().map(|x| x.1).collect::<Vec<_>>(), 5);
            prop_assert!((r.macro_f1 - m).abs() < 1e-12);
            prop_assert!((r.micro_f1 - a).abs() < 1e-12);
            let mut rev = preds(&p);
            rev.reverse();
            prop_assert_eq!(eval(&d, &rev).unwrap(), r);
        }

        #[test]
        fn kappa_permutation_invariant(rows in prop::collection::vec(prop::collection::vec(0u64..4, 4), 1..20), shift in 1usize..4) {
            let rows: Vec<Vec<u64>> = rows.into_iter().map(|mut r| { let s: u64 = r.iter().sum(); if s < 2 { r[0] += 2 - s; } r }).collect();
            let n: u64 = rows[0].iter().sum();
            let rows: Vec<Vec<u64>> = rows.into_iter().map(|mut r| { let s: u64 = r.iter().sum(); if s < n { r[3] += n - s; } r }).filter(|r| r.iter().sum::<u64>() == n).collect();
            let cats: Vec<String> = (0..4).map(|i| i.to_string()).collect();
            let m = RatingMatrix::new(cats.clone(), rows.clone()).unwrap();
            let rotated: Vec<Vec<u64>> = rows.iter().map(|r| { let mut r = r.clone(); r.rotate_left(shift); r }).collect();
            let m2 = RatingMatrix::new(cats, rotated).unwrap();
            match (fleiss_kappa(&m), fleiss_kappa(&m2)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
