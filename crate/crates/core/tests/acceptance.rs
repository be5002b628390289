//! Acceptance checks. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero when any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rav_core::agents::{parse_label_output, parse_qg_output, QuestionType, QuestionTypes};
use rav_core::dataset::{ClaimRecord, Dataset, LabelSpace, SplitTag};
use rav_core::llm::{Client, CompletionRequest, CompletionResponse, HttpBackend, HttpConfig, LlmBackend, LlmError, RetryPolicy, RunLog, ScriptedBackend};
use rav_core::metrics::{complexity_profile, corpus_stats, evaluate, fleiss_kappa, RatingMatrix, WhitespaceTokens};
use rav_core::pipeline::{majority_vote, read_results, Pipeline, PipelineConfig, Strategy, Trajectory, TrajectoryStatus, FAILED_LABEL};
use rav_core::prompt::TemplateSet;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        {
            let ok: bool = $cond;
            if !ok {
                return Err(format!($($fmt)+));
            }
        }
    };
}

fn claim(id: &str, label: &str) -> ClaimRecord {
    ClaimRecord::new(id, label, format!("Claim {id} about a senator's vote."), format!("Evidence for {id}. The senator voted in 2019."))
}

fn dataset(ids: &[&str], label: &str) -> Dataset {
    Dataset::new(ids.iter().map(|i| claim(i, label)).collect(), LabelSpace::five_class(), SplitTag::Test).unwrap()
}

fn role_of(tag: &str) -> &str {
    tag.rsplit('/').next().unwrap_or(tag)
}

fn reply(text: impl Into<String>) -> Result<CompletionResponse, LlmError> {
    Ok(CompletionResponse { text: text.into(), prompt_tokens: 0, completion_tokens: 0, latency_ms: 0 })
}

fn algorithm_conformance() -> Outcome {
    let started = Instant::now();
    let backend = ScriptedBackend::new()
        .with("QG:1", "Reasoning: start\nQuestion: [V] Did zqone happen?")
        .with("QG:2", "Reasoning: next\nQuestion: [V] Did zqtwo happen?")
        .with("QG:3", "Reasoning: last\nQuestion: [V] Did zqthree happen?")
        .with("QG:4", "Reasoning: enough\nstop_iteration")
        .with("AG:1", "Answer: zaone")
        .with("AG:2", "Answer: zatwo")
        .with("AG:3", "Answer: zathree")
        .with("LG", "Reasoning: all confirmed\nLabel: true");
    let templates = TemplateSet::builtin();
    let p = Pipeline::new(&backend, &templates, PipelineConfig::default(), LabelSpace::five_class()).unwrap();
    let t = p.run_trajectory(&claim("c1", "true"), 0);
    ensure!(t.status == TrajectoryStatus::Ok, "status {:?}", t.status);
    ensure!(t.history.len() == 3, "history has {} pairs", t.history.len());
    let questions = ["zqone", "zqtwo", "zqthree"];
    let answers = ["zaone", "zatwo", "zathree"];
    let qg: Vec<_> = t.transcripts.iter().filter(|e| role_of(&e.tag).starts_with("QG:")).collect();
    ensure!(qg.len() == 4, "{} QG calls", qg.len());
    for (i, e) in qg.iter().enumerate() {
        let shown_q = questions.iter().filter(|q| e.prompt.contains(*q)).count();
        let shown_a = answers.iter().filter(|a| e.prompt.contains(*a)).count();
        ensure!(shown_q == i && shown_a == i, "QG step {} shows {shown_q} questions and {shown_a} answers", i + 1);
    }
    let lg = t.transcripts.iter().filter(|e| role_of(&e.tag) == "LG").count();
    ensure!(lg == 1, "LG ran {lg} times");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("3 pairs, step t shows t-1 pairs, LG once, {elapsed:?}"))
}

fn cap_enforcement() -> Outcome {
    let backend = ScriptedBackend::new()
        .with("QG:*", "Reasoning: more\nQuestion: [V] Is it still true?")
        .with("AG:*", "Answer: yes")
        .with("LG", "Label: true");
    let templates = TemplateSet::builtin();
    let cfg = PipelineConfig { k: 10, ..Default::default() };
    let p = Pipeline::new(&backend, &templates, cfg, LabelSpace::five_class()).unwrap();
    let t = p.run_trajectory(&claim("c1", "true"), 0);
    ensure!(t.status.is_ok(), "status {:?}", t.status);
    ensure!(t.history.len() == 10, "{} questions", t.history.len());
    let qg = t.transcripts.iter().filter(|e| role_of(&e.tag).starts_with("QG:")).count();
    ensure!(qg == 10, "{qg} QG calls");
    Ok("never-stopping QG capped at 10".into())
}

fn variant_backend(qtypes: QuestionTypes) -> ScriptedBackend {
    let (first, plan_extra) = match qtypes {
        QuestionTypes::T1Only => ("Question: [V] Did the senator vote?", ""),
        QuestionTypes::T1AndT2 => ("Question: [I] Who cast the vote?", "\nQuestion: [I] When was the vote?"),
    };
    ScriptedBackend::new()
        .with("QG:all", format!("Reasoning: plan\nQuestion: [V] Did the senator vote?\nQuestion: [V] Was it in 2019?{plan_extra}"))
        .with("QG:1", format!("Reasoning: a\n{first}"))
        .with("QG:2", "Reasoning: b\nQuestion: [V] Was it in 2019?")
        .with("QG:3", "Reasoning: done\nstop_iteration")
        .with("AG:*", "Answer: yes")
        .with("LG", "Reasoning: consistent\nLabel: mostly-true")
}

fn variant_matrix() -> Outcome {
    let templates = TemplateSet::builtin();
    let ids = ["v1", "v2", "v3", "v4", "v5"];
    let d = dataset(&ids, "mostly-true");
    let dir = tempfile::tempdir().unwrap();
    let mut notes = Vec::new();
    for strategy in [Strategy::AllAtOnce, Strategy::Iterative] {
        for qtypes in [QuestionTypes::T1Only, QuestionTypes::T1AndT2] {
            let backend = variant_backend(qtypes);
            let cfg = PipelineConfig::variant(strategy, qtypes);
            let p = Pipeline::new(&backend, &templates, cfg.clone(), LabelSpace::five_class()).unwrap();
            let out = dir.path().join(format!("{:?}-{:?}.jsonl", strategy, qtypes));
            let summary = p.run_dataset(&d, &out, 2, None).map_err(|e| e.to_string())?;
            ensure!(summary.completed == 5 && summary.failed_claims == 0, "{}: {summary:?}", cfg.label());
            let results = read_results(&out).map_err(|e| e.to_string())?;
            let want = if strategy == Strategy::AllAtOnce { 3 } else { 1 };
            let mut verification = 0;
            let mut total = 0;
            for r in &results {
                ensure!(r.trajectories.len() == want, "{}: {} trajectories", cfg.label(), r.trajectories.len());
                ensure!(r.vote_detail.values().sum::<usize>() == want, "{}: votes {:?}", cfg.label(), r.vote_detail);
                ensure!(r.trajectories.iter().all(|t| t.status.is_ok()), "{}: failed trajectory", cfg.label());
                for t in &r.trajectories {
                    for pair in t.history.pairs() {
                        total += 1;
                        verification += usize::from(pair.question.qtype == QuestionType::Verification);
                    }
                }
            }
            if qtypes == QuestionTypes::T1Only {
                ensure!(verification == total && total > 0, "{}: {verification}/{total} verification", cfg.label());
            } else {
                ensure!(verification < total, "{}: fixture should include inquiry questions", cfg.label());
            }
            notes.push(format!("{} ok", cfg.label()));
        }
    }
    Ok(notes.join(", "))
}

fn traj(label: &str) -> Trajectory {
    Trajectory {
        claim_id: "c".into(),
        index: 0,
        variant: String::new(),
        history: Default::default(),
        qg_reasonings: vec![],
        lg_reasoning: String::new(),
        predicted: label.into(),
        status: TrajectoryStatus::Ok,
        evidence_truncated: false,
        tokens: Default::default(),
        transcripts: vec![],
    }
}

fn majority() -> Outcome {
    let (a, _) = majority_vote(&[traj("false"), traj("false"), traj("half-true")]).map_err(|e| e.to_string())?;
    ensure!(a == "false", "(false,false,half-true) -> {a}");
    let (b, _) = majority_vote(&[traj("true"), traj("half-true"), traj("false")]).map_err(|e| e.to_string())?;
    ensure!(b == "true", "(true,half-true,false) -> {b}");
    Ok("false; true (earliest wins ties)".into())
}

/// Independent oracle: per-class counts straight from the pairs.
fn brute_force_f1(gold: &[usize], pred: &[usize], k: usize) -> (f64, f64) {
    let mut macro_sum = 0.0;
    for class in 0..k {
        let (mut tp, mut fp, mut fneg) = (0u32, 0u32, 0u32);
        for (&g, &p) in gold.iter().zip(pred) {
            match (g == class, p == class) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let precision = if tp + fp > 0 { f64::from(tp) / f64::from(tp + fp) } else { 0.0 };
        let recall = if tp + fneg > 0 { f64::from(tp) / f64::from(tp + fneg) } else { 0.0 };
        macro_sum += if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    }
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    (macro_sum / k as f64, correct as f64 / gold.len() as f64)
}

fn metrics_oracle() -> Outcome {
    let space = LabelSpace::five_class();
    let labels = space.labels().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.gen_range(1..=50);
        let gold: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let recs = gold.iter().enumerate().map(|(i, &g)| claim(&format!("m{i}"), &labels[g])).collect();
        let d = Dataset::new(recs, space.clone(), SplitTag::Test).unwrap();
        let ids: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
        let pairs: Vec<(&str, &str)> = ids.iter().zip(&pred).map(|(id, &p)| (id.as_str(), labels[p].as_str())).collect();
        let r = rav_core::metrics::evaluate_predictions(&pairs, &d).map_err(|e| e.to_string())?;
        let (m, a) = brute_force_f1(&gold, &pred, 5);
        worst = worst.max((r.macro_f1 - m).abs()).max((r.micro_f1 - a).abs());
        ensure!((r.macro_f1 - m).abs() <= 1e-12 && (r.micro_f1 - a).abs() <= 1e-12, "case {case}: {} vs {m}", r.macro_f1);
    }
    let three = LabelSpace::new("abc", vec!["a", "b", "c"]).unwrap();
    let recs = ["a", "a", "b", "c"].iter().enumerate().map(|(i, l)| claim(&format!("d{i}"), l)).collect();
    let d = Dataset::new(recs, three, SplitTag::Test).unwrap();
    let r = rav_core::metrics::evaluate_predictions(&[("d0", "a"), ("d1", "b"), ("d2", "b"), ("d3", "c")], &d).map_err(|e| e.to_string())?;
    ensure!((r.macro_f1 - 7.0 / 9.0).abs() <= 1e-9, "derived macro {}", r.macro_f1);
    ensure!(r.micro_f1 == 0.75, "derived micro {}", r.micro_f1);
    Ok(format!("50 random cases max |diff| {worst:.1e}; derived macro {:.4}, micro {:.2}", r.macro_f1, r.micro_f1))
}

/// Evidence of exactly `tokens` whitespace tokens.
fn text_of(tokens: usize) -> String {
    "w ".repeat(tokens)
}

/// Records whose token counts total round(mean * count), spread evenly.
fn engineered(label: &str, count: usize, mean: f64, tag: &str) -> Vec<ClaimRecord> {
    let total = (mean * count as f64).round() as usize;
    (0..count)
        .map(|i| {
            let tokens = total / count + usize::from(i < total % count);
            ClaimRecord::new(format!("{label}-{i}"), label, format!("claim {tag}"), text_of(tokens))
        })
        .collect()
}

fn table_one() -> Outcome {
    // (label, count, filtered mean, unfiltered mean)
    let rows = [
        ("false", 594, 589.77, 788.05),
        ("mostly-false", 600, 808.06, 1050.69),
        ("half-true", 593, 860.37, 998.79),
        ("mostly-true", 598, 765.88, 910.63),
        ("true", 597, 681.73, 760.17),
    ];
    let mut filtered = Vec::new();
    let mut unfiltered = Vec::new();
    for (label, count, f, u) in rows {
        filtered.extend(engineered(label, count, f, "f"));
        unfiltered.extend(engineered(label, count, u, "u"));
    }
    let f = Dataset::new(filtered, LabelSpace::five_class(), SplitTag::Unsplit).unwrap();
    let u = Dataset::new(unfiltered, LabelSpace::five_class(), SplitTag::Unsplit).unwrap();
    let stats = corpus_stats(&f, Some(&u), &WhitespaceTokens, None).map_err(|e| e.to_string())?;
    let false_lr = stats.per_class.iter().find(|c| c.label == "false").and_then(|c| c.lr_percent).unwrap();
    let overall_lr = stats.overall.lr_percent.unwrap();
    let detail = format!(
        "false LR {false_lr:.4}% (target 25.16), overall LR {overall_lr:.4}% (target 17.79) from means {:.2}/{:.2}",
        stats.overall.token_mean,
        stats.overall.unfiltered_token_mean.unwrap()
    );
    ensure!((false_lr - 25.16).abs() <= 0.01, "{detail}");
    ensure!((overall_lr - 17.79).abs() <= 0.01, "{detail}");
    Ok(detail)
}

/// Independent oracle: agreement as the share of agreeing ordered rater
/// pairs, chance agreement from pooled category shares.
fn kappa_by_pairs(items: &[Vec<&str>]) -> f64 {
    let n = items[0].len();
    let mut p_bar = 0.0;
    let mut pooled: BTreeMap<&str, usize> = BTreeMap::new();
    for ratings in items {
        let mut agree = 0;
        for i in 0..n {
            for j in 0..n {
                if i != j && ratings[i] == ratings[j] {
                    agree += 1;
                }
            }
            *pooled.entry(ratings[i]).or_default() += 1;
        }
        p_bar += agree as f64 / (n * (n - 1)) as f64;
    }
    p_bar /= items.len() as f64;
    let all = (items.len() * n) as f64;
    let p_e: f64 = pooled.values().map(|&c| (c as f64 / all).powi(2)).sum();
    (p_bar - p_e) / (1.0 - p_e)
}

fn kappa() -> Outcome {
    let perfect = RatingMatrix::from_labels(&[vec!["a"; 4], vec!["b"; 4], vec!["c"; 4]]).unwrap();
    let k = fleiss_kappa(&perfect).map_err(|e| e.to_string())?;
    ensure!(k == 1.0, "perfect agreement gave {k}");

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let (items, q, n) = (rng.gen_range(1..40), rng.gen_range(2..6), rng.gen_range(2..6u64));
        let counts: Vec<Vec<u64>> = (0..items)
            .map(|_| {
                let mut row = vec![0; q];
                for _ in 0..n {
                    row[rng.gen_range(0..q)] += 1;
                }
                row
            })
            .collect();
        let mut perm: Vec<usize> = (0..q).collect();
        perm.shuffle(&mut rng);
        let cats: Vec<String> = (0..q).map(|c| c.to_string()).collect();
        let permuted: Vec<Vec<u64>> = counts.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let a = fleiss_kappa(&RatingMatrix::new(cats.clone(), counts).unwrap());
        let b = fleiss_kappa(&RatingMatrix::new(cats, permuted).unwrap());
        match (a, b) {
            (Ok(a), Ok(b)) => ensure!((a - b).abs() <= 1e-12, "case {case}: {a} vs {b}"),
            (a, b) => ensure!(a == b, "case {case}: {a:?} vs {b:?}"),
        }
    }

    let small = [vec!["A", "A"], vec!["A", "B"]];
    let oracle = kappa_by_pairs(&small);
    let got = fleiss_kappa(&RatingMatrix::from_labels(&small).unwrap()).map_err(|e| e.to_string())?;
    ensure!((got - oracle).abs() <= 1e-9 && (got + 1.0 / 3.0).abs() <= 1e-9, "small matrix {got} vs oracle {oracle}");
    Ok(format!("perfect 1.0, 100 permutations invariant, small matrix {got:.6}"))
}

fn record_replay() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("run.log.jsonl");
    let templates = TemplateSet::builtin();
    let ids = ["r1", "r2", "r3", "r4", "r5", "r6"];
    let d = dataset(&ids, "half-true");
    let script = ScriptedBackend::new()
        .with_sequence("r2/0/QG:1", ["no marker here", "Reasoning: retry\nQuestion: [I] Who voted?"])
        .with("QG:1", "Reasoning: a\nQuestion: [I] Who voted?")
        .with("QG:2", "Reasoning: b\nQuestion: [V] Was it in 2019?")
        .with("QG:3", "stop_iteration")
        .with("AG:*", "Answer: the senator")
        .with("r4/0/LG", "Label: true or false")
        .with("r5/0/LG", "Label: half-true")
        .with("LG", "Reasoning: mixed\nLabel: half-true");
    let cfg = PipelineConfig::default();
    let policy = RetryPolicy { max_attempts: 2, base_backoff_ms: 1, max_backoff_ms: 1, max_concurrent: 3 };
    let recorded = Client::new(script, policy).with_log(RunLog::append(&log_path).unwrap()).with_sleeper(|_| {});
    let first = dir.path().join("first.jsonl");
    Pipeline::new(&recorded, &templates, cfg.clone(), LabelSpace::five_class())
        .unwrap()
        .run_dataset(&d, &first, 3, None)
        .map_err(|e| e.to_string())?;

    let replay = ScriptedBackend::from_run_log(&log_path).map_err(|e| e.to_string())?;
    let second = dir.path().join("second.jsonl");
    Pipeline::new(&replay, &templates, cfg, LabelSpace::five_class())
        .unwrap()
        .run_dataset(&d, &second, 3, None)
        .map_err(|e| e.to_string())?;
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    ensure!(a == b, "replayed results differ ({} vs {} bytes)", a.len(), b.len());
    let failed = read_results(&first).unwrap().iter().filter(|r| r.final_label == FAILED_LABEL).count();
    ensure!(failed == 1, "fixture should contain one failed claim, got {failed}");
    Ok(format!("{} identical bytes incl. a re-ask and a failed claim", a.len()))
}

/// Answers every role of a claim with the same malformed text.
struct Fuzzed {
    outputs: HashMap<String, String>,
}

impl LlmBackend for Fuzzed {
    fn complete(&self, r: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let id = r.tag.split('/').next().unwrap_or_default();
        reply(self.outputs.get(id).cloned().unwrap_or_default())
    }
}

fn malformed(rng: &mut ChaCha8Rng) -> String {
    const WORDS: &[&str] = &["the", "claim", "true", "false", "senator", "Label", "maybe", "half", "mostly", "vote", "2019", ":", "-", "*"];
    let words = |rng: &mut ChaCha8Rng, n: usize| (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ");
    match rng.gen_range(0..10) {
        0 => String::new(),
        1 => " \n\t \n".into(),
        2 => {
            let n = rng.gen_range(1..12);
            words(rng, n)
        }
        3 => {
            let labels = LabelSpace::five_class().labels().to_vec();
            let a = labels.choose(rng).unwrap().clone();
            let b = labels.iter().find(|l| **l != a && !a.contains(l.as_str()) && !l.contains(a.as_str())).unwrap().clone();
            format!("Reasoning: torn\nLabel: {a} or {b}")
        }
        4 => {
            let n = rng.gen_range(1..8);
            format!("Reasoning: {}", words(rng, n))
        }
        5 => {
            let n = rng.gen_range(1..6);
            format!("Question: {}", words(rng, n))
        }
        6 => "Label: banana".into(),
        7 => {
            let n = rng.gen_range(1..40);
            (0..n).map(|_| rng.gen_range(0x20u32..0x2FFF)).filter_map(char::from_u32).filter(|c| *c != '?').collect()
        }
        8 => "Answer:\nQuestion:\nLabel:".into(),
        _ => "Labe true\nQuestio whether".into(),
    }
}

fn robustness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let space = LabelSpace::five_class();
    let mut outputs = HashMap::new();
    let mut records = Vec::new();
    for i in 0..1000 {
        let raw = malformed(&mut rng);
        ensure!(parse_qg_output(&raw).is_err(), "QG parser accepted {raw:?}");
        ensure!(parse_label_output(&raw, &space).is_err(), "LG parser accepted {raw:?}");
        outputs.insert(format!("f{i}"), raw);
        records.push(claim(&format!("f{i}"), "false"));
    }
    let d = Dataset::new(records, space.clone(), SplitTag::Test).unwrap();
    let backend = Fuzzed { outputs };
    let templates = TemplateSet::builtin();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fuzz.jsonl");
    let p = Pipeline::new(&backend, &templates, PipelineConfig::default(), space).unwrap();
    let summary = catch_unwind(AssertUnwindSafe(|| p.run_dataset(&d, &out, 4, None)))
        .map_err(|_| "pipeline panicked".to_string())?
        .map_err(|e| e.to_string())?;
    let results = read_results(&out).map_err(|e| e.to_string())?;
    for r in &results {
        let t = &r.trajectories[0];
        let TrajectoryStatus::Failed { reason } = &t.status else {
            return Err(format!("{} did not fail", r.claim_id));
        };
        ensure!(reason.contains("unparseable output") || reason.contains("could not be mapped"), "{}: {reason}", r.claim_id);
    }
    let report = evaluate(&results, &d).map_err(|e| e.to_string())?;
    ensure!(summary.failed_claims == 1000 && report.failure_rate == 1.0, "{summary:?}");
    Ok(format!("1000 malformed outputs, no panic, failure_rate {:.2}", report.failure_rate))
}

/// Asks `len` questions for a claim, where `len` depends on the claim id.
struct ByLength {
    lengths: HashMap<String, usize>,
}

impl LlmBackend for ByLength {
    fn complete(&self, r: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let id = r.tag.split('/').next().unwrap_or_default();
        let role = role_of(&r.tag);
        match role.strip_prefix("QG:") {
            Some(step) if step.parse::<usize>().unwrap() <= self.lengths[id] => reply(format!("Reasoning: r\nQuestion: [V] Is fact {step} right?")),
            Some(_) => reply("Reasoning: done\nstop_iteration"),
            None if role.starts_with("AG:") => reply("Answer: yes"),
            None => reply("Label: true"),
        }
    }
}

fn complexity() -> Outcome {
    let hops = [("2-hop", 4), ("3-hop", 5), ("4-hop", 6)];
    let mut lengths = HashMap::new();
    let mut categories = HashMap::new();
    let mut records = Vec::new();
    for (cat, len) in hops {
        for j in 0..3 {
            let id = format!("{cat}-{j}");
            lengths.insert(id.clone(), len);
            categories.insert(id.clone(), cat.to_string());
            records.push(claim(&id, "true"));
        }
    }
    let d = Dataset::new(records, LabelSpace::five_class(), SplitTag::Test).unwrap();
    let backend = ByLength { lengths };
    let templates = TemplateSet::builtin();
    let p = Pipeline::new(&backend, &templates, PipelineConfig::default(), LabelSpace::five_class()).unwrap();
    let results: Vec<_> = d.records().iter().map(|c| p.run_claim(c)).collect();
    let profile = complexity_profile(&results, &categories).map_err(|e| e.to_string())?;
    let means: Vec<f64> = hops.iter().map(|(c, _)| profile[*c].mean_questions).collect();
    ensure!(means == [4.0, 5.0, 6.0], "means {means:?}");
    ensure!(means.windows(2).all(|w| w[0] < w[1]), "not monotone: {means:?}");
    Ok(format!("2-hop {:.1} < 3-hop {:.1} < 4-hop {:.1}", means[0], means[1], means[2]))
}

/// Runs only with `RAV_LIVE_BASE_URL` and `RAV_LIVE_MODEL` set (and
/// `RAV_API_KEY` when the endpoint needs one).
fn live_smoke() -> Option<Outcome> {
    let base_url = std::env::var("RAV_LIVE_BASE_URL").ok()?;
    let model = std::env::var("RAV_LIVE_MODEL").ok()?;
    Some((|| {
        let http = HttpBackend::new(HttpConfig { base_url, model, timeout: Duration::from_secs(120) }).map_err(|e| e.to_string())?;
        let client = Client::new(http, RetryPolicy::default());
        let templates = TemplateSet::builtin();
        let space = LabelSpace::five_class();
        let p = Pipeline::new(&client, &templates, PipelineConfig::default(), space.clone()).unwrap();
        let c = ClaimRecord::new(
            "live-1",
            "false",
            "The Eiffel Tower is located in Berlin.",
            "The Eiffel Tower is a wrought-iron lattice tower on the Champ de Mars in Paris, France.",
        );
        let r = p.run_claim(&c);
        let t = &r.trajectories[0];
        ensure!(t.status.is_ok(), "status {:?}", t.status);
        ensure!(space.contains(&r.final_label), "label {}", r.final_label);
        Ok(format!("label {} after {} questions", r.final_label, t.history.len()))
    })())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("iterative loop conformance", algorithm_conformance),
        ("question cap k=10", cap_enforcement),
        ("variant matrix", variant_matrix),
        ("majority vote", majority),
        ("macro/micro-F1 oracle", metrics_oracle),
        ("length-reduction arithmetic", table_one),
        ("Fleiss kappa", kappa),
        ("record/replay", record_replay),
        ("malformed-output robustness", robustness),
        ("complexity profile", complexity),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    match live_smoke() {
        None => println!("SKIP  live endpoint smoke test: set RAV_LIVE_BASE_URL and RAV_LIVE_MODEL to run"),
        Some(Ok(detail)) => println!("PASS  live endpoint smoke test: {detail}"),
        Some(Err(detail)) => {
            failures += 1;
            println!("FAIL  live endpoint smoke test: {detail}");
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
