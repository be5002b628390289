mod config;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rav_core::dataset::{load_jsonl, Dataset, FieldMap, LabelSpace};
use rav_core::llm::{Client, HttpBackend, HttpConfig, LlmBackend, RunLog, ScriptedBackend};
use rav_core::metrics::{corpus_stats, evaluate, fleiss_kappa, RatingMatrix, WhitespaceTokens};
use rav_core::pipeline::{read_results, ClaimResult, Pipeline, Progress, ZeroShot};
use rav_core::prompt::{zeroshot_template_name, PromptBinding, TemplateSet};

use crate::config::{BackendKind, RunConfig};

/// Claim verification by question decomposition over an LLM backend.
///
/// Config keys can be overridden after the subcommand as `--pipeline.k 5`,
/// or `--k 5` for pipeline keys.
#[derive(Parser)]
#[command(name = "rav", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over the configured dataset.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Print the first claim's question prompt and exit without calling the backend.
        #[arg(long)]
        dry_run: bool,
    },
    /// Score a results file against gold labels.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "five")]
        space: String,
        #[arg(long, default_value = "default")]
        field_map: String,
        /// Only score results with this config hash (default: the hash of the last line).
        #[arg(long)]
        hash: Option<String>,
    },
    /// Single-prompt baseline with one of the zero-shot prompts P1..P7.
    Zeroshot {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        prompt: String,
        /// Results path (default: `<output stem>.zeroshot-<prompt>.jsonl`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dry_run: bool,
    },
    /// Evidence length statistics, optionally against an unfiltered corpus.
    Stats {
        #[arg(long)]
        filtered: PathBuf,
        #[arg(long)]
        unfiltered: Option<PathBuf>,
        #[arg(long, default_value = "five")]
        space: String,
        #[arg(long, default_value = "default")]
        field_map: String,
        /// Also write the statistics as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fleiss' kappa from a CSV with one row per item and one column per rater.
    Kappa {
        #[arg(long)]
        ratings: PathBuf,
        /// Skip the first row.
        #[arg(long)]
        has_header: bool,
    },
    /// Run once per question cap and tabulate the scores.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Comma-separated caps, e.g. `2,5,10`.
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let (overrides, args) = config::extract_overrides(std::env::args().collect());
    let cli = Cli::parse_from(args);
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command, overrides: &[(String, String)]) -> Result<()> {
    let uses_config = matches!(command, Command::Run { .. } | Command::Zeroshot { .. } | Command::Sweep { .. });
    if !uses_config && !overrides.is_empty() {
        bail!("config overrides (--{}) only apply to run, zeroshot and sweep", overrides[0].0);
    }
    match command {
        Command::Run { config, dry_run } => cmd_run(&config, overrides, dry_run),
        Command::Eval { results, dataset, space, field_map, hash } => cmd_eval(&results, &dataset, &space, &field_map, hash.as_deref()),
        Command::Zeroshot { config, prompt, out, dry_run } => cmd_zeroshot(&config, overrides, &prompt, out, dry_run),
        Command::Stats { filtered, unfiltered, space, field_map, json } => cmd_stats(&filtered, unfiltered.as_deref(), &space, &field_map, json.as_deref()),
        Command::Kappa { ratings, has_header } => cmd_kappa(&ratings, has_header),
        Command::Sweep { config, ks } => cmd_sweep(&config, overrides, &ks),
    }
}

fn space_named(name: &str) -> Result<LabelSpace> {
    LabelSpace::by_name(name).with_context(|| format!("unknown label space `{name}` (five, three, binary, politifact_six)"))
}

fn field_map_named(name: &str) -> Result<FieldMap> {
    config::field_map_by_name(name).with_context(|| format!("unknown field map `{name}` (default, fever_binary, explanation_as_evidence)"))
}

fn load_dataset(path: &Path, space: &LabelSpace, field_map: &FieldMap) -> Result<Dataset> {
    load_jsonl(path, space, field_map).with_context(|| format!("loading {}", path.display()))
}

fn templates(cfg: &RunConfig) -> Result<TemplateSet> {
    match &cfg.prompts_dir {
        None => Ok(TemplateSet::builtin()),
        Some(dir) => TemplateSet::builtin_with_overrides(dir).with_context(|| format!("loading prompts from {}", dir.display())),
    }
}

fn backend(cfg: &RunConfig) -> Result<Box<dyn LlmBackend>> {
    let b = &cfg.backend;
    let with_log = |client: Client| -> Result<Client> {
        Ok(match &b.run_log {
            Some(p) => client.with_log(RunLog::append(p).with_context(|| format!("opening run log {}", p.display()))?),
            None => client,
        })
    };
    Ok(match b.kind {
        BackendKind::Http => {
            let http = HttpBackend::new(HttpConfig { base_url: b.base_url.clone(), model: b.model.clone(), timeout: b.timeout })?;
            Box::new(with_log(Client::new(http, b.retry))?)
        }
        BackendKind::Scripted => {
            let path = b.script.as_ref().expect("validated");
            let script = ScriptedBackend::from_json_file(path).map_err(anyhow::Error::msg)?;
            Box::new(with_log(Client::new(script, b.retry))?)
        }
        // Replayed errors are final; retrying would consume later entries.
        BackendKind::Replay => {
            let path = b.replay_log.as_ref().expect("validated");
            Box::new(ScriptedBackend::from_run_log(path).with_context(|| format!("reading run log {}", path.display()))?)
        }
    })
}

fn progress_printer() -> impl Fn(&Progress) + Sync {
    |p: &Progress| {
        let mut err = std::io::stderr().lock();
        let _ = write!(err, "\r[{}/{}] failed {}", p.done, p.pending, p.failed);
        if p.done == p.pending {
            let _ = writeln!(err);
        }
    }
}

fn cmd_run(config: &Path, overrides: &[(String, String)], dry_run: bool) -> Result<()> {
    let cfg = RunConfig::load(config, overrides)?;
    let dataset = load_dataset(&cfg.dataset_path, &cfg.space, &cfg.field_map)?;
    let templates = templates(&cfg)?;
    if dry_run {
        let offline = ScriptedBackend::new();
        let pipeline = Pipeline::new(&offline, &templates, cfg.pipeline.clone(), cfg.space.clone())?.with_identity(cfg.backend.model.clone());
        let first = dataset.records().first().context("dataset is empty")?;
        println!("# {} on claim {} (config hash {})", cfg.pipeline.label(), first.id, pipeline.config_hash());
        println!("{}", pipeline.preview_prompt(first)?);
        return Ok(());
    }
    let backend = backend(&cfg)?;
    let pipeline = Pipeline::new(backend.as_ref(), &templates, cfg.pipeline.clone(), cfg.space.clone())?.with_identity(cfg.backend.model.clone());
    let progress = progress_printer();
    let summary = pipeline.run_dataset(&dataset, &cfg.output_path, cfg.workers, Some(&progress))?;
    println!("{} new claims, {} already done", summary.completed, summary.skipped);
    println!("failed claims: {} (failure rate {:.4}), failed trajectories: {}", summary.failed_claims, summary.failure_rate(), summary.failed_trajectories);
    println!("config hash {}", pipeline.config_hash());
    println!("results: {}", cfg.output_path.display());
    Ok(())
}

/// Results under one config hash: the given one, or the last line's.
fn select_results(all: Vec<ClaimResult>, hash: Option<&str>) -> Result<(String, Vec<ClaimResult>)> {
    let hashes: BTreeSet<&str> = all.iter().map(|r| r.config_hash.as_str()).collect();
    let chosen = match hash {
        Some(h) => h.to_string(),
        None => all.last().context("results file is empty")?.config_hash.clone(),
    };
    if !hashes.contains(chosen.as_str()) {
        bail!("no results with config hash {chosen}");
    }
    if hashes.len() > 1 && hash.is_none() {
        log::warn!("results contain {} config hashes; scoring {chosen} (pass --hash to choose)", hashes.len());
    }
    Ok((chosen.clone(), all.into_iter().filter(|r| r.config_hash == chosen).collect()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_eval(results: &Path, dataset: &Path, space: &str, field_map: &str, hash: Option<&str>) -> Result<()> {
    let gold = load_dataset(dataset, &space_named(space)?, &field_map_named(field_map)?)?;
    let all = read_results(results)?;
    let (hash, selected) = select_results(all, hash)?;
    let report = evaluate(&selected, &gold)?;
    print!("{}", report.to_table());
    let json_path = sibling(results, "metrics.json");
    std::fs::write(&json_path, report.to_json()).with_context(|| format!("writing {}", json_path.display()))?;
    let csv_path = sibling(results, "confusion.csv");
    std::fs::write(&csv_path, report.confusion.to_csv()).with_context(|| format!("writing {}", csv_path.display()))?;
    println!("config hash {hash}; wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

fn cmd_zeroshot(config: &Path, overrides: &[(String, String)], prompt: &str, out: Option<PathBuf>, dry_run: bool) -> Result<()> {
    let template = zeroshot_template_name(prompt).with_context(|| format!("unknown prompt id `{prompt}` (expected P1..P7)"))?;
    let cfg = RunConfig::load(config, overrides)?;
    let dataset = load_dataset(&cfg.dataset_path, &cfg.space, &cfg.field_map)?;
    let templates = templates(&cfg)?;
    if dry_run {
        let first = dataset.records().first().context("dataset is empty")?;
        let binding = PromptBinding::from([("claim".to_string(), first.claim.clone()), ("evidence".to_string(), first.evidence.clone())]);
        println!("{}", templates.get(template)?.render(&binding)?);
        return Ok(());
    }
    let out = out.unwrap_or_else(|| sibling(&cfg.output_path, &format!("zeroshot-{}.jsonl", prompt.to_ascii_lowercase())));
    let backend = backend(&cfg)?;
    let runner = ZeroShot::new(backend.as_ref(), &templates, prompt, cfg.space.clone())?
        .with_settings(cfg.pipeline.agent_settings())
        .with_identity(cfg.backend.model.clone());
    let progress = progress_printer();
    let summary = runner.run_dataset(&dataset, &out, cfg.workers, Some(&progress))?;
    println!("{} new claims, {} already done", summary.completed, summary.skipped);
    println!("failed claims: {} (failure rate {:.4})", summary.failed_claims, summary.failure_rate());
    println!("results: {}", out.display());
    Ok(())
}

fn cmd_stats(filtered: &Path, unfiltered: Option<&Path>, space: &str, field_map: &str, json: Option<&Path>) -> Result<()> {
    let (space, field_map) = (space_named(space)?, field_map_named(field_map)?);
    let f = load_dataset(filtered, &space, &field_map)?;
    let u = unfiltered.map(|p| load_dataset(p, &space, &field_map)).transpose()?;
    let stats = corpus_stats(&f, u.as_ref(), &WhitespaceTokens, None)?;
    print!("{}", stats.to_table());
    if let Some(path) = json {
        std::fs::write(path, serde_json::to_string_pretty(&stats)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_kappa(ratings: &Path, has_header: bool) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(ratings)
        .with_context(|| format!("opening {}", ratings.display()))?;
    let mut items = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", ratings.display(), i + 1))?;
        let labels: Vec<String> = row.iter().filter(|c| !c.is_empty()).map(str::to_string).collect();
        if !labels.is_empty() {
            items.push(labels);
        }
    }
    let m = RatingMatrix::from_labels(&items)?;
    let kappa = fleiss_kappa(&m)?;
    println!("items            {}", m.items());
    println!("raters per item  {}", m.raters_per_item);
    println!("categories       {}", m.categories.join(", "));
    println!("Fleiss kappa     {kappa:.4}");
    Ok(())
}

fn cmd_sweep(config: &Path, overrides: &[(String, String)], ks: &[usize]) -> Result<()> {
    let cfg = RunConfig::load(config, overrides)?;
    let dataset = load_dataset(&cfg.dataset_path, &cfg.space, &cfg.field_map)?;
    let templates = templates(&cfg)?;
    let backend = backend(&cfg)?;
    let pipeline = Pipeline::new(backend.as_ref(), &templates, cfg.pipeline.clone(), cfg.space.clone())?.with_identity(cfg.backend.model.clone());
    let reports = pipeline.sweep_k(&dataset, ks, &cfg.output_path, cfg.workers)?;
    println!("{:>4}  {:>8}  {:>8}  {:>8}", "k", "macro-F1", "micro-F1", "failed");
    for (k, r) in &reports {
        println!("{k:>4}  {:>8.4}  {:>8.4}  {:>8.4}", r.macro_f1, r.micro_f1, r.failure_rate);
    }
    Ok(())
}
