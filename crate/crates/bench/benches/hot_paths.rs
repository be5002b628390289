use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rav_bench::{dataset, predictions, ratings, rng, sentence};
use rav_core::agents::normalize_label;
use rav_core::metrics::{evaluate_predictions, fleiss_kappa};
use rav_core::prompt::PromptBinding;
use rav_core::{LabelSpace, SplitSizes, TemplateSet};

fn labels(c: &mut Criterion) {
    let space = LabelSpace::five_class();
    let raws = ["Label: mostly-true", "  **Mostly False**.", "the claim is half true", "pants on fire"];
    c.bench_function("normalize_label", |b| {
        b.iter(|| {
            for raw in raws {
                let _ = black_box(normalize_label(black_box(raw), &space));
            }
        })
    });
}

fn render(c: &mut Criterion) {
    let set = TemplateSet::builtin();
    let lg = set.get("lg").unwrap();
    let mut r = rng(1);
    let history: Vec<String> = (0..10).map(|i| format!("Q{i}: {}?\nA{i}: {}", sentence(&mut r, 12), sentence(&mut r, 6))).collect();
    let binding: PromptBinding = [
        ("claim".to_string(), sentence(&mut r, 20)),
        ("history".to_string(), history.join("\n")),
        ("labels".to_string(), LabelSpace::five_class().labels().join(", ")),
    ]
    .into_iter()
    .collect();
    c.bench_function("render_lg_template", |b| b.iter(|| lg.render(black_box(&binding)).unwrap()));
}

fn metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate");
    for n in [1_000, 10_000] {
        let gold = dataset(n, 8, 2);
        let preds = predictions(&gold, 3);
        let refs: Vec<(&str, &str)> = preds.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &refs, |b, refs| b.iter(|| evaluate_predictions(refs, &gold).unwrap()));
    }
    g.finish();

    let m = ratings(2_000, 5, 3, 4);
    c.bench_function("fleiss_kappa_2000x5", |b| b.iter(|| fleiss_kappa(black_box(&m)).unwrap()));
}

fn split(c: &mut Criterion) {
    let d = dataset(5_000, 8, 5);
    let sizes = SplitSizes { train: 3_000, test: 1_000, validation: 1_000 };
    c.bench_function("stratified_split_5000", |b| b.iter(|| d.stratified_split(sizes, black_box(7)).unwrap()));
}

criterion_group!(benches, labels, render, metrics, split);
criterion_main!(benches);
