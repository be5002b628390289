//! Seeded synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rav_core::dataset::{ClaimRecord, Dataset, LabelSpace, SplitTag};
use rav_core::metrics::RatingMatrix;

const WORDS: &[&str] = &["the", "senator", "voted", "against", "bill", "in", "2019", "and", "later", "claimed", "support", "for", "it", "."];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sentence(rng: &mut ChaCha8Rng, words: usize) -> String {
    (0..words).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// `n` five-class claims with evidence of roughly `evidence_words` words.
pub fn dataset(n: usize, evidence_words: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let space = LabelSpace::five_class();
    let records = (0..n)
        .map(|i| {
            let label = space.labels()[r.gen_range(0..space.len())].clone();
            ClaimRecord::new(format!("c{i}"), label, sentence(&mut r, 20), sentence(&mut r, evidence_words))
        })
        .collect();
    Dataset::new(records, space, SplitTag::Unsplit).expect("generated records are valid")
}

/// Random `(claim_id, label)` predictions over `gold`.
pub fn predictions(gold: &Dataset, seed: u64) -> Vec<(String, String)> {
    let mut r = rng(seed);
    let labels = gold.space().labels();
    gold.records().iter().map(|c| (c.id.clone(), labels[r.gen_range(0..labels.len())].clone())).collect()
}

/// `items` × `categories` counts with `raters` ratings per item.
pub fn ratings(items: usize, categories: usize, raters: u64, seed: u64) -> RatingMatrix {
    let mut r = rng(seed);
    let counts = (0..items)
        .map(|_| {
            let mut row = vec![0u64; categories];
            for _ in 0..raters {
                row[r.gen_range(0..categories)] += 1;
            }
            row
        })
        .collect();
    RatingMatrix::new((0..categories).map(|c| format!("c{c}")).collect(), counts).expect("rows sum to raters")
}
