//! Seeded synthetic workloads shared by the benchmarks under `benches/`.

use cqrank_core::{DocumentSet, Qrels, QuerySet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Workload {
    pub docs: DocumentSet,
    pub queries: QuerySet,
    pub qrels: Qrels,
}

/// A question pool of `num_docs` short texts over a Zipf-ish vocabulary and
/// `num_queries` longer instructions, each judged against one question that
/// shares a word with it.
pub fn workload(num_docs: usize, num_queries: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..2000).map(|i| format!("w{i}")).collect();
    // Frequent words early: weight 1/(rank+1).
    let weights: Vec<f64> = (0..vocab.len()).map(|r| 1.0 / (r + 1) as f64).collect();
    let dist = rand::distributions::WeightedIndex::new(&weights).expect("positive weights");
    let text = |rng: &mut ChaCha8Rng, len: usize| -> Vec<&str> {
        (0..len)
            .map(|_| vocab[rng.sample(&dist)].as_str())
            .collect()
    };

    let docs: Vec<(String, String)> = (0..num_docs)
        .map(|i| {
            let len = rng.gen_range(4..16);
            (format!("c{i:05}"), text(&mut rng, len).join(" "))
        })
        .collect();
    let mut queries = Vec::with_capacity(num_queries);
    let mut qrels = Qrels::new();
    for i in 0..num_queries {
        let qid = format!("i{i:04}");
        let (target, target_text) = docs.choose(&mut rng).expect("non-empty pool");
        let len = rng.gen_range(10..60);
        let mut words = text(&mut rng, len);
        words.push(target_text.split(' ').next().expect("non-empty text"));
        qrels.insert(qid.clone(), target.clone());
        queries.push((qid, words.join(" ")));
    }
    Workload {
        docs: DocumentSet::from_pairs(docs).expect("unique ids"),
        queries: QuerySet::from_pairs(queries).expect("unique ids"),
        qrels,
    }
}
