//! Brute-force reference implementations working on raw token lists.
//!
//! Nothing here touches the inverted index: statistics are recounted from the
//! documents on every call.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

pub type Doc = (String, Vec<String>);

pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

pub fn count(doc: &[String], term: &str) -> usize {
    doc.iter().filter(|t| *t == term).count()
}

pub struct Stats {
    pub n: f64,
    pub avgdl: f64,
    pub total: f64,
}

pub fn stats(docs: &[Doc]) -> Stats {
    let total: usize = docs.iter().map(|d| d.1.len()).sum();
    let n = docs.len() as f64;
    Stats {
        n,
        avgdl: if docs.is_empty() {
            0.0
        } else {
            total as f64 / n
        },
        total: total as f64,
    }
}

pub fn df(docs: &[Doc], term: &str) -> f64 {
    docs.iter()
        .filter(|d| d.1.iter().any(|t| t == term))
        .count() as f64
}

pub fn cf(docs: &[Doc], term: &str) -> f64 {
    docs.iter().map(|d| count(&d.1, term)).sum::<usize>() as f64
}

#[derive(Clone, Copy, Debug)]
pub enum BruteModel {
    Bm25 { k1: f64, b: f64 },
    TfIdf,
    Pl2 { c: f64 },
    Dph,
}

/// Score of one document; query terms visited in ascending order.
pub fn brute_score(
    model: BruteModel,
    query: &BTreeMap<String, f64>,
    docs: &[Doc],
    doc: &[String],
) -> f64 {
    let s = stats(docs);
    let dl = doc.len() as f64;
    let mut total = 0.0;
    for (term, w) in query {
        let tf = count(doc, term) as f64;
        if tf == 0.0 {
            continue;
        }
        let df = df(docs, term);
        let f = cf(docs, term);
        let part = match model {
            BruteModel::Bm25 { k1, b } => {
                let idf = ((s.n - df + 0.5) / (df + 0.5) + 1.0).ln();
                idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / s.avgdl))
            }
            BruteModel::TfIdf => (1.0 + tf.ln()) * ((s.n + 1.0) / (df + 0.5)).ln(),
            BruteModel::Pl2 { c } => {
                let tfn = tf * (1.0 + c * s.avgdl / dl).log2();
                let lambda = f / s.n;
                (tfn * (tfn / lambda).log2()
                    + (lambda - tfn) * std::f64::consts::LOG2_E
                    + 0.5 * (2.0 * std::f64::consts::PI * tfn).log2())
                    / (tfn + 1.0)
            }
            BruteModel::Dph => {
                let fr = tf / dl;
                let norm = (1.0 - fr) * (1.0 - fr) / (tf + 1.0);
                if norm == 0.0 {
                    0.0
                } else {
                    norm * (tf * ((tf * s.avgdl / dl) * (s.n / f)).log2()
                        + 0.5 * (2.0 * std::f64::consts::PI * tf * (1.0 - fr)).log2())
                }
            }
        };
        total += w * part;
    }
    total
}

/// Full ordering by an explicit sort key.
pub fn brute_rank(
    model: BruteModel,
    query: &BTreeMap<String, f64>,
    docs: &[Doc],
    zero_heuristic: bool,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64, usize)> = docs
        .iter()
        .map(|(id, toks)| {
            (
                id.clone(),
                brute_score(model, query, docs, toks) + 0.0,
                toks.len(),
            )
        })
        .collect();
    brute_order(&mut scored, zero_heuristic);
    scored.into_iter().map(|(id, s, _)| (id, s)).collect()
}

/// Orders `(id, score, length)` triples: score descending, then (zero
/// scores with the heuristic only) length ascending, then id ascending.
pub fn brute_order(items: &mut [(String, f64, usize)], zero_heuristic: bool) {
    items.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| {
                let la = if zero_heuristic && a.1 == 0.0 { a.2 } else { 0 };
                let lb = if zero_heuristic && b.1 == 0.0 { b.2 } else { 0 };
                la.cmp(&lb)
            })
            .then_with(|| a.0.cmp(&b.0))
    });
}

pub fn plain_weights(query: &[String]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for t in query {
        *counts.entry(t.clone()).or_default() += 1.0;
    }
    let max = counts.values().copied().fold(0.0, f64::max);
    counts.into_iter().map(|(t, c)| (t, c / max)).collect()
}

fn feedback<'a>(docs: &'a [Doc], fb_ids: &[String]) -> Vec<&'a Vec<String>> {
    fb_ids
        .iter()
        .map(|id| &docs.iter().find(|d| &d.0 == id).unwrap().1)
        .collect()
}

fn top_terms(mut weighted: Vec<(String, f64)>, n: usize) -> Vec<(String, f64)> {
    weighted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    weighted.truncate(n);
    weighted
}

fn merge(query: &BTreeMap<String, f64>, selected: &[(String, f64)]) -> BTreeMap<String, f64> {
    let qmax = query.values().copied().fold(0.0, f64::max);
    let xmax = selected.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut out: BTreeMap<String, f64> = query.iter().map(|(t, w)| (t.clone(), w / qmax)).collect();
    for (t, w) in selected {
        *out.entry(t.clone()).or_insert(0.0) += w / xmax;
    }
    out
}

fn feedback_vocab(fb: &[&Vec<String>]) -> BTreeSet<String> {
    fb.iter().flat_map(|d| d.iter().cloned()).collect()
}

pub fn brute_bo1(
    query: &BTreeMap<String, f64>,
    docs: &[Doc],
    fb_ids: &[String],
    fb_terms: usize,
) -> BTreeMap<String, f64> {
    let fb = feedback(docs, fb_ids);
    let n = docs.len() as f64;
    let weighted = feedback_vocab(&fb)
        .into_iter()
        .map(|t| {
            let tf_x: usize = fb.iter().map(|d| count(d, &t)).sum();
            let p = cf(docs, &t) / n;
            let w = tf_x as f64 * ((1.0 + p) / p).log2() + (1.0 + p).log2();
            (t, w)
        })
        .collect();
    merge(query, &top_terms(weighted, fb_terms))
}

pub fn brute_kl(
    query: &BTreeMap<String, f64>,
    docs: &[Doc],
    fb_ids: &[String],
    fb_terms: usize,
) -> BTreeMap<String, f64> {
    let fb = feedback(docs, fb_ids);
    let fb_len: usize = fb.iter().map(|d| d.len()).sum();
    let total = stats(docs).total;
    let weighted = feedback_vocab(&fb)
        .into_iter()
        .filter_map(|t| {
            let tf_x: usize = fb.iter().map(|d| count(d, &t)).sum();
            let px = tf_x as f64 / fb_len as f64;
            let pc = cf(docs, &t) / total;
            (px > pc).then(|| (t, px * (px / pc).log2()))
        })
        .collect();
    merge(query, &top_terms(weighted, fb_terms))
}

/// Relevance model with plain products (no log space).
pub fn brute_rm3(
    query: &BTreeMap<String, f64>,
    docs: &[Doc],
    fb_ids: &[String],
    fb_terms: usize,
    alpha: f64,
    mu: f64,
) -> BTreeMap<String, f64> {
    let fb = feedback(docs, fb_ids);
    let total = stats(docs).total;
    let background = |t: &str| {
        if total == 0.0 {
            0.0
        } else {
            cf(docs, t) / total
        }
    };
    let p_td = |t: &str, d: &Vec<String>| {
        (count(d, t) as f64 + mu * background(t)) / (d.len() as f64 + mu)
    };
    let lik: Vec<f64> = fb
        .iter()
        .map(|d| query.keys().map(|t| p_td(t, d)).product())
        .collect();
    let lik_sum: f64 = lik.iter().sum();
    let post: Vec<f64> = if lik_sum == 0.0 {
        vec![1.0 / fb.len() as f64; fb.len()]
    } else {
        lik.iter().map(|l| l / lik_sum).collect()
    };
    let q_sum: f64 = query.values().sum();
    let mut cands = feedback_vocab(&fb);
    cands.extend(query.keys().cloned());
    let p_prime: BTreeMap<String, f64> = cands
        .into_iter()
        .map(|t| {
            let rm1: f64 = fb.iter().zip(&post).map(|(d, w)| p_td(&t, d) * w).sum();
            let mle = query.get(&t).map_or(0.0, |w| w / q_sum);
            let p = alpha * mle + (1.0 - alpha) * rm1;
            (t, p)
        })
        .collect();
    let positive: Vec<(String, f64)> = p_prime
        .iter()
        .filter(|(_, p)| **p > 0.0)
        .map(|(t, p)| (t.clone(), *p))
        .collect();
    let mut kept: BTreeMap<String, f64> = top_terms(positive, fb_terms).into_iter().collect();
    for t in query.keys() {
        if p_prime[t] > 0.0 {
            kept.insert(t.clone(), p_prime[t]);
        }
    }
    let sum: f64 = kept.values().sum();
    kept.into_iter().map(|(t, p)| (t, p / sum)).collect()
}

pub fn brute_mrr(
    rankings: &[(String, Vec<String>)],
    qrels: &BTreeMap<String, BTreeSet<String>>,
    k: usize,
) -> f64 {
    let mut sum = 0.0;
    for (q, docs) in rankings {
        let rel = &qrels[q];
        for (i, d) in docs.iter().enumerate().take(k) {
            if rel.contains(d) {
                sum += 1.0 / (i + 1) as f64;
                break;
            }
        }
    }
    sum / rankings.len() as f64
}

pub const VOCAB: [&str; 10] = [
    "red", "blue", "green", "block", "tower", "place", "where", "what", "top", "left",
];

/// Random corpus of at most `max_docs` documents with at most `max_len`
/// tokens each, drawn from [`VOCAB`].
pub fn random_corpus<R: Rng>(rng: &mut R, max_docs: usize, max_len: usize) -> Vec<Doc> {
    let n = rng.gen_range(1..=max_docs);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(0..=max_len);
            let toks = (0..len)
                .map(|_| VOCAB.choose(rng).unwrap().to_string())
                .collect();
            (format!("d{i:02}"), toks)
        })
        .collect()
}

pub fn random_query<R: Rng>(rng: &mut R) -> Vec<String> {
    let len = rng.gen_range(1..=4);
    (0..len)
        .map(|_| VOCAB.choose(rng).unwrap().to_string())
        .collect()
}

/// Queries whose relevant question is long but repeats the query term, plus
/// one whose relevant question is short.
pub type Judged = BTreeMap<String, BTreeSet<String>>;

pub fn length_skewed() -> (Vec<Doc>, Vec<(String, String)>, Judged) {
    let mut docs = Vec::new();
    let mut queries = Vec::new();
    let mut qrels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, term) in ["alpha", "beta", "gamma"].iter().enumerate() {
        let mut long = vec![term.to_string(); 3];
        long.extend((0..17).map(|j| format!("fill{i}x{j}")));
        docs.push((format!("long{i}"), long));
        docs.push((
            format!("short{i}"),
            vec![term.to_string(), format!("pad{i}")],
        ));
        queries.push((format!("q{i}"), term.to_string()));
        qrels
            .entry(format!("q{i}"))
            .or_default()
            .insert(format!("long{i}"));
    }
    let mut long = vec!["delta".to_string(); 2];
    long.extend((0..38).map(|j| format!("filldx{j}")));
    docs.push(("longd".into(), long));
    docs.push(("shortd".into(), vec!["delta".into(), "padd".into()]));
    queries.push(("q3".into(), "delta".into()));
    qrels
        .entry("q3".into())
        .or_default()
        .insert("shortd".into());
    (docs, queries, qrels)
}
