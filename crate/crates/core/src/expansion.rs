//! Pseudo-relevance feedback query expansion.
//!
//! Candidate expansion terms come only from the top `fb_docs` documents of a
//! first-pass ranking. Term selection is by weight descending with ties broken
//! lexicographically, so raising `fb_terms` only ever appends terms.
//!
//! Bo1 and KL merge into the query by max-normalised sum:
//! `w'(t) = w_q(t)/max w_q + w_x(t)/max w_x`, where either part is absent
//! when `t` is not in the query or was not selected. RM3 interpolates the
//! query's term distribution with a relevance model and renormalises the kept
//! weights to sum to one.

use std::collections::BTreeMap;

use crate::corpus::QueryRecord;
use crate::error::{Error, Result};
use crate::index::{DocNo, InvertedIndex, TermNo};
use crate::weighting::{max_normalized_counts, Provenance, Ranking, WeightedQuery};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackConfig {
    pub fb_docs: usize,
    pub fb_terms: usize,
    /// RM3 weight of the original query distribution.
    pub alpha: f64,
    /// RM3 Dirichlet smoothing.
    pub mu: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            fb_docs: 3,
            fb_terms: 10,
            alpha: 0.5,
            mu: 2500.0,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fb_docs == 0 {
            return Err(Error::InvalidParameter("fb_docs must be at least 1".into()));
        }
        if self.fb_terms == 0 {
            return Err(Error::InvalidParameter(
                "fb_terms must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must be > 0, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

fn feedback_docs(
    first_pass: &Ranking,
    index: &InvertedIndex,
    cfg: &FeedbackConfig,
) -> Result<Vec<DocNo>> {
    cfg.validate()?;
    if first_pass.is_empty() {
        return Err(Error::NoFeedbackDocuments);
    }
    first_pass
        .doc_ids()
        .take(cfg.fb_docs)
        .map(|id| {
            index
                .doc_no(id)
                .ok_or_else(|| Error::UnknownDocument(id.to_owned()))
        })
        .collect()
}

/// Summed term frequencies over the feedback set, terms ascending.
fn feedback_counts(index: &InvertedIndex, docs: &[DocNo]) -> BTreeMap<TermNo, u64> {
    let mut counts = BTreeMap::new();
    for &d in docs {
        for &(t, tf) in index.doc_terms(d) {
            *counts.entry(t).or_default() += u64::from(tf);
        }
    }
    counts
}

/// Top `n` by weight descending; input must be in ascending term order so
/// the stable sort leaves ties lexicographic.
fn select_top<K: Clone>(weighted: impl Iterator<Item = (K, f64)>, n: usize) -> Vec<(K, f64)> {
    let mut all: Vec<(K, f64)> = weighted.collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1));
    all.truncate(n);
    all
}

fn merge_max_normalized(q: &WeightedQuery, selected: &[(String, f64)]) -> Result<WeightedQuery> {
    let q_max = q.max_weight();
    let mut terms: BTreeMap<String, f64> = q
        .terms()
        .iter()
        .map(|(t, w)| (t.clone(), w / q_max))
        .collect();
    let x_max = selected.iter().map(|s| s.1).fold(0.0, f64::max);
    for (t, w) in selected {
        *terms.entry(t.clone()).or_default() += w / x_max;
    }
    WeightedQuery::with_weights(q.query_id.clone(), terms, Provenance::Expanded)
}

/// Bo1 weight of a term with `tf_x` feedback occurrences and
/// `p_n = F(t)/N`.
pub fn bo1_weight(tf_x: f64, p_n: f64) -> f64 {
    tf_x * ((1.0 + p_n) / p_n).log2() + (1.0 + p_n).log2()
}

/// Every Bo1 candidate from the feedback set, best first.
pub fn bo1_terms(
    first_pass: &Ranking,
    index: &InvertedIndex,
    cfg: &FeedbackConfig,
) -> Result<Vec<(String, f64)>> {
    let docs = feedback_docs(first_pass, index, cfg)?;
    let n = index.num_docs() as f64;
    let weighted = feedback_counts(index, &docs).into_iter().map(|(t, tf_x)| {
        let p_n = index.term_stats(t).cf as f64 / n;
        (t, bo1_weight(tf_x as f64, p_n))
    });
    Ok(named(index, select_top(weighted, usize::MAX)))
}

pub fn expand_bo1(
    q: &WeightedQuery,
    first_pass: &Ranking,
    index: &InvertedIndex,
    cfg: &FeedbackConfig,
) -> Result<WeightedQuery> {
    let mut selected = bo1_terms(first_pass, index, cfg)?;
    selected.truncate(cfg.fb_terms);
    merge_max_normalized(q, &selected)
}

fn named(index: &InvertedIndex, terms: Vec<(TermNo, f64)>) -> Vec<(String, f64)> {
    terms
        .into_iter()
        .map(|(t, w)| (index.term(t).to_owned(), w))
        .collect()
}

/// KL weight `p_x·log2(p_x/p_c)`, zero unless `p_x > p_c`.
pub fn kl_weight(p_x: f64, p_c: f64) -> f64 {
    if p_x > p_c {
        p_x * (p_x / p_c).log2()
    } else {
        0.0
    }
}

/// Every KL candidate with positive weight, best first.
pub fn kl_terms(
    first_pass: &Ranking,
    index: &InvertedIndex,
    cfg: &FeedbackConfig,
) -> Result<Vec<(String, f64)>> {
    let docs = feedback_docs(first_pass, index, cfg)?;
    let fb_total: u64 = docs.iter().map(|&d| u64::from(index.doc_len(d))).sum();
    let total = index.stats().total_tokens as f64;
    let weighted = feedback_counts(index, &docs)
        .into_iter()
        .map(|(t, tf_x)| {
            let p_x = tf_x as f64 / fb_total as f64;
            let p_c = index.term_stats(t).cf as f64 / total;
            (t, kl_weight(p_x, p_c))
        })
        .filter(|(_, w)| *w > 0.0);
    Ok(named(index, select_top(weighted, usize::MAX)))
}

pub fn expand_kl(
    q: &WeightedQuery,
    first_pass: &Ranking,
    index: &InvertedIndex,
    cfg: &FeedbackConfig,
) -> Result<WeightedQuery> {
    let mut selected = kl_terms(first_pass, index, cfg)?;
    selected.truncate(cfg.fb_terms);
    merge_max_normalized(q, &selected)
}

/// Dirichlet-smoothed `P(t|d)` for a term string.
fn smoothed(index: &InvertedIndex, term: &str, doc: DocNo, mu: f64) -> f64 {
    let total = index.stats().total_tokens;
    let (tf, background) = match index.term_no(term) {
        Some(t) => (
            f64::from(index.tf(t, doc)),
            index.term_stats(t).cf as f64 / total as f64,
        ),
        // Also covers a collection with no tokens at all.
        None => (0.0, 0.0),
    };
    (tf + mu * background) / (f64::from(index.doc_len(doc)) + mu)
}

/// Normalised query likelihood over the feedback documents. Falls back to a
/// uniform distribution when every document assigns the query probability 0.
fn query_likelihoods(
    q: &WeightedQuery,
    index: &InvertedIndex,
    docs: &[DocNo],
    mu: f64,
) -> Vec<f64> {
    let log_lik: Vec<f64> = docs
        .iter()
        .map(|&d| {
            q.terms()
                .keys()
                .map(|t| smoothed(index, t, d, mu).ln())
                .sum()
        })
        .collect();
    let max = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        log::warn!(
            "query `{}`: zero likelihood in every feedback document; using uniform document weights",
            q.query_id
        );
        return vec![1.0 / docs.len() as f64; docs.len()];
    }
    let unnorm: Vec<f64> = log_lik.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|p| p / sum).collect()
}

pub fn expand_rm3(
    q: &WeightedQuery,
    first_pass: &Ranking,
    index: &InvertedIndex,
    cfg: &FeedbackConfig,
) -> Result<WeightedQuery> {
    let docs = feedback_docs(first_pass, index, cfg)?;
    let doc_weights = query_likelihoods(q, index, &docs, cfg.mu);

    let q_sum: f64 = q.terms().values().sum();
    let mut candidates: BTreeMap<String, f64> = feedback_counts(index, &docs)
        .into_keys()
        .map(|t| (index.term(t).to_owned(), 0.0))
        .collect();
    candidates.extend(q.terms().keys().map(|t| (t.clone(), 0.0)));
    for (t, p) in candidates.iter_mut() {
        let rm1: f64 = docs
            .iter()
            .zip(&doc_weights)
            .map(|(&d, &w)| smoothed(index, t, d, cfg.mu) * w)
            .sum();
        let mle = q.weight(t).map_or(0.0, |w| w / q_sum);
        *p = cfg.alpha * mle + (1.0 - cfg.alpha) * rm1;
    }

    let mut kept: BTreeMap<String, f64> = select_top(
        candidates
            .iter()
            .map(|(t, p)| (t.clone(), *p))
            .filter(|(_, p)| *p > 0.0),
        cfg.fb_terms,
    )
    .into_iter()
    .collect();
    for t in q.terms().keys() {
        let p = candidates[t];
        if p > 0.0 {
            kept.insert(t.clone(), p);
        }
    }
    let sum: f64 = kept.values().sum();
    for p in kept.values_mut() {
        *p /= sum;
    }
    WeightedQuery::with_weights(q.query_id.clone(), kept, Provenance::Expanded)
}

/// Appends externally generated texts to the query and recounts
/// `qtf / max qtf` over the merged tokens.
pub fn expand_external(q: &QueryRecord, generated: &[String]) -> WeightedQuery {
    let extra: Vec<String> = generated
        .iter()
        .flat_map(|text| crate::textprep::preprocess(text).into_vec())
        .collect();
    let tokens = q.tokens.iter().chain(&extra).map(String::as_str);
    WeightedQuery::with_weights(
        q.query_id.clone(),
        max_normalized_counts(tokens),
        Provenance::Expanded,
    )
    .expect("count ratios are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentSet;
    use crate::textprep::preprocess;
    use crate::weighting::{rank, Bm25Params, Depth, Model, ScoredDoc};
    use approx::assert_abs_diff_eq;

    fn index(pairs: &[(&str, &str)]) -> InvertedIndex {
        InvertedIndex::build(&DocumentSet::from_pairs(pairs.iter().copied()).unwrap())
    }

    fn query(text: &str) -> WeightedQuery {
        WeightedQuery::from_tokens("q", &preprocess(text))
    }

    fn first_pass(ids: &[&str]) -> Ranking {
        Ranking {
            query_id: "q".into(),
            entries: ids.iter().map(|d| ScoredDoc::new(*d, 1.0)).collect(),
            zero_heuristic: false,
        }
    }

    fn cfg(fb_docs: usize, fb_terms: usize) -> FeedbackConfig {
        FeedbackConfig {
            fb_docs,
            fb_terms,
            ..Default::default()
        }
    }

    #[test]
    fn bo1_hand_value() {
        assert_abs_diff_eq!(bo1_weight(2.0, 0.75), 3.2522, epsilon = 1e-4);
        // N=4, F(red)=3; red occurs twice across the top two documents.
        let idx = index(&[("a", "red x"), ("b", "red y"), ("c", "red z"), ("d", "w")]);
        let q = query("red");
        let out = expand_bo1(&q, &first_pass(&["a", "b"]), &idx, &cfg(2, 1)).unwrap();
        // red is both the max query term and the top expansion term.
        assert_eq!(out.weight("red"), Some(2.0));
        assert_eq!(out.provenance, Provenance::Expanded);
    }

    #[test]
    fn bo1_all_candidates_when_fb_terms_large() {
        let idx = index(&[("a", "red x"), ("b", "red y"), ("c", "blue")]);
        let out = expand_bo1(&query("blue"), &first_pass(&["a", "b"]), &idx, &cfg(2, 100)).unwrap();
        let terms: Vec<_> = out.terms().keys().cloned().collect();
        assert_eq!(terms, ["blue", "red", "x", "y"]);
        assert_eq!(out.weight("blue"), Some(1.0));
    }

    #[test]
    fn no_feedback_documents() {
        let idx = index(&[("a", "red")]);
        let empty = first_pass(&[]);
        let c = cfg(3, 3);
        assert!(matches!(
            expand_bo1(&query("red"), &empty, &idx, &c),
            Err(Error::NoFeedbackDocuments)
        ));
        assert!(matches!(
            expand_kl(&query("red"), &empty, &idx, &c),
            Err(Error::NoFeedbackDocuments)
        ));
        assert!(matches!(
            expand_rm3(&query("red"), &empty, &idx, &c),
            Err(Error::NoFeedbackDocuments)
        ));
    }

    #[test]
    fn kl_weights() {
        assert_eq!(kl_weight(0.5, 0.125), 1.0);
        assert_eq!(kl_weight(0.1, 0.2), 0.0);
        // One document that is the whole collection: P_x = P_c everywhere.
        let idx = index(&[("a", "red red tower")]);
        let q = query("red red tower");
        let out = expand_kl(&q, &first_pass(&["a"]), &idx, &cfg(1, 10)).unwrap();
        assert_eq!(out.terms(), q.terms());
        assert_eq!(out.provenance, Provenance::Expanded);
    }

    #[test]
    fn rm3_alpha_one_is_query_distribution() {
        let idx = index(&[
            ("a", "red block"),
            ("b", "blue block tower"),
            ("c", "red red tower"),
        ]);
        let q = query("red red tower");
        let c = FeedbackConfig {
            alpha: 1.0,
            ..cfg(2, 10)
        };
        let out = expand_rm3(&q, &first_pass(&["c", "a"]), &idx, &c).unwrap();
        assert_eq!(out.terms().len(), 2);
        assert_abs_diff_eq!(out.weight("red").unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.weight("tower").unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rm3_alpha_zero_single_document() {
        let idx = index(&[
            ("a", "red block"),
            ("b", "blue block tower"),
            ("c", "red red tower"),
        ]);
        let c = FeedbackConfig {
            alpha: 0.0,
            mu: 1.0,
            ..cfg(1, 10)
        };
        let out = expand_rm3(&query("red"), &first_pass(&["c"]), &idx, &c).unwrap();
        // P(t|c) = (tf + F/8) / 4 over c's terms {red, tower}
        let red = (2.0 + 3.0 / 8.0) / 4.0;
        let tower = (1.0 + 2.0 / 8.0) / 4.0;
        assert_abs_diff_eq!(
            out.weight("red").unwrap(),
            red / (red + tower),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            out.weight("tower").unwrap(),
            tower / (red + tower),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rm3_absent_query_term_falls_back_to_uniform() {
        let idx = index(&[("a", "red block"), ("b", "blue")]);
        let c = FeedbackConfig {
            mu: 10.0,
            ..cfg(2, 10)
        };
        let out = expand_rm3(&query("red green"), &first_pass(&["a", "b"]), &idx, &c).unwrap();
        assert_abs_diff_eq!(out.terms().values().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(out.weight("green").is_some());
        assert!(out.weight("red").is_some());
    }

    #[test]
    fn expansion_keeps_query_terms() {
        let idx = index(&[
            ("a", "red block"),
            ("b", "blue block tower"),
            ("c", "red red tower"),
        ]);
        let q = query("green tower");
        let fp = rank(
            &q,
            &idx,
            &Model::Bm25(Bm25Params::default()),
            Depth::All,
            true,
        )
        .unwrap();
        for out in [
            expand_bo1(&q, &fp, &idx, &cfg(2, 1)).unwrap(),
            expand_kl(&q, &fp, &idx, &cfg(2, 1)).unwrap(),
            expand_rm3(&q, &fp, &idx, &cfg(2, 1)).unwrap(),
        ] {
            assert!(out.weight("green").unwrap() > 0.0);
            assert!(out.weight("tower").unwrap() > 0.0);
        }
    }

    #[test]
    fn config_validation() {
        let idx = index(&[("a", "red")]);
        for bad in [
            cfg(0, 1),
            cfg(1, 0),
            FeedbackConfig {
                alpha: 1.5,
                ..cfg(1, 1)
            },
            FeedbackConfig {
                mu: 0.0,
                ..cfg(1, 1)
            },
        ] {
            assert!(expand_rm3(&query("red"), &first_pass(&["a"]), &idx, &bad).is_err());
        }
    }

    #[test]
    fn external_texts() {
        let q = QueryRecord::new("i1", "place red blocks");
        let out = expand_external(&q, &["which color do you mean".to_owned()]);
        assert_eq!(out.terms().len(), 8);
        assert!(out.terms().values().all(|&w| w == 1.0));
        assert_eq!(out.provenance, Provenance::Expanded);

        let out = expand_external(&q, &[]);
        assert_eq!(out.terms(), WeightedQuery::from_record(&q).terms());

        let out = expand_external(&q, &["red, RED?".to_owned()]);
        assert_eq!(out.weight("red"), Some(1.0));
        assert_abs_diff_eq!(out.weight("place").unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }
}
