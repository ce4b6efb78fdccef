//! Lexical weighting models and full-pool ranking.
//!
//! Per matching query term `t` with query weight `w`, term frequency `tf`,
//! document length `dl`, document frequency `df`, collection frequency `F`,
//! `N` documents and mean length `avgdl`:
//!
//! ```text
//! BM25   w · ln((N − df + 0.5)/(df + 0.5) + 1) · tf·(k1+1) / (tf + k1·(1 − b + b·dl/avgdl))
//! TF-IDF w · (1 + ln tf) · ln((N + 1)/(df + 0.5))
//! PL2    tfn = tf·log2(1 + c·avgdl/dl), λ = F/N
//!        w · (tfn·log2(tfn/λ) + (λ − tfn)·log2 e + 0.5·log2(2π·tfn)) / (tfn + 1)
//! DPH    f = tf/dl, norm = (1 − f)²/(tf + 1)
//!        w · norm · (tf·log2((tf·avgdl/dl)·(N/F)) + 0.5·log2(2π·tf·(1 − f)))
//! ```
//!
//! A document's score is the sum over matching terms, accumulated in
//! ascending term order. Documents sharing no term with the query score 0.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::QueryRecord;
use crate::error::{Error, Result};
use crate::index::{CollectionStats, DocNo, InvertedIndex, TermStats};
use crate::textprep::TokenList;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Bm25Params {
    /// Best cell of the validation grid search.
    pub const TUNED: Bm25Params = Bm25Params { k1: 1.8, b: 0.98 };

    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Bm25Params { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "k1 must be >= 0, got {}",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParameter(format!(
                "b must be in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pl2Params {
    pub c: f64,
}

impl Pl2Params {
    pub fn new(c: f64) -> Result<Self> {
        let p = Pl2Params { c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c must be > 0, got {}",
                self.c
            )));
        }
        Ok(())
    }
}

impl Default for Pl2Params {
    fn default() -> Self {
        Pl2Params { c: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Bm25(Bm25Params),
    TfIdf,
    Pl2(Pl2Params),
    Dph,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Bm25(_) => "bm25",
            Model::TfIdf => "tfidf",
            Model::Pl2(_) => "pl2",
            Model::Dph => "dph",
        }
    }

    /// Model with default parameters by name.
    pub fn from_name(name: &str) -> Option<Model> {
        match name.to_ascii_lowercase().as_str() {
            "bm25" => Some(Model::Bm25(Bm25Params::default())),
            "tfidf" | "tf-idf" => Some(Model::TfIdf),
            "pl2" => Some(Model::Pl2(Pl2Params::default())),
            "dph" => Some(Model::Dph),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Bm25(p) => p.validate(),
            Model::Pl2(p) => p.validate(),
            Model::TfIdf | Model::Dph => Ok(()),
        }
    }

    /// Contribution of one matching term with unit query weight. `tf >= 1`.
    pub fn term_score(&self, tf: u32, dl: u32, term: TermStats, stats: &CollectionStats) -> f64 {
        let tf = f64::from(tf);
        let dl = f64::from(dl);
        let n = stats.num_docs as f64;
        let df = f64::from(term.df);
        let cf = term.cf as f64;
        match *self {
            Model::Bm25(Bm25Params { k1, b }) => {
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / stats.avgdl))
            }
            Model::TfIdf => (1.0 + tf.ln()) * ((n + 1.0) / (df + 0.5)).ln(),
            Model::Pl2(Pl2Params { c }) => {
                let tfn = tf * (1.0 + c * stats.avgdl / dl).log2();
                let lambda = cf / n;
                (tfn * (tfn / lambda).log2()
                    + (lambda - tfn) * std::f64::consts::LOG2_E
                    + 0.5 * (2.0 * std::f64::consts::PI * tfn).log2())
                    / (tfn + 1.0)
            }
            Model::Dph => {
                let f = tf / dl;
                let norm = (1.0 - f) * (1.0 - f) / (tf + 1.0);
                if norm == 0.0 {
                    // f = 1: the log term below is -inf.
                    return 0.0;
                }
                norm * (tf * ((tf * stats.avgdl / dl) * (n / cf)).log2()
                    + 0.5 * (2.0 * std::f64::consts::PI * tf * (1.0 - f)).log2())
            }
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Bm25(p) => write!(f, "bm25(k1={},b={})", p.k1, p.b),
            Model::TfIdf => f.write_str("tfidf"),
            Model::Pl2(p) => write!(f, "pl2(c={})", p.c),
            Model::Dph => f.write_str("dph"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Plain,
    Expanded,
}

/// A query as positively weighted terms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuery {
    pub query_id: String,
    terms: BTreeMap<String, f64>,
    pub provenance: Provenance,
}

impl WeightedQuery {
    /// Plain weighting: `qtf / max qtf`.
    pub fn from_tokens(query_id: impl Into<String>, tokens: &TokenList) -> Self {
        WeightedQuery {
            query_id: query_id.into(),
            terms: max_normalized_counts(tokens.iter().map(String::as_str)),
            provenance: Provenance::Plain,
        }
    }

    pub fn from_record(q: &QueryRecord) -> Self {
        Self::from_tokens(q.query_id.clone(), &q.tokens)
    }

    pub fn with_weights(
        query_id: impl Into<String>,
        terms: BTreeMap<String, f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if let Some((t, w)) = terms.iter().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weight of `{t}` must be positive, got {w}"
            )));
        }
        Ok(WeightedQuery {
            query_id: query_id.into(),
            terms,
            provenance,
        })
    }

    /// Terms in ascending order with their weights.
    pub fn terms(&self) -> &BTreeMap<String, f64> {
        &self.terms
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.terms.get(term).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.terms.values().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn max_normalized_counts<'a>(
    tokens: impl Iterator<Item = &'a str>,
) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.to_owned()).or_default() += 1;
    }
    let max = counts.values().copied().max().unwrap_or(1);
    counts
        .into_iter()
        .map(|(t, c)| (t, f64::from(c) / f64::from(max)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        ScoredDoc {
            doc_id: doc_id.into(),
            score,
        }
    }
}

/// Ordered documents for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query_id: String,
    pub entries: Vec<ScoredDoc>,
    pub zero_heuristic: bool,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn truncate(&mut self, depth: Depth) {
        if let Depth::Top(k) = depth {
            self.entries.truncate(k);
        }
    }
}

/// How many ranked entries to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Depth {
    #[default]
    All,
    Top(usize),
}

impl Depth {
    pub fn validate(&self) -> Result<()> {
        match self {
            Depth::Top(0) => Err(Error::InvalidParameter("depth must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Score of one registered document.
pub fn score(q: &WeightedQuery, doc_id: &str, index: &InvertedIndex, model: &Model) -> Result<f64> {
    let doc = index
        .doc_no(doc_id)
        .ok_or_else(|| Error::UnknownDocument(doc_id.to_owned()))?;
    let dl = index.doc_len(doc);
    let mut total = 0.0;
    for (term, &w) in q.terms() {
        let Some(t) = index.term_no(term) else {
            continue;
        };
        let tf = index.tf(t, doc);
        if tf > 0 {
            total += w * model.term_score(tf, dl, index.term_stats(t), index.stats());
        }
    }
    Ok(total)
}

pub fn score_bm25(
    q: &WeightedQuery,
    doc_id: &str,
    index: &InvertedIndex,
    params: Bm25Params,
) -> Result<f64> {
    score(q, doc_id, index, &Model::Bm25(params))
}

pub fn score_tfidf(q: &WeightedQuery, doc_id: &str, index: &InvertedIndex) -> Result<f64> {
    score(q, doc_id, index, &Model::TfIdf)
}

pub fn score_pl2(
    q: &WeightedQuery,
    doc_id: &str,
    index: &InvertedIndex,
    params: Pl2Params,
) -> Result<f64> {
    score(q, doc_id, index, &Model::Pl2(params))
}

pub fn score_dph(q: &WeightedQuery, doc_id: &str, index: &InvertedIndex) -> Result<f64> {
    score(q, doc_id, index, &Model::Dph)
}

/// Scores of every registered document, indexed by document number.
pub fn score_all(q: &WeightedQuery, index: &InvertedIndex, model: &Model) -> Vec<f64> {
    let mut acc = vec![0.0; index.num_docs()];
    for (term, &w) in q.terms() {
        let Some(t) = index.term_no(term) else {
            continue;
        };
        let ts = index.term_stats(t);
        for p in index.postings(t) {
            acc[p.doc as usize] +=
                w * model.term_score(p.tf, index.doc_len(p.doc), ts, index.stats());
        }
    }
    acc
}

/// A document awaiting ordering: id, score and token count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate<'a> {
    pub doc_id: &'a str,
    pub score: f64,
    pub length: u32,
}

/// Orders candidates by score descending. Equal scores break by doc id,
/// except that with `zero_heuristic` candidates scoring exactly zero are
/// ordered by token count ascending first.
pub fn order_candidates(
    query_id: &str,
    mut candidates: Vec<Candidate<'_>>,
    zero_heuristic: bool,
) -> Ranking {
    candidates.sort_by(|a, b| compare(a, b, zero_heuristic));
    Ranking {
        query_id: query_id.to_owned(),
        entries: candidates
            .into_iter()
            // Collapse -0.0 so it prints and compares as zero.
            .map(|c| ScoredDoc::new(c.doc_id, if c.score == 0.0 { 0.0 } else { c.score }))
            .collect(),
        zero_heuristic,
    }
}

fn compare(a: &Candidate<'_>, b: &Candidate<'_>, zero_heuristic: bool) -> Ordering {
    let by_score = if a.score == b.score {
        Ordering::Equal
    } else {
        b.score.total_cmp(&a.score)
    };
    by_score
        .then_with(|| {
            if zero_heuristic && a.score == 0.0 {
                a.length.cmp(&b.length)
            } else {
                Ordering::Equal
            }
        })
        .then_with(|| a.doc_id.cmp(b.doc_id))
}

/// Ranks the whole pool with [`order_candidates`] and truncates to `depth`.
pub fn rank(
    q: &WeightedQuery,
    index: &InvertedIndex,
    model: &Model,
    depth: Depth,
    zero_heuristic: bool,
) -> Result<Ranking> {
    model.validate()?;
    depth.validate()?;
    let scores = score_all(q, index, model);
    let candidates = (0..index.num_docs() as DocNo)
        .map(|d| Candidate {
            doc_id: index.doc_id(d),
            score: scores[d as usize],
            length: index.doc_len(d),
        })
        .collect();
    let mut ranking = order_candidates(&q.query_id, candidates, zero_heuristic);
    ranking.truncate(depth);
    Ok(ranking)
}
