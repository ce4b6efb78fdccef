//! Second-stage reordering of the head of a ranking.
//!
//! Only the first `min(top_n, len)` entries are touched; their scores are
//! replaced by the reranker's. Entries past the head keep their order and
//! first-stage scores, so the printed scores need not be monotone across the
//! head/tail boundary.

use crate::corpus::{ScoreTable, VectorTable};
use crate::error::{Error, Result};
use crate::weighting::{Ranking, ScoredDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RerankConfig {
    pub top_n: usize,
}

impl Default for RerankConfig {
    fn default() -> Self {
        RerankConfig { top_n: 20 }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::InvalidParameter("top_n must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    dot / (norm(u) * norm(v))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vector<'a>(vectors: &'a VectorTable, id: &str) -> Result<&'a [f64]> {
    let v = vectors
        .get(id)
        .ok_or_else(|| Error::MissingVector(id.to_owned()))?;
    if norm(v) == 0.0 {
        return Err(Error::ZeroNorm(id.to_owned()));
    }
    Ok(v)
}

/// Replaces head scores with `new_scores` and sorts the head by them,
/// descending, ties by doc id.
fn reorder_head(r: &Ranking, head: usize, new_scores: Vec<f64>) -> Ranking {
    let mut rescored: Vec<ScoredDoc> = r.entries[..head]
        .iter()
        .zip(new_scores)
        .map(|(e, s)| ScoredDoc::new(e.doc_id.clone(), s))
        .collect();
    rescored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    rescored.extend_from_slice(&r.entries[head..]);
    Ranking {
        query_id: r.query_id.clone(),
        entries: rescored,
        zero_heuristic: r.zero_heuristic,
    }
}

pub fn rerank_cosine(r: &Ranking, vectors: &VectorTable, cfg: &RerankConfig) -> Result<Ranking> {
    cfg.validate()?;
    let head = cfg.top_n.min(r.len());
    let q = vector(vectors, &r.query_id)?;
    let scores = r.entries[..head]
        .iter()
        .map(|e| Ok(cosine(q, vector(vectors, &e.doc_id)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(reorder_head(r, head, scores))
}

pub fn rerank_scores(r: &Ranking, table: &ScoreTable, cfg: &RerankConfig) -> Result<Ranking> {
    cfg.validate()?;
    let head = cfg.top_n.min(r.len());
    let scores = r.entries[..head]
        .iter()
        .map(|e| {
            table
                .get(&r.query_id, &e.doc_id)
                .ok_or_else(|| Error::MissingScore {
                    query: r.query_id.clone(),
                    doc: e.doc_id.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reorder_head(r, head, scores))
}
