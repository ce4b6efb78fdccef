//! Mean reciprocal rank and the BM25 parameter grid search.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::corpus::{Qrels, QuerySet};
use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::run::Run;
use crate::weighting::{rank, Bm25Params, Depth, Model, Ranking, WeightedQuery};

pub const DEFAULT_CUTOFFS: [usize; 3] = [5, 10, 20];

/// 1-based position of the earliest relevant document, if any.
pub fn first_relevant_rank(ranking: &Ranking, relevant: &BTreeSet<String>) -> Option<usize> {
    ranking
        .doc_ids()
        .position(|d| relevant.contains(d))
        .map(|p| p + 1)
}

fn first_ranks(run: &Run, qrels: &Qrels) -> Result<Vec<Option<usize>>> {
    if run.is_empty() {
        return Err(Error::EmptyRun);
    }
    run.iter()
        .map(|r| {
            let relevant = qrels
                .relevant(&r.query_id)
                .ok_or_else(|| Error::MissingJudgments(r.query_id.clone()))?;
            Ok(first_relevant_rank(r, relevant))
        })
        .collect()
}

fn reciprocal(rank: Option<usize>, k: usize) -> f64 {
    match rank {
        Some(r) if r <= k => 1.0 / r as f64,
        _ => 0.0,
    }
}

/// Mean over queries of `1/rank` of the first relevant document, 0 when it
/// is below `k` or absent from the ranking.
pub fn mrr_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
    }
    let ranks = first_ranks(run, qrels)?;
    Ok(ranks.iter().map(|&r| reciprocal(r, k)).sum::<f64>() / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `(cutoff, MRR@cutoff)` in ascending cutoff order.
    pub mrr: Vec<(usize, f64)>,
    /// Uncut reciprocal rank per query, in run order.
    pub per_query: Vec<(String, f64)>,
}

impl EvalReport {
    pub fn compute(run: &Run, qrels: &Qrels, cutoffs: &[usize]) -> Result<Self> {
        if cutoffs.contains(&0) {
            return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
        }
        let ranks = first_ranks(run, qrels)?;
        let cutoffs: BTreeSet<usize> = cutoffs.iter().copied().collect();
        let n = ranks.len() as f64;
        let mrr = cutoffs
            .into_iter()
            .map(|k| (k, ranks.iter().map(|&r| reciprocal(r, k)).sum::<f64>() / n))
            .collect();
        let per_query = run
            .iter()
            .zip(&ranks)
            .map(|(r, &rank)| (r.query_id.clone(), reciprocal(rank, usize::MAX)))
            .collect();
        Ok(EvalReport { mrr, per_query })
    }

    pub fn num_queries(&self) -> usize {
        self.per_query.len()
    }

    pub fn get(&self, cutoff: usize) -> Option<f64> {
        self.mrr.iter().find(|(k, _)| *k == cutoff).map(|(_, v)| *v)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.mrr {
            writeln!(out, "MRR@{k} {v:.12}").unwrap();
        }
        writeln!(out, "queries {}", self.num_queries()).unwrap();
        out
    }

    /// Values rounded to 12 significant digits.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        for (k, v) in &self.mrr {
            obj.insert(format!("MRR@{k}"), json!(significant12(*v)));
        }
        let per_query: Map<String, Value> = self
            .per_query
            .iter()
            .map(|(q, v)| (q.clone(), json!(significant12(*v))))
            .collect();
        obj.insert("per_query".into(), Value::Object(per_query));
        obj.insert("queries".into(), json!(self.num_queries()));
        Value::Object(obj)
    }
}

fn significant12(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub k1: f64,
    pub b: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    /// All cells sorted by `(k1, b)`.
    pub cells: Vec<GridCell>,
    pub best: GridCell,
    pub cutoff: usize,
}

impl GridSearchResult {
    pub fn metric(&self) -> String {
        format!("MRR@{}", self.cutoff)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            writeln!(out, "{}\t{}\t{:.12}", c.k1, c.b, c.objective).unwrap();
        }
        writeln!(
            out,
            "# best k1={} b={} mrr={:.12}",
            self.best.k1, self.best.b, self.best.objective
        )
        .unwrap();
        out
    }
}

/// Searches every `(k1, b)` combination of the two grids.
pub fn grid_search_bm25(
    index: &InvertedIndex,
    queries: &QuerySet,
    qrels: &Qrels,
    k1_grid: &[f64],
    b_grid: &[f64],
    cutoff: usize,
    zero_heuristic: bool,
) -> Result<GridSearchResult> {
    if k1_grid.is_empty() || b_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be non-empty".into()));
    }
    let cells: Vec<(f64, f64)> = k1_grid
        .iter()
        .flat_map(|&k1| b_grid.iter().map(move |&b| (k1, b)))
        .collect();
    grid_search_cells(index, queries, qrels, &cells, cutoff, zero_heuristic)
}

/// Evaluates an explicit list of cells. The result does not depend on the
/// order of `cells`: the table is sorted and the best cell is the highest
/// objective, ties going to smaller `k1`, then smaller `b`.
pub fn grid_search_cells(
    index: &InvertedIndex,
    queries: &QuerySet,
    qrels: &Qrels,
    cells: &[(f64, f64)],
    cutoff: usize,
    zero_heuristic: bool,
) -> Result<GridSearchResult> {
    if cells.is_empty() {
        return Err(Error::InvalidParameter("grids must be non-empty".into()));
    }
    if cutoff == 0 {
        return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
    }
    for &(k1, b) in cells {
        Bm25Params::new(k1, b)?;
    }
    let weighted: Vec<WeightedQuery> = queries.iter().map(WeightedQuery::from_record).collect();
    let mut table = cells
        .par_iter()
        .map(|&(k1, b)| {
            let model = Model::Bm25(Bm25Params { k1, b });
            let run = weighted
                .iter()
                .map(|q| rank(q, index, &model, Depth::Top(cutoff), zero_heuristic))
                .collect::<Result<Run>>()?;
            Ok(GridCell {
                k1,
                b,
                objective: mrr_at_k(&run, qrels, cutoff)?,
            })
        })
        .collect::<Result<Vec<GridCell>>>()?;
    table.sort_by(|x, y| x.k1.total_cmp(&y.k1).then(x.b.total_cmp(&y.b)));
    let best = table
        .iter()
        .copied()
        .reduce(|best, c| {
            if c.objective > best.objective {
                c
            } else {
                best
            }
        })
        .expect("non-empty table");
    Ok(GridSearchResult {
        cells: table,
        best,
        cutoff,
    })
}

/// Parses `start:stop:step` (inclusive of `stop` when reachable within
/// 1e-12) or a comma-separated list. Values are rounded to 10 decimals so
/// that e.g. `0.2:3.0:0.2` yields `1.8`, not `1.8000000000000003`.
pub fn parse_grid(expr: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::InvalidParameter(format!("grid `{expr}`: {m}"));
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| bad(format!("`{s}` is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(format!("`{s}` is not finite")))
        }
    };
    let parts: Vec<&str> = expr.split(':').collect();
    let values = match parts[..] {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 {
                return Err(bad("step must be positive".into()));
            }
            if stop < start {
                return Err(bad("stop is below start".into()));
            }
            let count = ((stop - start) / step + 1e-12).floor() as usize + 1;
            (0..count)
                .map(|i| round10(start + i as f64 * step))
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad("expected start:stop:step or a comma list".into())),
    };
    if values.is_empty() {
        return Err(bad("no values".into()));
    }
    Ok(values)
}

fn round10(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

/// k1 ∈ {0.2, 0.4, …, 3.0}.
pub fn default_k1_grid() -> Vec<f64> {
    parse_grid("0.2:3.0:0.2").expect("static grid")
}

/// b ∈ {0.00, 0.02, …, 1.00}.
pub fn default_b_grid() -> Vec<f64> {
    parse_grid("0:1:0.02").expect("static grid")
}
