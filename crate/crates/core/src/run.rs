//! Runs: one ranking per query, in the standard six-column run format
//! `query_id Q0 doc_id rank score run_tag`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::weighting::{Ranking, ScoredDoc};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub rankings: Vec<Ranking>,
}

impl Run {
    pub fn new(rankings: Vec<Ranking>) -> Self {
        Run { rankings }
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Ranking> {
        self.rankings.iter()
    }

    /// Ranks start at 1; scores are printed with six decimals.
    pub fn to_trec(&self, tag: &str) -> String {
        let mut out = String::new();
        for r in &self.rankings {
            for (i, e) in r.entries.iter().enumerate() {
                writeln!(
                    out,
                    "{} Q0 {} {} {:.6} {}",
                    r.query_id,
                    e.doc_id,
                    i + 1,
                    e.score,
                    tag
                )
                .unwrap();
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>, tag: &str) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_trec(tag)).map_err(|e| Error::io(path, e))
    }

    /// Parses a run file. Queries keep their first-appearance order and
    /// entries within a query are ordered by the rank column.
    pub fn parse(content: &str, path: &Path) -> Result<Run> {
        let mut order: Vec<String> = Vec::new();
        let mut rows: HashMap<String, Vec<(u64, ScoredDoc)>> = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let no = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [query, _, doc, rank, score, _] = fields[..] else {
                return Err(Error::parse(
                    path,
                    no,
                    format!("expected 6 fields, found {}", fields.len()),
                ));
            };
            let rank: u64 = rank
                .parse()
                .map_err(|_| Error::parse(path, no, format!("rank `{rank}` is not an integer")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| Error::parse(path, no, format!("score `{score}` is not a number")))?;
            if !rows.contains_key(query) {
                order.push(query.to_owned());
            }
            rows.entry(query.to_owned())
                .or_default()
                .push((rank, ScoredDoc::new(doc, score)));
        }
        let rankings = order
            .into_iter()
            .map(|q| {
                let mut entries = rows.remove(&q).unwrap_or_default();
                entries.sort_by_key(|(rank, _)| *rank);
                Ranking {
                    query_id: q,
                    entries: entries.into_iter().map(|(_, e)| e).collect(),
                    zero_heuristic: false,
                }
            })
            .collect();
        Ok(Run { rankings })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Run> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }
}

impl FromIterator<Ranking> for Run {
    fn from_iter<I: IntoIterator<Item = Ranking>>(iter: I) -> Self {
        Run::new(iter.into_iter().collect())
    }
}
