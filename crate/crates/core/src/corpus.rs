//! Loaders for the question pool, instructions, relevance judgments and
//! externally produced neural artifacts.
//!
//! File layouts:
//!
//! * documents / queries: JSONL, one `{"id": ..., "text": ...}` per line
//! * generated expansion texts: JSONL, `{"id": ..., "texts": [...]}`
//! * qrels: `query_id 0 doc_id relevance`
//! * vectors: `id<TAB>v1 v2 ... vd`
//! * scores: `query_id<TAB>doc_id<TAB>score`

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{preprocess, TokenList};

/// One clarification question.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub raw_text: String,
    pub tokens: TokenList,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        Document {
            doc_id: doc_id.into(),
            tokens: preprocess(&raw_text),
            raw_text,
        }
    }

    /// Token count.
    pub fn length(&self) -> usize {
        self.tokens.len()
    }
}

/// One instruction used as a query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub raw_text: String,
    pub tokens: TokenList,
}

impl QueryRecord {
    pub fn new(query_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        QueryRecord {
            query_id: query_id.into(),
            tokens: preprocess(&raw_text),
            raw_text,
        }
    }
}

/// Documents in input order with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentSet {
    docs: Vec<Document>,
}

impl DocumentSet {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        check_unique(docs.iter().map(|d| d.doc_id.as_str()))?;
        Ok(DocumentSet { docs })
    }

    /// Convenience constructor from `(id, text)` pairs.
    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(id, text)| Document::new(id, text))
                .collect(),
        )
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }
}

/// Queries in input order with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuerySet {
    queries: Vec<QueryRecord>,
}

impl QuerySet {
    pub fn new(queries: Vec<QueryRecord>) -> Result<Self> {
        check_unique(queries.iter().map(|q| q.query_id.as_str()))?;
        Ok(QuerySet { queries })
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(id, text)| QueryRecord::new(id, text))
                .collect(),
        )
    }

    pub fn queries(&self) -> &[QueryRecord] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QueryRecord> {
        self.queries.iter()
    }
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.to_owned()));
        }
    }
    Ok(())
}

/// Relevance judgments: query id to the set of relevant document ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels(BTreeMap<String, BTreeSet<String>>);

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>) {
        self.0
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into());
    }

    pub fn relevant(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.0.get(query_id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.0.iter()
    }
}

impl<Q: Into<String>, D: Into<String>> FromIterator<(Q, D)> for Qrels {
    fn from_iter<I: IntoIterator<Item = (Q, D)>>(iter: I) -> Self {
        let mut qrels = Qrels::new();
        for (q, d) in iter {
            qrels.insert(q, d);
        }
        qrels
    }
}

/// Dense vectors of one declared dimension, keyed by query or document id.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "vector dimension must be at least 1".into(),
            ));
        }
        Ok(VectorTable {
            dim,
            vectors: HashMap::new(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                id,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// External reranker scores keyed by `(query_id, doc_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable(HashMap<(String, String), f64>);

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        query_id: impl Into<String>,
        doc_id: impl Into<String>,
        score: f64,
    ) -> Result<()> {
        let key = (query_id.into(), doc_id.into());
        if self.0.contains_key(&key) {
            return Err(Error::DuplicatePair {
                query: key.0,
                doc: key.1,
            });
        }
        self.0.insert(key, score);
        Ok(())
    }

    pub fn get(&self, query_id: &str, doc_id: &str) -> Option<f64> {
        // HashMap<(String, String), _> cannot be queried with borrowed parts.
        self.0
            .get(&(query_id.to_owned(), doc_id.to_owned()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Externally generated expansion texts per query.
pub type GeneratedTexts = BTreeMap<String, Vec<String>>;

#[derive(Deserialize, Serialize)]
struct TextLine {
    id: String,
    text: String,
}

#[derive(Deserialize)]
struct GeneratedLine {
    id: String,
    texts: Vec<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let content = read(path)?;
    lines(&content)
        .map(|(no, line)| {
            serde_json::from_str(line).map_err(|e| Error::parse(path, no, e.to_string()))
        })
        .collect()
}

pub fn load_documents(path: impl AsRef<Path>) -> Result<DocumentSet> {
    let rows: Vec<TextLine> = parse_jsonl(path.as_ref())?;
    DocumentSet::new(
        rows.into_iter()
            .map(|r| Document::new(r.id, r.text))
            .collect(),
    )
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<QuerySet> {
    let rows: Vec<TextLine> = parse_jsonl(path.as_ref())?;
    QuerySet::new(
        rows.into_iter()
            .map(|r| QueryRecord::new(r.id, r.text))
            .collect(),
    )
}

pub fn load_generated(path: impl AsRef<Path>) -> Result<GeneratedTexts> {
    let rows: Vec<GeneratedLine> = parse_jsonl(path.as_ref())?;
    let mut out = GeneratedTexts::new();
    for row in rows {
        if out.contains_key(&row.id) {
            return Err(Error::DuplicateId(row.id));
        }
        out.insert(row.id, row.texts);
    }
    Ok(out)
}

/// Writes documents as JSONL in set order.
pub fn write_documents(docs: &DocumentSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for d in docs.iter() {
        let line = TextLine {
            id: d.doc_id.clone(),
            text: d.raw_text.clone(),
        };
        let json = serde_json::to_string(&line).expect("string fields always serialize");
        writeln!(out, "{json}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let content = read(path)?;
    let mut qrels = Qrels::new();
    for (no, line) in lines(&content) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [query, _, doc, rel] = fields[..] else {
            return Err(Error::parse(
                path,
                no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        };
        let rel: i64 = rel
            .parse()
            .map_err(|_| Error::parse(path, no, format!("relevance `{rel}` is not an integer")))?;
        if rel > 0 {
            qrels.insert(query, doc);
        }
    }
    Ok(qrels)
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<VectorTable> {
    let path = path.as_ref();
    let content = read(path)?;
    let mut table: Option<VectorTable> = None;
    for (no, line) in lines(&content) {
        let (id, values) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, no, "expected `id<TAB>values`"))?;
        let vector = values
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(path, no, format!("`{v}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vector.is_empty() {
            return Err(Error::parse(
                path,
                no,
                format!("vector for `{id}` is empty"),
            ));
        }
        let table = match &mut table {
            Some(t) => t,
            None => table.insert(VectorTable::new(vector.len())?),
        };
        table.insert(id, vector)?;
    }
    match table {
        Some(t) => Ok(t),
        None => Err(Error::parse(path, 0, "no vectors")),
    }
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    let content = read(path)?;
    let mut table = ScoreTable::new();
    for (no, line) in lines(&content) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [query, doc, score] = fields[..] else {
            return Err(Error::parse(
                path,
                no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, no, format!("score `{score}` is not a number")))?;
        table.insert(query, doc, score)?;
    }
    Ok(table)
}
