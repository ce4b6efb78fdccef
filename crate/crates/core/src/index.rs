//! Immutable inverted index with the collection statistics used by the
//! weighting and expansion models.
//!
//! Documents are numbered in ascending `doc_id` order, so ordering postings
//! by document number is the same as ordering them by id. A forward view
//! (document to `(term, tf)` pairs) is derived from the postings and kept
//! alongside them for pseudo-relevance feedback.
//!
//! # File format
//!
//! ```text
//! magic    b"CQRIDX\0\0"
//! version  u32 LE
//! length   u64 LE  (payload bytes)
//! payload  docs: u32 count, then (id, length u32) each
//!          terms: u32 count, then (term, postings u32 count, (doc u32, tf u32)*) each
//! digest   SHA-256 of payload
//! ```
//!
//! Strings are a u32 LE byte length followed by UTF-8 bytes. Terms are
//! written in ascending order, so the same document set always produces the
//! same bytes.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::corpus::DocumentSet;
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 8] = b"CQRIDX\0\0";
pub const INDEX_VERSION: u32 = 1;

/// Dense document number; order matches `doc_id` order.
pub type DocNo = u32;
/// Dense term number; order matches lexicographic term order.
pub type TermNo = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocNo,
    pub tf: u32,
}

/// Per-term statistics: document frequency and collection frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermStats {
    pub df: u32,
    pub cf: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionStats {
    pub num_docs: usize,
    pub total_tokens: u64,
    /// Zero for an empty collection.
    pub avgdl: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct DocEntry {
    id: String,
    length: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    docs: Vec<DocEntry>,
    doc_lookup: HashMap<String, DocNo>,
    terms: Vec<String>,
    term_lookup: HashMap<String, TermNo>,
    postings: Vec<Vec<Posting>>,
    term_stats: Vec<TermStats>,
    forward: Vec<Vec<(TermNo, u32)>>,
    stats: CollectionStats,
}

impl InvertedIndex {
    pub fn build(docs: &DocumentSet) -> Self {
        let mut order: Vec<&crate::corpus::Document> = docs.iter().collect();
        order.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

        let entries = order
            .iter()
            .map(|d| DocEntry {
                id: d.doc_id.clone(),
                length: d.length() as u32,
            })
            .collect();

        let mut by_term: std::collections::BTreeMap<&str, Vec<Posting>> = Default::default();
        for (doc_no, doc) in order.iter().enumerate() {
            let mut counts: std::collections::BTreeMap<&str, u32> = Default::default();
            for tok in doc.tokens.iter() {
                *counts.entry(tok).or_default() += 1;
            }
            for (term, tf) in counts {
                by_term.entry(term).or_default().push(Posting {
                    doc: doc_no as DocNo,
                    tf,
                });
            }
        }
        let (terms, postings) = by_term.into_iter().map(|(t, p)| (t.to_owned(), p)).unzip();
        Self::assemble(entries, terms, postings)
    }

    /// Derives lookups, statistics and the forward view from the primary
    /// data. `terms` must be sorted and postings sorted by document.
    fn assemble(docs: Vec<DocEntry>, terms: Vec<String>, postings: Vec<Vec<Posting>>) -> Self {
        let doc_lookup = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i as DocNo))
            .collect();
        let term_lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermNo))
            .collect();
        let term_stats = postings
            .iter()
            .map(|list: &Vec<Posting>| TermStats {
                df: list.len() as u32,
                cf: list.iter().map(|p| u64::from(p.tf)).sum(),
            })
            .collect();
        let mut forward = vec![Vec::new(); docs.len()];
        for (term, list) in postings.iter().enumerate() {
            for p in list {
                forward[p.doc as usize].push((term as TermNo, p.tf));
            }
        }
        let total_tokens: u64 = docs.iter().map(|d| u64::from(d.length)).sum();
        let num_docs = docs.len();
        let avgdl = if num_docs == 0 {
            0.0
        } else {
            total_tokens as f64 / num_docs as f64
        };
        InvertedIndex {
            docs,
            doc_lookup,
            terms,
            term_lookup,
            postings,
            term_stats,
            forward,
            stats: CollectionStats {
                num_docs,
                total_tokens,
                avgdl,
            },
        }
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_no(&self, doc_id: &str) -> Option<DocNo> {
        self.doc_lookup.get(doc_id).copied()
    }

    pub fn doc_id(&self, doc: DocNo) -> &str {
        &self.docs[doc as usize].id
    }

    pub fn doc_len(&self, doc: DocNo) -> u32 {
        self.docs[doc as usize].length
    }

    /// All registered document ids in ascending order.
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.id.as_str())
    }

    pub fn term_no(&self, term: &str) -> Option<TermNo> {
        self.term_lookup.get(term).copied()
    }

    pub fn term(&self, term: TermNo) -> &str {
        &self.terms[term as usize]
    }

    /// Terms in ascending order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn term_stats(&self, term: TermNo) -> TermStats {
        self.term_stats[term as usize]
    }

    /// Statistics for a term string; `None` when it never occurs.
    pub fn lookup_stats(&self, term: &str) -> Option<TermStats> {
        self.term_no(term).map(|t| self.term_stats(t))
    }

    pub fn postings(&self, term: TermNo) -> &[Posting] {
        &self.postings[term as usize]
    }

    /// Postings for a term string, with document ids resolved.
    pub fn postings_for(&self, term: &str) -> Vec<(&str, u32)> {
        match self.term_no(term) {
            Some(t) => self
                .postings(t)
                .iter()
                .map(|p| (self.doc_id(p.doc), p.tf))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Term frequency of `term` in `doc`, zero when absent.
    pub fn tf(&self, term: TermNo, doc: DocNo) -> u32 {
        let list = self.postings(term);
        match list.binary_search_by_key(&doc, |p| p.doc) {
            Ok(i) => list[i].tf,
            Err(_) => 0,
        }
    }

    /// `(term, tf)` pairs of one document, terms ascending.
    pub fn doc_terms(&self, doc: DocNo) -> &[(TermNo, u32)] {
        &self.forward[doc as usize]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        put_u32(&mut payload, self.docs.len() as u32);
        for d in &self.docs {
            put_str(&mut payload, &d.id);
            put_u32(&mut payload, d.length);
        }
        put_u32(&mut payload, self.terms.len() as u32);
        for (term, list) in self.terms.iter().zip(&self.postings) {
            put_str(&mut payload, term);
            put_u32(&mut payload, list.len() as u32);
            for p in list {
                put_u32(&mut payload, p.doc);
                put_u32(&mut payload, p.tf);
            }
        }

        let mut out = Vec::with_capacity(payload.len() + 52);
        out.extend_from_slice(INDEX_MAGIC);
        put_u32(&mut out, INDEX_VERSION);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&Sha256::digest(&payload));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let integrity = |m: &str| Error::IndexIntegrity(m.to_owned());
        if bytes.len() < INDEX_MAGIC.len() + 12 {
            return Err(integrity("file too short for header"));
        }
        if &bytes[..8] != INDEX_MAGIC {
            return Err(integrity("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != INDEX_VERSION {
            return Err(Error::IndexVersion {
                expected: INDEX_VERSION,
                found: version,
            });
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = &bytes[20..];
        if body.len() != len.saturating_add(32) {
            return Err(integrity("payload length does not match header"));
        }
        let (payload, digest) = body.split_at(len);
        if Sha256::digest(payload).as_slice() != digest {
            return Err(integrity("checksum mismatch"));
        }

        let mut r = Reader {
            buf: payload,
            pos: 0,
        };
        let n_docs = r.u32()? as usize;
        let mut docs = Vec::with_capacity(n_docs.min(payload.len()));
        for _ in 0..n_docs {
            let id = r.string()?;
            let length = r.u32()?;
            if docs.last().is_some_and(|prev: &DocEntry| prev.id >= id) {
                return Err(integrity("document ids not strictly ascending"));
            }
            docs.push(DocEntry { id, length });
        }
        let n_terms = r.u32()? as usize;
        let mut terms: Vec<String> = Vec::with_capacity(n_terms.min(payload.len()));
        let mut postings = Vec::with_capacity(n_terms.min(payload.len()));
        for _ in 0..n_terms {
            let term = r.string()?;
            if term.is_empty() || terms.last().is_some_and(|prev| *prev >= term) {
                return Err(integrity("terms not strictly ascending"));
            }
            let count = r.u32()? as usize;
            if count == 0 {
                return Err(integrity("empty posting list"));
            }
            let mut list = Vec::with_capacity(count.min(payload.len()));
            for _ in 0..count {
                let doc = r.u32()?;
                let tf = r.u32()?;
                if doc as usize >= docs.len() || tf == 0 {
                    return Err(integrity("posting out of range"));
                }
                if list.last().is_some_and(|prev: &Posting| prev.doc >= doc) {
                    return Err(integrity("postings not strictly ascending"));
                }
                list.push(Posting { doc, tf });
            }
            terms.push(term);
            postings.push(list);
        }
        if r.pos != payload.len() {
            return Err(integrity("trailing bytes after payload"));
        }
        let index = Self::assemble(docs, terms, postings);
        for (d, entry) in index.docs.iter().enumerate() {
            let sum: u64 = index.forward[d].iter().map(|&(_, tf)| u64::from(tf)).sum();
            if sum != u64::from(entry.length) {
                return Err(integrity("document length disagrees with postings"));
            }
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::IndexIntegrity("unexpected end of payload".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::IndexIntegrity("invalid UTF-8".into()))
    }
}
