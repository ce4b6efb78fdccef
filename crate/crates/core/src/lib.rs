//! Deterministic lexical retrieval for ranking clarification questions
//! against building instructions.
//!
//! The crate is organised bottom-up:
//!
//! * [`textprep`] normalises raw text into tokens,
//! * [`corpus`] loads questions, instructions, judgments and precomputed
//!   neural artifacts (embeddings, reranker scores, generated texts),
//! * [`index`] builds the inverted index and collection statistics,
//! * [`weighting`] scores documents with BM25, TF-IDF, PL2 and DPH and
//!   produces rankings with the zero-score length heuristic,
//! * [`expansion`] implements Bo1, KL and RM3 pseudo-relevance feedback,
//! * [`rerank`] reorders the head of a ranking from vectors or score tables,
//! * [`pipeline`] composes the stages into full runs,
//! * [`eval`] computes MRR at cutoffs and runs the BM25 grid search.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod index;
pub mod pipeline;
pub mod rerank;
pub mod run;
pub mod textprep;
pub mod weighting;

pub use corpus::{
    Document, DocumentSet, GeneratedTexts, Qrels, QueryRecord, QuerySet, ScoreTable, VectorTable,
};
pub use error::{Error, Result};
pub use eval::{EvalReport, GridSearchResult};
pub use expansion::FeedbackConfig;
pub use index::{CollectionStats, InvertedIndex, Posting, TermStats};
pub use pipeline::{
    ExpansionMethod, ExpansionSpec, FirstStage, PipelineSpec, RerankSource, RerankSpec,
};
pub use rerank::RerankConfig;
pub use run::Run;
pub use textprep::{preprocess, TokenList};
pub use weighting::{Bm25Params, Depth, Model, Pl2Params, Provenance, Ranking, WeightedQuery};
