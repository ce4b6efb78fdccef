//! Composition of ranking, expansion and reranking into full runs.
//!
//! Per query: first-stage ranking of the whole pool, then optionally query
//! expansion followed by a second-pass ranking, then optionally a rerank of
//! the head, then truncation to the requested depth.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Deserialize;

use crate::corpus::{GeneratedTexts, QueryRecord, QuerySet, ScoreTable, VectorTable};
use crate::error::{Error, Result};
use crate::expansion::{expand_bo1, expand_external, expand_kl, expand_rm3, FeedbackConfig};
use crate::index::InvertedIndex;
use crate::rerank::{rerank_cosine, rerank_scores, RerankConfig};
use crate::run::Run;
use crate::weighting::{rank, Bm25Params, Depth, Model, Pl2Params, Ranking, WeightedQuery};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstStage {
    pub model: Model,
    pub zero_heuristic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionMethod {
    Bo1,
    Kl,
    Rm3,
    /// Externally generated texts appended to the query.
    #[serde(alias = "file")]
    External,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionSpec {
    pub method: ExpansionMethod,
    pub feedback: FeedbackConfig,
    /// Model for the pass over the expanded query; the first stage when `None`.
    pub second_stage: Option<FirstStage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RerankSource {
    Vectors,
    Scores,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RerankSpec {
    pub source: RerankSource,
    pub config: RerankConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSpec {
    pub first_stage: FirstStage,
    pub expansion: Option<ExpansionSpec>,
    pub rerank: Option<RerankSpec>,
    pub depth: Depth,
}

impl PipelineSpec {
    pub fn single(model: Model, zero_heuristic: bool) -> Self {
        PipelineSpec {
            first_stage: FirstStage {
                model,
                zero_heuristic,
            },
            expansion: None,
            rerank: None,
            depth: Depth::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.first_stage.model.validate()?;
        self.depth.validate()?;
        if let Some(e) = &self.expansion {
            e.feedback.validate()?;
            if let Some(s) = &e.second_stage {
                s.model.validate()?;
            }
        }
        if let Some(r) = &self.rerank {
            r.config.validate()?;
        }
        Ok(())
    }
}

/// Externally produced tables a pipeline may consult.
#[derive(Debug, Clone, Copy, Default)]
pub struct AuxTables<'a> {
    pub vectors: Option<&'a VectorTable>,
    pub scores: Option<&'a ScoreTable>,
    pub generated: Option<&'a GeneratedTexts>,
}

fn run_query(
    spec: &PipelineSpec,
    q: &QueryRecord,
    index: &InvertedIndex,
    aux: &AuxTables<'_>,
) -> Result<Ranking> {
    let plain = WeightedQuery::from_record(q);
    let first = &spec.first_stage;
    let mut ranking = match &spec.expansion {
        None => rank(
            &plain,
            index,
            &first.model,
            Depth::All,
            first.zero_heuristic,
        )?,
        Some(exp) => {
            let expanded = match exp.method {
                ExpansionMethod::External => {
                    let texts = aux.generated.and_then(|g| g.get(&q.query_id));
                    expand_external(q, texts.map_or(&[][..], Vec::as_slice))
                }
                method => {
                    let fp = rank(
                        &plain,
                        index,
                        &first.model,
                        Depth::All,
                        first.zero_heuristic,
                    )?;
                    match method {
                        ExpansionMethod::Bo1 => expand_bo1(&plain, &fp, index, &exp.feedback)?,
                        ExpansionMethod::Kl => expand_kl(&plain, &fp, index, &exp.feedback)?,
                        _ => expand_rm3(&plain, &fp, index, &exp.feedback)?,
                    }
                }
            };
            let second = exp.second_stage.as_ref().unwrap_or(first);
            rank(
                &expanded,
                index,
                &second.model,
                Depth::All,
                second.zero_heuristic,
            )?
        }
    };
    if let Some(rr) = &spec.rerank {
        ranking = match rr.source {
            RerankSource::Vectors => {
                let table = aux.vectors.ok_or_else(|| {
                    Error::InvalidParameter("vector rerank needs a vector table".into())
                })?;
                rerank_cosine(&ranking, table, &rr.config)?
            }
            RerankSource::Scores => {
                let table = aux.scores.ok_or_else(|| {
                    Error::InvalidParameter("score rerank needs a score table".into())
                })?;
                rerank_scores(&ranking, table, &rr.config)?
            }
        };
    }
    ranking.truncate(spec.depth);
    Ok(ranking)
}

/// Runs the pipeline for every query; the run keeps input query order.
pub fn run_pipeline(
    spec: &PipelineSpec,
    queries: &QuerySet,
    index: &InvertedIndex,
    aux: &AuxTables<'_>,
) -> Result<Run> {
    spec.validate()?;
    queries
        .queries()
        .par_iter()
        .map(|q| run_query(spec, q, index, aux).map_err(|e| e.in_query(&q.query_id)))
        .collect::<Result<Vec<_>>>()
        .map(Run::new)
}

/// JSON pipeline description:
///
/// ```json
/// {
///   "first_stage": {"model": "bm25", "params": {"k1": 1.8, "b": 0.98}, "zero_heuristic": true},
///   "expansion": {"method": "bo1", "fb_docs": 3, "fb_terms": 10,
///                 "second_stage": {"model": "tfidf"}},
///   "rerank": {"source": "vectors", "top_n": 20, "path": "vectors.tsv"},
///   "depth": 100
/// }
/// ```
///
/// `expansion`, `rerank` and `depth` are optional; an external expansion
/// names its JSONL file in `expansion.path`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub first_stage: StageConfig,
    #[serde(default)]
    pub expansion: Option<ExpansionConfig>,
    #[serde(default)]
    pub rerank: Option<RerankFileConfig>,
    #[serde(default)]
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub model: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub zero_heuristic: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    pub method: ExpansionMethod,
    pub fb_docs: Option<usize>,
    pub fb_terms: Option<usize>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub second_stage: Option<StageConfig>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RerankFileConfig {
    pub source: RerankSource,
    pub top_n: Option<usize>,
    pub path: PathBuf,
}

impl StageConfig {
    pub fn to_stage(&self) -> Result<FirstStage> {
        let model = build_model(&self.model, self.params.k1, self.params.b, self.params.c)?;
        Ok(FirstStage {
            model,
            zero_heuristic: self.zero_heuristic,
        })
    }
}

/// Builds a model by name, rejecting parameters the model does not take.
pub fn build_model(name: &str, k1: Option<f64>, b: Option<f64>, c: Option<f64>) -> Result<Model> {
    let model = Model::from_name(name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown model `{name}`")))?;
    let model = match model {
        Model::Bm25(d) => {
            if c.is_some() {
                return Err(Error::InvalidParameter("c applies only to pl2".into()));
            }
            Model::Bm25(Bm25Params::new(k1.unwrap_or(d.k1), b.unwrap_or(d.b))?)
        }
        other => {
            if k1.is_some() || b.is_some() {
                return Err(Error::InvalidParameter(
                    "k1 and b apply only to bm25".into(),
                ));
            }
            match other {
                Model::Pl2(d) => Model::Pl2(Pl2Params::new(c.unwrap_or(d.c))?),
                m if c.is_some() => {
                    return Err(Error::InvalidParameter(format!(
                        "c does not apply to {}",
                        m.name()
                    )))
                }
                m => m,
            }
        }
    };
    Ok(model)
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("pipeline config: {e}")))
    }

    pub fn to_spec(&self) -> Result<PipelineSpec> {
        let expansion = match &self.expansion {
            None => None,
            Some(e) => {
                let d = FeedbackConfig::default();
                let feedback = FeedbackConfig {
                    fb_docs: e.fb_docs.unwrap_or(d.fb_docs),
                    fb_terms: e.fb_terms.unwrap_or(d.fb_terms),
                    alpha: e.alpha.unwrap_or(d.alpha),
                    mu: e.mu.unwrap_or(d.mu),
                };
                if (e.method == ExpansionMethod::External) != e.path.is_some() {
                    return Err(Error::InvalidParameter(
                        "expansion.path is required for external expansion and only allowed there"
                            .into(),
                    ));
                }
                Some(ExpansionSpec {
                    method: e.method,
                    feedback,
                    second_stage: e
                        .second_stage
                        .as_ref()
                        .map(StageConfig::to_stage)
                        .transpose()?,
                })
            }
        };
        let rerank = self.rerank.as_ref().map(|r| RerankSpec {
            source: r.source,
            config: RerankConfig {
                top_n: r.top_n.unwrap_or(RerankConfig::default().top_n),
            },
        });
        let spec = PipelineSpec {
            first_stage: self.first_stage.to_stage()?,
            expansion,
            rerank,
            depth: self.depth.map_or(Depth::All, Depth::Top),
        };
        spec.validate()?;
        Ok(spec)
    }
}
