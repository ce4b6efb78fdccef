//! `cqrank`: batch experiments over a clarification-question pool.
//!
//! ```text
//! cqrank index --docs questions.jsonl --out pool.idx
//! cqrank rank  --index pool.idx --queries instructions.jsonl --model bm25 --k1 1.8 --b 0.98 \
//!              --zero-heuristic --out run.txt
//! cqrank eval  --run run.txt --qrels qrels.txt --cutoffs 5,10,20
//! cqrank grid  --index pool.idx --queries instructions.jsonl --qrels qrels.txt --objective 10 \
//!              --zero-heuristic --out grid.tsv
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use cqrank_core::corpus::{
    load_documents, load_generated, load_qrels, load_queries, load_scores, load_vectors,
};
use cqrank_core::eval::{
    default_b_grid, default_k1_grid, grid_search_bm25, parse_grid, EvalReport,
};
use cqrank_core::pipeline::{
    build_model, run_pipeline, AuxTables, ExpansionMethod, ExpansionSpec, FirstStage,
    PipelineConfig, PipelineSpec, RerankSource, RerankSpec,
};
use cqrank_core::{Depth, FeedbackConfig, InvertedIndex, Model, RerankConfig, Run};

#[derive(Parser)]
#[command(
    name = "cqrank",
    version,
    about = "Rank clarification questions against instructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index file from a JSONL question pool.
    Index(IndexArgs),
    /// Rank every query and write a run file.
    Rank(Box<RankArgs>),
    /// Compute MRR at cutoffs for a run.
    Eval(EvalArgs),
    /// Grid-search BM25 k1 and b.
    Grid(GridArgs),
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpandArg {
    Bo1,
    Kl,
    Rm3,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum RerankArg {
    Vectors,
    Scores,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// JSON pipeline description; replaces the model, expansion and rerank flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bm25, tfidf, pl2 or dph.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Order zero-score questions by token count, shortest first.
    #[arg(long)]
    zero_heuristic: bool,
    #[arg(long, value_enum)]
    expand: Option<ExpandArg>,
    /// JSONL of generated texts, for `--expand file`.
    #[arg(long)]
    expand_path: Option<PathBuf>,
    #[arg(long)]
    fb_docs: Option<usize>,
    #[arg(long)]
    fb_terms: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Model for the pass over the expanded query (defaults to --model).
    #[arg(long)]
    second_model: Option<String>,
    #[arg(long, value_enum)]
    rerank: Option<RerankArg>,
    #[arg(long)]
    rerank_path: Option<PathBuf>,
    #[arg(long)]
    top_n: Option<usize>,
    /// Entries per query; a number or `all`.
    #[arg(long, default_value = "all")]
    depth: String,
    #[arg(long, default_value = "cqrank")]
    run_tag: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    cutoffs: Vec<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// `start:stop:step` or a comma list; default 0.2:3.0:0.2.
    #[arg(long)]
    k1_grid: Option<String>,
    /// `start:stop:step` or a comma list; default 0:1:0.02.
    #[arg(long)]
    b_grid: Option<String>,
    /// MRR cutoff to maximise.
    #[arg(long, default_value_t = 10)]
    objective: usize,
    #[arg(long)]
    zero_heuristic: bool,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Rank(a) => cmd_rank(*a),
        Command::Eval(a) => cmd_eval(a),
        Command::Grid(a) => cmd_grid(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_index(a: IndexArgs) -> Result<(), Failure> {
    let docs = load_documents(&a.docs).context("loading documents")?;
    let index = InvertedIndex::build(&docs);
    index.save(&a.out).context("writing index")?;
    let s = index.stats();
    println!(
        "N={} avgdl={:.3} terms={}",
        s.num_docs,
        s.avgdl,
        index.vocabulary_size()
    );
    Ok(())
}

/// The parsed pipeline plus the files its stages need.
struct RankPlan {
    spec: PipelineSpec,
    generated: Option<PathBuf>,
    rerank_table: Option<PathBuf>,
}

fn parse_depth(text: &str) -> Result<Depth, Failure> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(Depth::All);
    }
    match text.parse::<usize>() {
        Ok(0) | Err(_) => Err(usage(format!(
            "--depth must be a positive integer or `all`, got `{text}`"
        ))),
        Ok(n) => Ok(Depth::Top(n)),
    }
}

fn plan_from_flags(a: &RankArgs) -> Result<RankPlan, Failure> {
    let model_name = a.model.as_deref().unwrap_or("bm25");
    let second_name = a.second_model.as_deref();
    let uses = |name: &str| {
        model_name.eq_ignore_ascii_case(name)
            || second_name.is_some_and(|s| s.eq_ignore_ascii_case(name))
    };
    if (a.k1.is_some() || a.b.is_some()) && !uses("bm25") {
        return Err(usage("--k1 and --b apply only to the bm25 model"));
    }
    if a.c.is_some() && !uses("pl2") {
        return Err(usage("--c applies only to the pl2 model"));
    }
    let stage = |name: &str| -> Result<FirstStage, Failure> {
        let is = |m: &str| name.eq_ignore_ascii_case(m);
        let (k1, b) = if is("bm25") {
            (a.k1, a.b)
        } else {
            (None, None)
        };
        let c = if is("pl2") { a.c } else { None };
        let model: Model = build_model(name, k1, b, c).map_err(|e| usage(e.to_string()))?;
        Ok(FirstStage {
            model,
            zero_heuristic: a.zero_heuristic,
        })
    };

    let prf = matches!(
        a.expand,
        Some(ExpandArg::Bo1 | ExpandArg::Kl | ExpandArg::Rm3)
    );
    if (a.fb_docs.is_some() || a.fb_terms.is_some()) && !prf {
        return Err(usage("--fb-docs and --fb-terms need --expand bo1|kl|rm3"));
    }
    if (a.alpha.is_some() || a.mu.is_some()) && !matches!(a.expand, Some(ExpandArg::Rm3)) {
        return Err(usage("--alpha and --mu need --expand rm3"));
    }
    if a.expand_path.is_some() != matches!(a.expand, Some(ExpandArg::File)) {
        return Err(usage(
            "--expand-path is required with --expand file and allowed only there",
        ));
    }
    if a.second_model.is_some() && a.expand.is_none() {
        return Err(usage("--second-model needs --expand"));
    }
    if a.rerank.is_some() != a.rerank_path.is_some() {
        return Err(usage("--rerank and --rerank-path must be given together"));
    }
    if a.top_n.is_some() && a.rerank.is_none() {
        return Err(usage("--top-n needs --rerank"));
    }

    let first_stage = stage(model_name)?;
    let expansion = match a.expand {
        None => None,
        Some(kind) => {
            let d = FeedbackConfig::default();
            Some(ExpansionSpec {
                method: match kind {
                    ExpandArg::Bo1 => ExpansionMethod::Bo1,
                    ExpandArg::Kl => ExpansionMethod::Kl,
                    ExpandArg::Rm3 => ExpansionMethod::Rm3,
                    ExpandArg::File => ExpansionMethod::External,
                },
                feedback: FeedbackConfig {
                    fb_docs: a.fb_docs.unwrap_or(d.fb_docs),
                    fb_terms: a.fb_terms.unwrap_or(d.fb_terms),
                    alpha: a.alpha.unwrap_or(d.alpha),
                    mu: a.mu.unwrap_or(d.mu),
                },
                second_stage: second_name.map(stage).transpose()?,
            })
        }
    };
    let rerank = a.rerank.map(|r| RerankSpec {
        source: match r {
            RerankArg::Vectors => RerankSource::Vectors,
            RerankArg::Scores => RerankSource::Scores,
        },
        config: RerankConfig {
            top_n: a.top_n.unwrap_or(RerankConfig::default().top_n),
        },
    });
    Ok(RankPlan {
        spec: PipelineSpec {
            first_stage,
            expansion,
            rerank,
            depth: parse_depth(&a.depth)?,
        },
        generated: a.expand_path.clone(),
        rerank_table: a.rerank_path.clone(),
    })
}

fn plan_from_config(a: &RankArgs, path: &Path) -> Result<RankPlan, Failure> {
    let stage_flags = a.model.is_some()
        || a.k1.is_some()
        || a.b.is_some()
        || a.c.is_some()
        || a.zero_heuristic
        || a.expand.is_some()
        || a.expand_path.is_some()
        || a.fb_docs.is_some()
        || a.fb_terms.is_some()
        || a.alpha.is_some()
        || a.mu.is_some()
        || a.second_model.is_some()
        || a.rerank.is_some()
        || a.rerank_path.is_some()
        || a.top_n.is_some();
    if stage_flags {
        return Err(usage(
            "--config cannot be combined with model, expansion or rerank flags",
        ));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = PipelineConfig::from_json(&text).map_err(|e| usage(e.to_string()))?;
    let mut spec = cfg.to_spec().map_err(|e| usage(e.to_string()))?;
    if cfg.depth.is_none() {
        spec.depth = parse_depth(&a.depth)?;
    }
    // Relative paths in the config resolve against its directory.
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(RankPlan {
        spec,
        generated: cfg.expansion.and_then(|e| e.path).map(|p| base.join(p)),
        rerank_table: cfg.rerank.map(|r| base.join(r.path)),
    })
}

fn cmd_rank(a: RankArgs) -> Result<(), Failure> {
    let plan = match &a.config {
        Some(path) => plan_from_config(&a, path)?,
        None => plan_from_flags(&a)?,
    };
    plan.spec.validate().map_err(|e| usage(e.to_string()))?;

    let index = InvertedIndex::load(&a.index).context("loading index")?;
    let queries = load_queries(&a.queries).context("loading queries")?;
    let generated = plan
        .generated
        .as_ref()
        .map(load_generated)
        .transpose()
        .context("loading generated texts")?;
    let (mut vectors, mut scores) = (None, None);
    if let (Some(rr), Some(path)) = (&plan.spec.rerank, &plan.rerank_table) {
        match rr.source {
            RerankSource::Vectors => vectors = Some(load_vectors(path).context("loading vectors")?),
            RerankSource::Scores => scores = Some(load_scores(path).context("loading scores")?),
        }
    }
    let aux = AuxTables {
        vectors: vectors.as_ref(),
        scores: scores.as_ref(),
        generated: generated.as_ref(),
    };
    let run = run_pipeline(&plan.spec, &queries, &index, &aux).context("ranking")?;
    run.write(&a.out, &a.run_tag).context("writing run")?;
    log::info!("wrote {} rankings to {}", run.len(), a.out.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    if a.cutoffs.is_empty() || a.cutoffs.contains(&0) {
        return Err(usage("--cutoffs must be positive integers"));
    }
    let run = Run::load(&a.run).context("loading run")?;
    let qrels = load_qrels(&a.qrels).context("loading qrels")?;
    let report = EvalReport::compute(&run, &qrels, &a.cutoffs).context("evaluating")?;
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn cmd_grid(a: GridArgs) -> Result<(), Failure> {
    let grid = |expr: &Option<String>, default: fn() -> Vec<f64>| match expr {
        Some(e) => parse_grid(e).map_err(|e| usage(e.to_string())),
        None => Ok(default()),
    };
    let k1s = grid(&a.k1_grid, default_k1_grid)?;
    let bs = grid(&a.b_grid, default_b_grid)?;
    if a.objective == 0 {
        return Err(usage("--objective must be at least 1"));
    }
    if let Some(bad) = k1s.iter().find(|k| **k < 0.0) {
        return Err(usage(format!("k1 grid value {bad} is negative")));
    }
    if let Some(bad) = bs.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(usage(format!("b grid value {bad} is outside [0, 1]")));
    }

    let index = InvertedIndex::load(&a.index).context("loading index")?;
    let queries = load_queries(&a.queries).context("loading queries")?;
    let qrels = load_qrels(&a.qrels).context("loading qrels")?;
    let result = grid_search_bm25(
        &index,
        &queries,
        &qrels,
        &k1s,
        &bs,
        a.objective,
        a.zero_heuristic,
    )
    .context("grid search")?;
    let tsv = result.to_tsv();
    fs::write(&a.out, &tsv).with_context(|| format!("writing {}", a.out.display()))?;
    print!(
        "{}",
        tsv.lines()
            .last()
            .map(|l| format!("{l}\n"))
            .unwrap_or_default()
    );
    Ok(())
}
