//! Command-line front end: one binary, one subcommand per pipeline stage.
//!
//! Line-oriented inputs are streamed in fixed-size batches; each batch is
//! processed in parallel and written back in input order, so output bytes do
//! not depend on the thread count. Every output is accompanied by a manifest
//! holding the effective configuration, input hashes and toolkit version.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assemble::{
    assemble, AssembleError, AssembleOptions, AssembledRecord, AssembledSource, Auxiliary, Method,
    SummaryOrder, DEFAULT_MAX_LEN,
};
use crate::corpus::{
    compute_stats, count_keyphrases_in_inputs, ingest, parse_processed, Article, Corpus,
    CorpusError, PresenceCounts, RecordFormat, Split, StatsAccumulator,
};
use crate::eval::{evaluate, load_predictions, Cutoff, EvalError};
use crate::retrieve::{
    build_index, load_embeddings, retrieve, Embedder, FileEmbedder, RetrievalResult, RetrieveError,
    TfidfEmbedder, VocabStats,
};
use crate::summarize::{build_graph, rank_graph, EdgeGuard, PacSumParams, SummarizeError};
use crate::textproc::join_tokens;

const BATCH: usize = 256;
pub const DEFAULT_DIM: usize = 4096;
pub const DEFAULT_RETRIEVAL_K: usize = 50;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("corpus: {path}: line {line}: {source}")]
    Record {
        path: String,
        line: usize,
        source: CorpusError,
    },
    #[error("summarize: article {id}: {source}")]
    Summarize { id: String, source: SummarizeError },
    #[error("retrieve: {0}")]
    Retrieve(#[from] RetrieveError),
    #[error("retrieve: article {id}: {source}")]
    RetrieveArticle { id: String, source: RetrieveError },
    #[error("assemble: {0}")]
    Assemble(#[from] AssembleError),
    #[error("assemble: {path}: line {line}: {message}")]
    Auxiliary {
        path: String,
        line: usize,
        message: String,
    },
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io { path: String, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kpaug",
    version,
    about = "Source-text augmentation and evaluation for keyphrase generation",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Worker threads [default: available cores].
    #[arg(long, global = true, env = "KPAUG_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// File of `key = value` lines giving defaults for subcommand flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean, segment and split raw records into the processed corpus format.
    #[command(args_override_self = true)]
    Preprocess(PreprocessArgs),
    /// Rank body sentences of every article by directed centrality.
    #[command(args_override_self = true)]
    Summarize(SummarizeArgs),
    /// Retrieve similar title/abstract sentences from other training articles.
    #[command(args_override_self = true)]
    Retrieve(RetrieveArgs),
    /// Build model source texts under a token budget.
    #[command(args_override_self = true)]
    Assemble(AssembleArgs),
    /// Corpus statistics: sizes and present/absent keyphrase shares.
    #[command(args_override_self = true)]
    Stats(StatsArgs),
    /// Score predicted keyphrases against the gold standard.
    #[command(args_override_self = true)]
    Evaluate(EvaluateArgs),
    /// preprocess, then summarize/retrieve as needed, assemble and stats.
    #[command(args_override_self = true)]
    Pipeline(PipelineArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Preprocess(_) => "preprocess",
            Command::Summarize(_) => "summarize",
            Command::Retrieve(_) => "retrieve",
            Command::Assemble(_) => "assemble",
            Command::Stats(_) => "stats",
            Command::Evaluate(_) => "evaluate",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

const SUBCOMMANDS: [&str; 7] = [
    "preprocess",
    "summarize",
    "retrieve",
    "assemble",
    "stats",
    "evaluate",
    "pipeline",
];

#[derive(Debug, Clone, Args, Serialize)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = RecordFormat::Raw)]
    pub format: RecordFormat,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct PacSumFlags {
    /// Summary length; every sentence is ranked when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda2: f64,
    #[arg(long, value_enum, default_value_t = EdgeGuard::Positive)]
    pub guard: EdgeGuard,
}

impl PacSumFlags {
    fn params(&self) -> PacSumParams {
        PacSumParams {
            beta: self.beta,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            guard: self.guard,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SummarizeArgs {
    /// Processed corpus file.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub pacsum: PacSumFlags,
    #[arg(long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderChoice {
    Tfidf,
    File,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RetrievalFlags {
    #[arg(long, default_value_t = DEFAULT_RETRIEVAL_K)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = EmbedderChoice::Tfidf)]
    pub embedder: EmbedderChoice,
    #[arg(long)]
    pub embeddings_path: Option<PathBuf>,
    /// Hashed feature dimension of the tf-idf embedder.
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RetrieveArgs {
    /// Processed corpus file; the index holds its training split.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub retrieval: RetrievalFlags,
    #[arg(long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct BudgetFlags {
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    /// Sampling seed for the random, citations and noncitations methods.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SummaryOrder::Rank)]
    pub summary_order: SummaryOrder,
}

impl BudgetFlags {
    fn options(&self) -> AssembleOptions {
        AssembleOptions {
            max_len: self.max_len,
            rng_seed: self.seed,
            summary_order: self.summary_order,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AssembleArgs {
    /// Processed corpus file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: BudgetFlags,
    /// Output of `summarize` over the same corpus file.
    #[arg(long)]
    pub summaries: Option<PathBuf>,
    /// Output of `retrieve` over the same corpus file.
    #[arg(long)]
    pub retrieval: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = RecordFormat::Processed)]
    pub format: RecordFormat,
    /// Split seed, used when `--format raw`.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Structured report; the table always goes to stdout.
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Corpus file holding the gold keyphrases.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value_t = RecordFormat::Processed)]
    pub format: RecordFormat,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Articles to score.
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    pub split: SplitChoice,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Cutoff::At5, Cutoff::AtM])]
    pub cutoffs: Vec<Cutoff>,
    #[arg(long)]
    #[serde(skip)]
    pub report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Ta,
    Random,
    Citations,
    Noncitations,
    Summary,
    Retaug,
    All,
}

impl MethodChoice {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Ta => vec![Method::Ta],
            MethodChoice::Random => vec![Method::Random],
            MethodChoice::Citations => vec![Method::Citations],
            MethodChoice::Noncitations => vec![Method::Noncitations],
            MethodChoice::Summary => vec![Method::Summary],
            MethodChoice::Retaug => vec![Method::Retaug],
            MethodChoice::All => Method::ALL.to_vec(),
        }
    }
}

/// Full configuration of a `pipeline` run.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = RecordFormat::Raw)]
    pub format: RecordFormat,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, value_enum)]
    pub method: MethodChoice,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: BudgetFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub pacsum: PacSumFlags,
    #[arg(long = "retrieval-k", default_value_t = DEFAULT_RETRIEVAL_K)]
    pub retrieval_k: usize,
    #[arg(long, value_enum, default_value_t = EmbedderChoice::Tfidf)]
    pub embedder: EmbedderChoice,
    #[arg(long)]
    pub embeddings_path: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

/// One line of `summarize` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    /// Body positions, most central first.
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub sentences: Vec<String>,
}

#[derive(Debug, Serialize)]
struct InputHash {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    inputs: Vec<InputHash>,
    outputs: Vec<String>,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(
        || p.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn write_manifest<C: Serialize>(
    at: &Path,
    command: &str,
    config: &C,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<(), CliError> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs: inputs
            .iter()
            .map(|p| {
                Ok(InputHash {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_, CliError>>()?,
        outputs: outputs.iter().map(|p| file_name(p)).collect(),
    };
    write_json(at, &manifest)
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

struct JsonlWriter {
    path: PathBuf,
    w: BufWriter<File>,
}

impl JsonlWriter {
    fn create(path: &Path) -> Result<Self, CliError> {
        let f = File::create(path).map_err(io_err(path))?;
        Ok(JsonlWriter {
            path: path.to_path_buf(),
            w: BufWriter::new(f),
        })
    }

    fn write<T: Serialize>(&mut self, v: &T) -> Result<(), CliError> {
        serde_json::to_writer(&mut self.w, v).map_err(|e| CliError::Io {
            path: self.path.display().to_string(),
            source: e.into(),
        })?;
        self.w.write_all(b"\n").map_err(io_err(&self.path))
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.w.flush().map_err(io_err(&self.path))
    }
}

/// Batched reader over a line-delimited file; yields (line number, line).
struct LineBatches {
    path: PathBuf,
    reader: BufReader<File>,
    line: usize,
}

impl LineBatches {
    fn open(path: &Path) -> Result<Self, CliError> {
        let f = File::open(path).map_err(io_err(path))?;
        Ok(LineBatches {
            path: path.to_path_buf(),
            reader: BufReader::new(f),
            line: 0,
        })
    }

    fn next_line(&mut self) -> Result<Option<(usize, String)>, CliError> {
        loop {
            let mut buf = String::new();
            let n = self
                .reader
                .read_line(&mut buf)
                .map_err(io_err(&self.path))?;
            if n == 0 {
                return Ok(None);
            }
            self.line += 1;
            if !buf.trim().is_empty() {
                return Ok(Some((self.line, buf)));
            }
        }
    }

    fn next_batch(&mut self) -> Result<Vec<(usize, String)>, CliError> {
        let mut out = Vec::with_capacity(BATCH);
        while out.len() < BATCH {
            match self.next_line()? {
                Some(l) => out.push(l),
                None => break,
            }
        }
        Ok(out)
    }
}

/// Stream a processed corpus in parsed batches.
struct CorpusBatches {
    lines: LineBatches,
    seen: usize,
}

impl CorpusBatches {
    fn open(path: &Path) -> Result<Self, CliError> {
        Ok(CorpusBatches {
            lines: LineBatches::open(path)?,
            seen: 0,
        })
    }

    fn next_batch(&mut self) -> Result<Vec<(Split, Article)>, CliError> {
        let raw = self.lines.next_batch()?;
        let path = self.lines.path.display().to_string();
        let parsed = raw
            .par_iter()
            .map(|(line, text)| {
                parse_processed(text)
                    .map(|r| (r.split, r.article))
                    .map_err(|source| CliError::Record {
                        path: path.clone(),
                        line: *line,
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.seen += parsed.len();
        Ok(parsed)
    }

    fn ensure_nonempty(&self) -> Result<(), CliError> {
        if self.seen == 0 {
            return Err(CorpusError::EmptyCorpus(format!(
                "no records in {}",
                self.lines.path.display()
            ))
            .into());
        }
        Ok(())
    }
}

/// Records of an auxiliary file that must follow the corpus order.
trait Keyed {
    fn key(&self) -> &str;
}

impl Keyed for SummaryRecord {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for RetrievalResult {
    fn key(&self) -> &str {
        &self.query_id
    }
}

struct AlignedReader {
    lines: LineBatches,
}

impl AlignedReader {
    fn next_for<T: DeserializeOwned + Keyed>(&mut self, id: &str) -> Result<T, CliError> {
        let path = self.lines.path.display().to_string();
        let (line, text) = self.lines.next_line()?.ok_or_else(|| CliError::Auxiliary {
            path: path.clone(),
            line: self.lines.line,
            message: format!("ended before article {id:?}"),
        })?;
        let rec: T = serde_json::from_str(&text).map_err(|e| CliError::Auxiliary {
            path: path.clone(),
            line,
            message: e.to_string(),
        })?;
        if rec.key() != id {
            return Err(CliError::Auxiliary {
                path,
                line,
                message: format!("record for {:?} where {id:?} was expected; regenerate it from the same corpus file", rec.key()),
            });
        }
        Ok(rec)
    }
}

fn summary_record(article: &Article, flags: &PacSumFlags) -> Result<SummaryRecord, CliError> {
    let graph =
        build_graph(&article.body, &flags.params()).map_err(|source| CliError::Summarize {
            id: article.id.clone(),
            source,
        })?;
    let mut order = rank_graph(&graph, &article.body);
    order.truncate(flags.k.unwrap_or(usize::MAX));
    Ok(SummaryRecord {
        id: article.id.clone(),
        scores: order.iter().map(|&i| graph.centrality[i]).collect(),
        sentences: order
            .iter()
            .map(|&i| {
                let s = &article.body[i];
                if s.text.is_empty() {
                    join_tokens(&s.tokens)
                } else {
                    s.text.clone()
                }
            })
            .collect(),
        indices: order,
    })
}

fn make_embedder(
    choice: EmbedderChoice,
    path: Option<&Path>,
    dim: usize,
    train: &[Article],
) -> Result<Box<dyn Embedder>, CliError> {
    match choice {
        EmbedderChoice::Tfidf => Ok(Box::new(TfidfEmbedder::new(
            VocabStats::from_train(train),
            dim,
        )?)),
        EmbedderChoice::File => {
            let path = path.ok_or_else(|| {
                RetrieveError::Config("--embeddings-path is required with --embedder file".into())
            })?;
            Ok(Box::new(FileEmbedder::new(load_embeddings(path)?)))
        }
    }
}

fn title_abstract_only(a: &Article) -> Article {
    Article {
        body: Vec::new(),
        ..a.clone()
    }
}

struct Retriever {
    index: crate::retrieve::EmbeddingIndex,
    embedder: Box<dyn Embedder>,
    k: usize,
}

impl Retriever {
    fn new(
        train: &[Article],
        choice: EmbedderChoice,
        path: Option<&Path>,
        dim: usize,
        k: usize,
    ) -> Result<Self, CliError> {
        if train.is_empty() {
            return Err(RetrieveError::EmptyTrainSplit.into());
        }
        let embedder = make_embedder(choice, path, dim, train)?;
        let units: usize = train.iter().map(|a| 1 + a.abstract_sentences.len()).sum();
        info!(
            "retrieval index: up to {units} keys x {} dims = {} bytes",
            embedder.dim(),
            units * embedder.dim() * 4
        );
        let (index, report) = build_index(train, embedder.as_ref())?;
        if report.skipped > 0 {
            warn!("retrieval index: {} pool sentences skipped", report.skipped);
        }
        Ok(Retriever { index, embedder, k })
    }

    fn query(&self, article: &Article) -> Result<RetrievalResult, CliError> {
        retrieve(&self.index, article, self.k, self.embedder.as_ref()).map_err(|source| {
            CliError::RetrieveArticle {
                id: article.id.clone(),
                source,
            }
        })
    }
}

fn cmd_preprocess(args: &PreprocessArgs) -> Result<(), CliError> {
    let ingested = ingest(&args.input, args.format, args.split_seed)?;
    log_ingest(&ingested.report);
    let f = File::create(&args.output).map_err(io_err(&args.output))?;
    let mut w = BufWriter::new(f);
    ingested
        .corpus
        .write_jsonl(&mut w)
        .map_err(io_err(&args.output))?;
    w.flush().map_err(io_err(&args.output))?;
    write_manifest(
        &manifest_path(&args.output),
        "preprocess",
        args,
        &[&args.input],
        &[&args.output],
    )
}

fn log_ingest(r: &crate::corpus::IngestReport) {
    info!(
        "ingest: {} lines, {} kept, {} malformed, {} missing fields, {} without citations, {} duplicates",
        r.lines,
        r.kept,
        r.record_errors.len(),
        r.dropped_missing_fields,
        r.dropped_no_citations,
        r.dropped_duplicates
    );
}

fn cmd_summarize(args: &SummarizeArgs) -> Result<(), CliError> {
    let mut input = CorpusBatches::open(&args.input)?;
    let mut out = JsonlWriter::create(&args.output)?;
    loop {
        let batch = input.next_batch()?;
        if batch.is_empty() {
            break;
        }
        let records = batch
            .par_iter()
            .map(|(_, a)| summary_record(a, &args.pacsum))
            .collect::<Result<Vec<_>, _>>()?;
        for r in &records {
            out.write(r)?;
        }
    }
    input.ensure_nonempty()?;
    out.finish()?;
    write_manifest(
        &manifest_path(&args.output),
        "summarize",
        args,
        &[&args.input],
        &[&args.output],
    )
}

fn cmd_retrieve(args: &RetrieveArgs) -> Result<(), CliError> {
    let mut train = Vec::new();
    let mut input = CorpusBatches::open(&args.input)?;
    loop {
        let batch = input.next_batch()?;
        if batch.is_empty() {
            break;
        }
        train.extend(
            batch
                .iter()
                .filter(|(s, _)| *s == Split::Train)
                .map(|(_, a)| title_abstract_only(a)),
        );
    }
    input.ensure_nonempty()?;
    let r = &args.retrieval;
    let retriever = Retriever::new(&train, r.embedder, r.embeddings_path.as_deref(), r.dim, r.k)?;
    drop(train);

    let mut input = CorpusBatches::open(&args.input)?;
    let mut out = JsonlWriter::create(&args.output)?;
    loop {
        let batch = input.next_batch()?;
        if batch.is_empty() {
            break;
        }
        let results = batch
            .par_iter()
            .map(|(_, a)| retriever.query(a))
            .collect::<Result<Vec<_>, _>>()?;
        for res in &results {
            out.write(res)?;
        }
    }
    out.finish()?;
    let mut inputs: Vec<&Path> = vec![&args.input];
    if let Some(p) = &r.embeddings_path {
        inputs.push(p);
    }
    write_manifest(
        &manifest_path(&args.output),
        "retrieve",
        args,
        &inputs,
        &[&args.output],
    )
}

fn cmd_assemble(args: &AssembleArgs) -> Result<(), CliError> {
    let opts = args.budget.options();
    let aux_path = match args.method {
        Method::Summary => Some(args.summaries.as_deref().ok_or(
            AssembleError::MissingAuxiliary(Method::Summary, "a ranked summary (--summaries)"),
        )?),
        Method::Retaug => Some(args.retrieval.as_deref().ok_or(
            AssembleError::MissingAuxiliary(Method::Retaug, "a retrieval result (--retrieval)"),
        )?),
        _ => None,
    };
    let mut aux = aux_path
        .map(|p| LineBatches::open(p).map(|lines| AlignedReader { lines }))
        .transpose()?;
    let mut input = CorpusBatches::open(&args.input)?;
    let mut out = JsonlWriter::create(&args.output)?;
    loop {
        let batch = input.next_batch()?;
        if batch.is_empty() {
            break;
        }
        let mut summaries = Vec::new();
        let mut retrievals = Vec::new();
        if let Some(reader) = aux.as_mut() {
            for (_, a) in &batch {
                match args.method {
                    Method::Summary => {
                        summaries.push(reader.next_for::<SummaryRecord>(&a.id)?.indices)
                    }
                    _ => retrievals.push(reader.next_for::<RetrievalResult>(&a.id)?),
                }
            }
        }
        let records = batch
            .par_iter()
            .enumerate()
            .map(|(i, (_, a))| {
                let aux = match args.method {
                    Method::Summary => Auxiliary::Summary(&summaries[i]),
                    Method::Retaug => Auxiliary::Retrieval(&retrievals[i]),
                    _ => Auxiliary::None,
                };
                assemble(a, args.method, &opts, aux).map(|src| AssembledRecord::new(&src, a))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for r in &records {
            out.write(r)?;
        }
    }
    input.ensure_nonempty()?;
    out.finish()?;
    let mut inputs: Vec<&Path> = vec![&args.input];
    inputs.extend(aux_path);
    write_manifest(
        &manifest_path(&args.output),
        "assemble",
        args,
        &inputs,
        &[&args.output],
    )
}

fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let stats = match args.format {
        RecordFormat::Raw => {
            let ingested = ingest(&args.input, RecordFormat::Raw, args.split_seed)?;
            log_ingest(&ingested.report);
            compute_stats(&ingested.corpus)?
        }
        RecordFormat::Processed => {
            let mut acc = StatsAccumulator::default();
            let mut input = CorpusBatches::open(&args.input)?;
            loop {
                let batch = input.next_batch()?;
                if batch.is_empty() {
                    break;
                }
                for split in [Split::Train, Split::Val, Split::Test] {
                    let part: Vec<Article> = batch
                        .iter()
                        .filter(|(s, _)| *s == split)
                        .map(|(_, a)| a.clone())
                        .collect();
                    acc.add(split, &part);
                }
            }
            acc.finish()?
        }
    };
    print!("{}", stats.to_table());
    if let Some(out) = &args.output {
        write_json(out, &stats)?;
        write_manifest(&manifest_path(out), "stats", args, &[&args.input], &[out])?;
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let corpus = ingest(&args.gold, args.format, args.split_seed)?.corpus;
    let predictions = load_predictions(&args.predictions)?;
    let articles: Vec<&Article> = match args.split {
        SplitChoice::All => corpus.articles().collect(),
        SplitChoice::Train => corpus.train.iter().collect(),
        SplitChoice::Val => corpus.val.iter().collect(),
        SplitChoice::Test => corpus.test.iter().collect(),
    };
    let report = evaluate(articles, &predictions, &args.cutoffs)?;
    if report.missing_predictions > 0 {
        warn!(
            "{} articles had no prediction record",
            report.missing_predictions
        );
    }
    print!("{}", report.to_table());
    write_json(&args.report, &report)?;
    write_manifest(
        &manifest_path(&args.report),
        "evaluate",
        args,
        &[&args.gold, &args.predictions],
        &[&args.report],
    )
}

fn assembled_name(m: Method) -> String {
    format!("assembled_{}.jsonl", m.as_str())
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<(), CliError> {
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut outputs: Vec<PathBuf> = Vec::new();

    let ingested = ingest(&args.input, args.format, args.split_seed)?;
    log_ingest(&ingested.report);
    let corpus: Corpus = ingested.corpus;
    let corpus_path = dir.join("corpus.jsonl");
    {
        let f = File::create(&corpus_path).map_err(io_err(&corpus_path))?;
        let mut w = BufWriter::new(f);
        corpus.write_jsonl(&mut w).map_err(io_err(&corpus_path))?;
        w.flush().map_err(io_err(&corpus_path))?;
    }
    outputs.push(corpus_path);

    let stats = compute_stats(&corpus)?;
    let stats_json = dir.join("stats.json");
    write_json(&stats_json, &stats)?;
    let stats_txt = dir.join("stats.txt");
    write_text(&stats_txt, &stats.to_table())?;
    outputs.extend([stats_json, stats_txt]);

    let methods = args.method.methods();
    let articles: Vec<&Article> = corpus.articles().collect();

    let summaries: Option<Vec<SummaryRecord>> = if methods.contains(&Method::Summary) {
        let recs = articles
            .par_iter()
            .map(|a| summary_record(a, &args.pacsum))
            .collect::<Result<Vec<_>, _>>()?;
        let path = dir.join("summaries.jsonl");
        let mut w = JsonlWriter::create(&path)?;
        for r in &recs {
            w.write(r)?;
        }
        w.finish()?;
        outputs.push(path);
        Some(recs)
    } else {
        None
    };

    let retrievals: Option<Vec<RetrievalResult>> = if methods.contains(&Method::Retaug) {
        let retriever = Retriever::new(
            &corpus.train,
            args.embedder,
            args.embeddings_path.as_deref(),
            args.dim,
            args.retrieval_k,
        )?;
        let results = articles
            .par_iter()
            .map(|a| retriever.query(a))
            .collect::<Result<Vec<_>, _>>()?;
        let path = dir.join("retrieval.jsonl");
        let mut w = JsonlWriter::create(&path)?;
        for r in &results {
            w.write(r)?;
        }
        w.finish()?;
        outputs.push(path);
        Some(results)
    } else {
        None
    };

    let opts = args.budget.options();
    let mut presence: BTreeMap<Method, PresenceCounts> = BTreeMap::new();
    for &method in &methods {
        let sources: Vec<AssembledSource> = articles
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                let aux = match method {
                    Method::Summary => Auxiliary::Summary(
                        &summaries.as_ref().expect("summaries computed")[i].indices,
                    ),
                    Method::Retaug => {
                        Auxiliary::Retrieval(&retrievals.as_ref().expect("retrieval computed")[i])
                    }
                    _ => Auxiliary::None,
                };
                assemble(a, method, &opts, aux)
            })
            .collect::<Result<_, _>>()?;
        let path = dir.join(assembled_name(method));
        let mut w = JsonlWriter::create(&path)?;
        for (src, a) in sources.iter().zip(&articles) {
            w.write(&AssembledRecord::new(src, a))?;
        }
        w.finish()?;
        outputs.push(path);
        presence.extend(count_keyphrases_in_inputs(&corpus, &sources)?);
    }
    let presence_path = dir.join("presence.json");
    write_json(&presence_path, &presence)?;
    outputs.push(presence_path);

    let mut inputs: Vec<&Path> = vec![&args.input];
    if let (EmbedderChoice::File, Some(p)) = (args.embedder, &args.embeddings_path) {
        inputs.push(p);
    }
    let outs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    write_manifest(&dir.join("manifest.json"), "pipeline", args, &inputs, &outs)
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Retrieve(a) => cmd_retrieve(a),
        Command::Assemble(a) => cmd_assemble(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}

/// Parse a `key = value` config file into `--key=value` arguments.
pub fn config_args(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        let v = v.trim();
        let v = v
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(v);
        out.push(format!("--{key}={v}"));
    }
    Ok(out)
}

/// Splice config-file arguments in right after the subcommand name, so
/// that flags given on the command line take precedence.
fn apply_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut config = None;
    let mut sub_at = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" || a == "--threads" {
            if a == "--config" {
                config = argv.get(i + 1).cloned();
            }
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(OsString::from(p));
        } else if sub_at.is_none() && SUBCOMMANDS.contains(&a.as_ref()) {
            sub_at = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(at)) = (config, sub_at) else {
        return Ok(argv);
    };
    let path = PathBuf::from(path);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let extra = config_args(&text)?;
    let mut out = argv;
    out.splice(at + 1..at + 1, extra.into_iter().map(OsString::from));
    Ok(out)
}

/// Run the tool on `argv` (program name first) and return the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("kpaug: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.map_or(0, usize::from))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("kpaug: cannot start worker pool: {e}");
            return 1;
        }
    };
    info!(
        "{}: {} worker threads",
        cli.command.name(),
        pool.current_num_threads()
    );
    match pool.install(|| dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("kpaug: {e}");
            1
        }
    }
}
