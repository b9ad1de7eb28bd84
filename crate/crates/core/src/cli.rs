//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error, 3
//! runtime or transport error (I/O, remote service). Hyperparameters are
//! resolved as built-in defaults, then `--config` file values, then flags.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{apply_hyperparams, apply_synth, load_config, ConfigError};
use crate::corpus::{Corpus, DocFormat, QRel, Query};
use crate::encoder::{EncodeError, EncoderBackend, HashEncoder};
use crate::eval::runners::{
    document_qrels, learning_curve, run_classify_eval, run_document_eval, run_format_ablation, run_granularity,
    run_section_eval, train_and_index, train_split_reranker, DOC_KS, RERANK_POOL,
};
use crate::eval::{gen_synthetic, render_table, EvalError, EvalReport, Split, SynthConfig, SynthData};
use crate::index::{build_index, load_index, save_index, IndexError};
use crate::ingest::{
    parse_html, read_corpus, read_qrels, read_queries, validate_qrels, write_corpus, write_qrels, write_queries,
    IngestError,
};
use crate::remote::{sidecar_check, RemoteEncoder, RemoteError};
use crate::rerank::Reranker;
use crate::train::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, Model};
use crate::train::{train_reranker, train_retriever, Hyperparams, NegativeStrategy, RerankObjective, RetrievalContext, TrainError};

#[derive(Debug, Parser)]
#[command(name = "interdoc", version, about = "Interleaved multimodal document retrieval")]
pub struct Cli {
    /// Seed for every randomized step (overrides config files).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a directory of HTML files into a corpus JSONL file.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with train/test queries and qrels.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the retriever dual encoder.
    TrainRetriever {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "interleaved")]
        format: DocFormat,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a section reranker.
    TrainReranker {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long)]
        objective: Option<RerankObjective>,
        #[arg(long)]
        negatives: Option<NegativeStrategy>,
        /// Retriever checkpoint and index, required for `top_k` negatives.
        #[arg(long)]
        retriever: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a corpus into an index file.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value = "interleaved")]
        format: DocFormat,
        /// Sample at most this many sections per document.
        #[arg(long)]
        section_limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the top documents for one query.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        query: String,
        #[arg(long)]
        image_ref: Vec<String>,
        #[arg(short, default_value_t = 10)]
        k: usize,
    },
    /// Evaluate retrieval or reranking.
    Eval(EvalArgs),
    /// Probe a remote encoder service for protocol conformance.
    SidecarCheck {
        #[arg(long)]
        endpoint: String,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Trained retriever checkpoint.
    #[arg(long, conflicts_with = "endpoint", required_unless_present = "endpoint")]
    checkpoint: Option<PathBuf>,
    /// Remote encoder service URL.
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Debug, Args)]
pub struct HpArgs {
    /// `key = value` hyperparameter file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f32>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    d_emb: Option<usize>,
    #[arg(long)]
    sections_per_doc: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Document,
    Section,
    Classify,
    AblateFormats,
    Granularity,
    LearningCurve,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    mode: EvalMode,
    /// Synthetic data directory (as written by `synth`), used by the
    /// training modes and as a default source of corpus/queries/qrels.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    #[command(flatten)]
    backend: OptBackendArgs,
    /// Reranker checkpoint (section and classify modes).
    #[arg(long)]
    reranker: Option<PathBuf>,
    #[arg(long, default_value = "interleaved")]
    format: DocFormat,
    /// Documents whose sections are reranked.
    #[arg(long, default_value_t = RERANK_POOL)]
    pool: usize,
    #[arg(long, value_delimiter = ',')]
    formats: Vec<DocFormat>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.5, 1.0])]
    ratios: Vec<f64>,
    #[command(flatten)]
    hp: HpArgs,
    /// Reranker hyperparameter file (granularity mode).
    #[arg(long)]
    reranker_config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<RerankObjective>,
    #[arg(long)]
    negatives: Option<NegativeStrategy>,
    /// Write the report(s) as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptBackendArgs {
    #[arg(long, conflicts_with = "endpoint")]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        match e {
            EncodeError::Remote(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Io { .. } | IndexError::Encode { source: EncodeError::Remote(_), .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RemoteError> for CliError {
    fn from(e: RemoteError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Index(e) => e.into(),
            EvalError::Encode(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => {
                let mut buf = Vec::new();
                let r = pool.install(|| dispatch(&cli, &mut buf));
                out.write_all(&buf).map_err(io).and(r)
            }
            Err(e) => Err(CliError::Runtime(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Ingest { input, out: path } => ingest(input, path, out),
        Command::Synth { config, out_dir } => synth(config.as_deref(), out_dir, seed, out),
        Command::TrainRetriever { data, format, hp, out: path } => {
            let hp = resolve_hp(hp, None, seed)?;
            let (corpus, queries, qrels) = load_data(data)?;
            let (enc, log) = train_retriever(&corpus.with_format(*format), &queries, &qrels, &hp)?;
            save_checkpoint(&Checkpoint { model: Model::Retriever(enc), steps: log.steps }, path)?;
            report_training(out, &log.epoch_losses, log.steps)
        }
        Command::TrainReranker { data, hp, objective, negatives, retriever, index, out: path } => {
            let mut hp = resolve_hp(hp, None, seed)?;
            hp.objective = objective.unwrap_or(hp.objective);
            hp.negative_strategy = negatives.unwrap_or(hp.negative_strategy);
            let (corpus, queries, qrels) = load_data(data)?;
            let context = match (retriever, index) {
                (Some(r), Some(i)) => Some((load_checkpoint(r)?.into_retriever()?, load_index(i)?)),
                (None, None) => None,
                _ => return Err(CliError::Usage("--retriever and --index go together".into())),
            };
            if hp.negative_strategy == NegativeStrategy::TopK && context.is_none() {
                return Err(CliError::Usage("top_k negatives need --retriever and --index".into()));
            }
            let ctx = context.as_ref().map(|(enc, index)| RetrievalContext { backend: enc, index });
            let (rr, log) = train_reranker(&corpus, &queries, &qrels, &hp, ctx)?;
            save_checkpoint(&Checkpoint { model: Model::Reranker(rr), steps: log.steps }, path)?;
            report_training(out, &log.epoch_losses, log.steps)
        }
        Command::Index { corpus, backend, format, section_limit, out: path } => {
            let corpus = read_corpus(corpus)?.with_format(*format);
            let backend = open_backend(backend.checkpoint.as_deref(), backend.endpoint.as_deref())?;
            let (index, report) = build_index(&corpus, backend.as_dyn(), *section_limit, seed.unwrap_or(0))?;
            save_index(&index, path)?;
            writeln!(out, "indexed {} documents ({} with zero norm)", index.len(), report.zero_norm.len()).map_err(io)?;
            for id in &report.zero_norm {
                writeln!(out, "zero-norm\t{id}").map_err(io)?;
            }
            Ok(())
        }
        Command::Search { index, backend, query, image_ref, k } => {
            let index = load_index(index)?;
            let backend = open_backend(backend.checkpoint.as_deref(), backend.endpoint.as_deref())?;
            let q = Query { query_id: "q".into(), text: query.clone(), image_refs: image_ref.clone() };
            let zq = backend.as_dyn().encode_query(&q)?;
            for (rank, (doc_id, score)) in index.search(&zq, *k)?.into_iter().enumerate() {
                writeln!(out, "{}\t{doc_id}\t{score:.6}", rank + 1).map_err(io)?;
            }
            Ok(())
        }
        Command::Eval(args) => eval(args, seed, out),
        Command::SidecarCheck { endpoint } => {
            let checks = sidecar_check(endpoint)?;
            for c in &checks {
                writeln!(out, "{}\t{}\t{}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail).map_err(io)?;
            }
            match checks.iter().filter(|c| !c.passed).count() {
                0 => Ok(()),
                n => Err(CliError::Data(format!("{n} conformance check(s) failed"))),
            }
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn report_training(out: &mut dyn Write, losses: &[f64], steps: u64) -> Result<(), CliError> {
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "epoch {}\tloss {l:.6}", i + 1).map_err(io)?;
    }
    writeln!(out, "steps {steps}").map_err(io)
}

fn resolve_hp(args: &HpArgs, file: Option<&Path>, seed: Option<u64>) -> Result<Hyperparams, CliError> {
    let mut hp = Hyperparams::default();
    if let Some(path) = file.or(args.config.as_deref()) {
        apply_hyperparams(&mut hp, &load_config(path)?)?;
    }
    hp.epochs = args.epochs.unwrap_or(hp.epochs);
    hp.lr = args.lr.unwrap_or(hp.lr);
    hp.batch_size = args.batch_size.unwrap_or(hp.batch_size);
    hp.features = args.features.unwrap_or(hp.features);
    hp.d_emb = args.d_emb.unwrap_or(hp.d_emb);
    hp.sections_per_doc = args.sections_per_doc.unwrap_or(hp.sections_per_doc);
    hp.seed = seed.unwrap_or(hp.seed);
    hp.validate()?;
    Ok(hp)
}

fn load_data(d: &DataArgs) -> Result<(Corpus, Vec<Query>, Vec<QRel>), CliError> {
    let corpus = read_corpus(&d.corpus)?;
    let queries = read_queries(&d.queries)?;
    let qrels = read_qrels(&d.qrels)?;
    validate_qrels(&qrels, &corpus, &queries)?;
    Ok((corpus, queries, qrels))
}

enum Backend {
    Hash(HashEncoder),
    Remote(RemoteEncoder),
}

impl Backend {
    fn as_dyn(&self) -> &dyn EncoderBackend {
        match self {
            Backend::Hash(e) => e,
            Backend::Remote(r) => r,
        }
    }
}

fn open_backend(checkpoint: Option<&Path>, endpoint: Option<&str>) -> Result<Backend, CliError> {
    match (checkpoint, endpoint) {
        (Some(path), None) => Ok(Backend::Hash(load_checkpoint(path)?.into_retriever()?)),
        (None, Some(url)) => Ok(Backend::Remote(RemoteEncoder::connect(url)?)),
        _ => Err(CliError::Usage("give exactly one of --checkpoint or --endpoint".into())),
    }
}

fn ingest(dir: &Path, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|x| x.to_str()), Some("html" | "htm")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("no .html files in {}", dir.display())));
    }
    let mut docs = Vec::with_capacity(files.len());
    for file in &files {
        let bytes = std::fs::read(file).map_err(|e| CliError::Runtime(format!("{}: {e}", file.display())))?;
        let id = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        docs.push(parse_html(&bytes, id).map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?);
    }
    let corpus = Corpus::new(docs).map_err(|e| CliError::Data(e.to_string()))?;
    write_corpus(&corpus, path)?;
    writeln!(out, "ingested {} documents", corpus.len()).map_err(io)
}

/// File names inside a synthetic data directory.
pub const SYNTH_FILES: [&str; 5] =
    ["corpus.jsonl", "train_queries.jsonl", "train_qrels.jsonl", "test_queries.jsonl", "test_qrels.jsonl"];

fn synth(config: Option<&Path>, dir: &Path, seed: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = SynthConfig::default();
    if let Some(path) = config {
        apply_synth(&mut cfg, &load_config(path)?)?;
    }
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.validate().map_err(CliError::Data)?;
    let data = gen_synthetic(&cfg);
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let [c, trq, trr, teq, ter] = SYNTH_FILES.map(|f| dir.join(f));
    write_corpus(&data.corpus, &c)?;
    write_queries(&data.train.queries, &trq)?;
    write_qrels(&data.train.qrels, &trr)?;
    write_queries(&data.test.queries, &teq)?;
    write_qrels(&data.test.qrels, &ter)?;
    writeln!(
        out,
        "wrote {} documents, {} train and {} test queries to {}",
        data.corpus.len(),
        data.train.queries.len(),
        data.test.queries.len(),
        dir.display()
    )
    .map_err(io)
}

/// Reads a directory written by `synth`. Plant records are not stored, so
/// the result has none.
pub fn read_synth_dir(dir: &Path) -> Result<SynthData, IngestError> {
    let [c, trq, trr, teq, ter] = SYNTH_FILES.map(|f| dir.join(f));
    let corpus = read_corpus(&c)?;
    let train = Split { queries: read_queries(&trq)?, qrels: read_qrels(&trr)? };
    let test = Split { queries: read_queries(&teq)?, qrels: read_qrels(&ter)? };
    validate_qrels(&train.qrels, &corpus, &train.queries)?;
    validate_qrels(&test.qrels, &corpus, &test.queries)?;
    Ok(SynthData { corpus, plants: Vec::new(), train, test })
}

fn need<'a, T: ?Sized>(v: Option<&'a T>, flag: &str, mode: &str) -> Result<&'a T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--mode {mode} needs --{flag}")))
}

fn eval(a: &EvalArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let mode = a.mode.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let data = a.data.as_deref().map(read_synth_dir).transpose()?;
    // Explicit files win over the test split of `--data`.
    let eval_set = || -> Result<(Corpus, Vec<Query>, Vec<QRel>), CliError> {
        let corpus = match (&a.corpus, &data) {
            (Some(p), _) => read_corpus(p)?,
            (None, Some(d)) => d.corpus.clone(),
            (None, None) => return Err(CliError::Usage(format!("--mode {mode} needs --corpus or --data"))),
        };
        let queries = match (&a.queries, &data) {
            (Some(p), _) => read_queries(p)?,
            (None, Some(d)) => d.test.queries.clone(),
            (None, None) => return Err(CliError::Usage(format!("--mode {mode} needs --queries or --data"))),
        };
        let qrels = match (&a.qrels, &data) {
            (Some(p), _) => read_qrels(p)?,
            (None, Some(d)) => d.test.qrels.clone(),
            (None, None) => return Err(CliError::Usage(format!("--mode {mode} needs --qrels or --data"))),
        };
        validate_qrels(&qrels, &corpus, &queries)?;
        Ok((corpus.with_format(a.format), queries, qrels))
    };
    let rows: Vec<(String, EvalReport)> = match a.mode {
        EvalMode::Document => {
            let (_, queries, qrels) = eval_set()?;
            let index = load_index(need(a.index.as_deref(), "index", &mode)?)?;
            let backend = open_backend(a.backend.checkpoint.as_deref(), a.backend.endpoint.as_deref())?;
            let report = run_document_eval(&index, backend.as_dyn(), &queries, &document_qrels(&qrels), &DOC_KS)?;
            vec![("document".into(), report)]
        }
        EvalMode::Section => {
            let (corpus, queries, qrels) = eval_set()?;
            let index = load_index(need(a.index.as_deref(), "index", &mode)?)?;
            let backend = open_backend(a.backend.checkpoint.as_deref(), a.backend.endpoint.as_deref())?;
            let rr = load_reranker(need(a.reranker.as_deref(), "reranker", &mode)?)?;
            let report = run_section_eval(&index, backend.as_dyn(), &corpus, &rr, &queries, &qrels, a.pool)?;
            vec![("section".into(), report)]
        }
        EvalMode::Classify => {
            let (corpus, queries, qrels) = eval_set()?;
            let rr = load_reranker(need(a.reranker.as_deref(), "reranker", &mode)?)?;
            vec![("classify".into(), run_classify_eval(&rr, &corpus, &queries, &qrels)?)]
        }
        EvalMode::AblateFormats => {
            let data = need(data.as_ref(), "data", &mode)?;
            let hp = resolve_hp(&a.hp, None, seed)?;
            let formats = if a.formats.is_empty() { DocFormat::ALL.to_vec() } else { a.formats.clone() };
            run_format_ablation(data, &formats, &hp)?.into_iter().map(|(f, r)| (f.as_str().to_string(), r)).collect()
        }
        EvalMode::Granularity => {
            let data = need(data.as_ref(), "data", &mode)?;
            let hp = resolve_hp(&a.hp, None, seed)?;
            let mut rhp = resolve_hp(&a.hp, a.reranker_config.as_deref(), seed)?;
            rhp.objective = a.objective.unwrap_or(rhp.objective);
            rhp.negative_strategy = a.negatives.unwrap_or(rhp.negative_strategy);
            let (enc, index) = train_and_index(&data.corpus, &data.train.queries, &data.train.qrels, &hp)?;
            let rr = train_split_reranker(data, &rhp, (&enc, &index))?;
            run_granularity(data, (&enc, &index), &rr, &hp, a.pool)?
        }
        EvalMode::LearningCurve => {
            let data = need(data.as_ref(), "data", &mode)?;
            let hp = resolve_hp(&a.hp, None, seed)?;
            if let Some(r) = a.ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
                return Err(CliError::Usage(format!("ratio {r} outside (0, 1]")));
            }
            learning_curve(data, &a.ratios, &hp)?.into_iter().map(|(r, rep)| (format!("{r}"), rep)).collect()
        }
    };
    let table: Vec<(String, &EvalReport)> = rows.iter().map(|(n, r)| (n.clone(), r)).collect();
    write!(out, "{}", render_table(&table)).map_err(io)?;
    if let Some(path) = &a.out {
        let json = if rows.len() == 1 {
            rows[0].1.to_json()
        } else {
            let named: Vec<serde_json::Value> = rows
                .iter()
                .map(|(n, r)| serde_json::json!({ "name": n, "report": r }))
                .collect();
            serde_json::to_string_pretty(&named).expect("reports serialize")
        };
        std::fs::write(path, json + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn load_reranker(path: &Path) -> Result<Reranker, CliError> {
    Ok(load_checkpoint(path)?.into_reranker()?)
}
