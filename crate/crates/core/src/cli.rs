//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error (bad flags or parameter values) |
//! | 3 | data error (unreadable or malformed input) |
//! | 4 | time budget exhausted; partial results were written |

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{load_csv, BinaryDataset, DatasetError, SensitiveVector};
use crate::enumerator::{
    enumerate_parallel, enumerate_rashomon, threshold_from_errors, EmitOrder, EnumConfig,
    EnumError, EnumStats, Prunings, SinkError, Solution, Threshold,
};
use crate::lawler::{topk, AnswerRecord, Branching, TopKConfig, TopKStats};
use crate::manifest::RunManifest;
use crate::memory;
use crate::metrics::{
    Criterion, MetricsError, MetricsReport, MultiplicityAccumulator, UnfairnessAccumulator,
};
use crate::optimizer::{fit_optimal, OptResultRecord, OptimizerConfig, OptimizerError};
use crate::rulelist::{
    misclassifications, prediction_vector, Evaluation, Regularizer, RuleList, RuleListError,
    RuleListRecord,
};
use crate::vocabulary::{
    attach_structure, load_terms_file, mine_terms, TermId, Vocabulary, VocabularyError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Vocabulary(#[from] VocabularyError),
    #[error(transparent)]
    RuleList(#[from] RuleListError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Enumeration(#[from] EnumError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Dataset(DatasetError::InvalidFraction(_))
            | CliError::Vocabulary(
                VocabularyError::InvalidCoverage(_) | VocabularyError::InvalidLength,
            )
            | CliError::RuleList(RuleListError::Lambda(_))
            | CliError::Optimizer(OptimizerError::InvalidLength)
            | CliError::Enumeration(EnumError::InvalidEpsilon(_) | EnumError::InvalidLength) => 2,
            _ => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rashomon",
    version,
    about = "Exact Rashomon sets of rule lists"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine conjunction terms from a binary dataset.
    Mine(MineArgs),
    /// Fit the optimal rule list.
    Fit(FitArgs),
    /// Enumerate every rule list within a tolerance of a reference model.
    Enumerate(EnumerateArgs),
    /// Top-K rule lists by repeated constrained re-fitting.
    Topk(TopkArgs),
    /// Run enumeration and top-K side by side under one budget.
    Compare(CompareArgs),
    /// Multiplicity and fairness metrics over enumerated solutions.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Binary CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub label_col: String,
    /// Binary column excluded from the features and used for fairness.
    #[arg(long)]
    pub sensitive_col: Option<String>,
    /// Keep a seeded random fraction of rows for training; the rest is held out.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MiningArgs {
    /// Maximum number of features per conjunction.
    #[arg(long, default_value_t = 1)]
    pub max_conj: usize,
    /// Minimum fraction of positive examples a term must capture.
    #[arg(long, default_value_t = 0.0)]
    pub min_pos_coverage: f64,
}

#[derive(Debug, Args)]
pub struct TermArgs {
    /// Term capture file (`{NAME} b1 ... bN` per line).
    #[arg(long)]
    pub terms: Option<PathBuf>,
    /// Mine terms from the data instead of reading a file.
    #[arg(long)]
    pub mine: bool,
    #[command(flatten)]
    pub mining: MiningArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Maximum rule-list length, default rule included.
    #[arg(long, default_value_t = 3)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Minimum number of examples each rule must newly capture.
    #[arg(long, default_value_t = 1)]
    pub min_capture: u64,
    #[arg(long)]
    pub timeout_s: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(long)]
    pub no_prune_lower_bound: bool,
    #[arg(long)]
    pub no_prune_min_support: bool,
    #[arg(long)]
    pub no_prune_symmetry: bool,
}

impl PruneArgs {
    fn prunings(&self) -> Prunings {
        Prunings {
            lower_bound: !self.no_prune_lower_bound,
            min_support: !self.no_prune_min_support,
            symmetry: !self.no_prune_symmetry,
        }
    }
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub terms: TermArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub terms: TermArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub prune: PruneArgs,
    /// Risk tolerance above the reference; repeat for a sweep.
    #[arg(long = "epsilon")]
    pub epsilons: Vec<f64>,
    /// Explicit misclassification threshold instead of a tolerance.
    #[arg(long, conflicts_with = "epsilons")]
    pub max_errors: Option<u64>,
    /// Apply the tolerance to the regularized objective instead of the risk.
    #[arg(long)]
    pub objective: bool,
    /// JSON file holding the reference rule list (fit.json or stats.json).
    /// Defaults to the optimal rule list.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Emit solutions sorted by errors then length instead of traversal order.
    #[arg(long)]
    pub sorted: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BranchingArg {
    Partition,
    TermRemoval,
}

impl From<BranchingArg> for Branching {
    fn from(b: BranchingArg) -> Self {
        match b {
            BranchingArg::Partition => Branching::Partition,
            BranchingArg::TermRemoval => Branching::TermRemoval,
        }
    }
}

#[derive(Debug, Args)]
pub struct TopkArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub terms: TermArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = BranchingArg::Partition)]
    pub branching: BranchingArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub terms: TermArgs,
    /// `--timeout-s` is the budget given to each method.
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = BranchingArg::Partition)]
    pub branching: BranchingArg,
    /// Objective tolerance above the optimum for the enumerator; unlimited
    /// when absent.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub terms: TermArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// solutions.jsonl written by `enumerate`.
    #[arg(long)]
    pub solutions: PathBuf,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Tolerances at which to report; membership uses training risk.
    #[arg(long = "epsilon", required = true)]
    pub epsilons: Vec<f64>,
    /// Also report demographic parity and equal opportunity ranges.
    #[arg(long)]
    pub fairness: bool,
    /// Examples on which predictions are compared.
    #[arg(long, value_enum, default_value_t = EvalSplit::Train)]
    pub eval_split: EvalSplit,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("warning: time budget exhausted; results are partial");
            4
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command. `Ok(false)` means a time budget ran out and the
/// written results are partial.
pub fn execute(command: &Command) -> Result<bool, CliError> {
    match command {
        Command::Mine(a) => cmd_mine(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Topk(a) => cmd_topk(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Analyze(a) => cmd_analyze(a),
    }
}

struct Holdout {
    data: BinaryDataset,
    sensitive: Option<SensitiveVector>,
    vocab: Vocabulary,
}

struct Context {
    data: BinaryDataset,
    sensitive: Option<SensitiveVector>,
    vocab: Vocabulary,
    holdout: Option<Holdout>,
    manifest: RunManifest,
}

struct LoadedData {
    train: BinaryDataset,
    sensitive: Option<SensitiveVector>,
    full: BinaryDataset,
    /// Row indices of the train and held-out parts, when split.
    split: Option<(Vec<usize>, Vec<usize>)>,
    full_sensitive: Option<SensitiveVector>,
}

fn load_data(args: &DataArgs) -> Result<LoadedData, CliError> {
    let (full, full_sensitive) =
        load_csv(&args.data, &args.label_col, args.sensitive_col.as_deref())?;
    match args.train_fraction {
        None => Ok(LoadedData {
            train: full.clone(),
            sensitive: full_sensitive.clone(),
            full,
            split: None,
            full_sensitive,
        }),
        Some(f) => {
            let s = full.split(f, args.seed)?;
            Ok(LoadedData {
                train: s.train,
                sensitive: full_sensitive.as_ref().map(|z| z.select(&s.train_indices)),
                full,
                split: Some((s.train_indices, s.test_indices)),
                full_sensitive,
            })
        }
    }
}

fn load_context(command: &str, data: &DataArgs, terms: &TermArgs) -> Result<Context, CliError> {
    let loaded = load_data(data)?;
    let (vocab, holdout_vocab, terms_input) = match (&terms.terms, terms.mine) {
        (Some(path), false) => {
            let full = load_terms_file(path, loaded.full.n_examples())?;
            let full = attach_structure(&full, &loaded.full);
            match &loaded.split {
                None => (full, None, Some(path.display().to_string())),
                Some((tr, te)) => (
                    full.select(tr),
                    Some(full.select(te)),
                    Some(path.display().to_string()),
                ),
            }
        }
        (None, true) => {
            let vocab = mine_terms(
                &loaded.train,
                terms.mining.max_conj,
                terms.mining.min_pos_coverage,
            )?;
            let holdout = match &loaded.split {
                None => None,
                Some((_, te)) => Some(vocab.recapture(&loaded.full.select(te))?),
            };
            (vocab, holdout, None)
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --terms or --mine is required".into(),
            ))
        }
    };
    let holdout = match (&loaded.split, holdout_vocab) {
        (Some((_, te)), Some(vocab)) => Some(Holdout {
            data: loaded.full.select(te),
            sensitive: loaded.full_sensitive.as_ref().map(|z| z.select(te)),
            vocab,
        }),
        _ => None,
    };
    let mut manifest = RunManifest::new(
        command,
        loaded.train.fingerprint(),
        loaded.train.n_examples(),
        vocab.len(),
    )
    .input("data", data.data.display());
    if let Some(t) = terms_input {
        manifest = manifest.input("terms", t);
    } else {
        manifest.parameters.max_conj = Some(terms.mining.max_conj);
        manifest.parameters.min_pos_coverage = Some(terms.mining.min_pos_coverage);
    }
    if data.train_fraction.is_some() {
        manifest.parameters.train_fraction = data.train_fraction;
        manifest.parameters.seed = Some(data.seed);
    }
    Ok(Context {
        data: loaded.train,
        sensitive: loaded.sensitive,
        vocab,
        holdout,
        manifest,
    })
}

fn timeout(secs: Option<f64>) -> Result<Option<Duration>, CliError> {
    secs.map(|s| {
        Duration::try_from_secs_f64(s).map_err(|_| CliError::Usage(format!("invalid timeout {s}")))
    })
    .transpose()
}

impl ModelArgs {
    fn regularizer(&self) -> Result<Regularizer, CliError> {
        Ok(Regularizer::new(self.lambda)?)
    }

    fn optimizer(&self) -> Result<OptimizerConfig, CliError> {
        let mut cfg = OptimizerConfig::new(self.max_len, self.regularizer()?);
        cfg.min_capture = self.min_capture;
        cfg.timeout = timeout(self.timeout_s)?;
        Ok(cfg)
    }

    fn record(&self, m: &mut RunManifest) {
        m.parameters.max_total_len = Some(self.max_len);
        m.parameters.lambda = Some(self.lambda);
        m.parameters.min_capture = Some(self.min_capture);
        m.parameters.timeout_s = self.timeout_s;
    }
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn cmd_mine(a: &MineArgs) -> Result<bool, CliError> {
    let loaded = load_data(&a.data)?;
    let vocab = mine_terms(&loaded.train, a.mining.max_conj, a.mining.min_pos_coverage)?;
    // The written captures cover every row of the input file so that the
    // file can be paired with the same CSV later.
    let vocab = if loaded.split.is_some() {
        vocab.recapture(&loaded.full)?
    } else {
        vocab
    };
    create_out(&a.out)?;
    let path = a.out.join("terms.txt");
    let file = File::create(&path).map_err(io_err(&path))?;
    vocab
        .write_terms(BufWriter::new(file))
        .map_err(io_err(&path))?;
    let mut manifest = RunManifest::new(
        "mine",
        loaded.full.fingerprint(),
        loaded.full.n_examples(),
        vocab.len(),
    )
    .input("data", a.data.data.display());
    manifest.parameters.max_conj = Some(a.mining.max_conj);
    manifest.parameters.min_pos_coverage = Some(a.mining.min_pos_coverage);
    if a.data.train_fraction.is_some() {
        manifest.parameters.train_fraction = a.data.train_fraction;
        manifest.parameters.seed = Some(a.data.seed);
    }
    write_json(&a.out.join("manifest.json"), &manifest)?;
    println!("{} terms written to {}", vocab.len(), path.display());
    Ok(true)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    manifest: &'a RunManifest,
    result: OptResultRecord,
}

fn cmd_fit(a: &FitArgs) -> Result<bool, CliError> {
    let mut ctx = load_context("fit", &a.data, &a.terms)?;
    a.model.record(&mut ctx.manifest);
    let reg = a.model.regularizer()?;
    let result = fit_optimal(&ctx.data, &ctx.vocab, &a.model.optimizer()?)?;
    create_out(&a.out)?;
    write_json(
        &a.out.join("fit.json"),
        &FitOutput {
            manifest: &ctx.manifest,
            result: result.to_record(&ctx.vocab, reg),
        },
    )?;
    println!(
        "{}\nrisk {:.6} objective {:.6}",
        result.best.display(&ctx.vocab),
        result.evaluation.risk(),
        result.best_objective
    );
    Ok(result.complete)
}

/// Reads a rule list from a JSON file: either a bare rule-list record, or an
/// object with one under `reference` or `result`.
pub fn read_reference(path: &Path, vocab: &Vocabulary) -> Result<RuleList, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let json_err = |source| CliError::Json {
        path: path.to_path_buf(),
        source,
    };
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    for key in ["reference", "result"] {
        if let Some(inner) = value.get_mut(key) {
            value = inner.take();
            break;
        }
    }
    let record: RuleListRecord = serde_json::from_value(value).map_err(json_err)?;
    Ok(RuleList::from_record(&record, vocab)?)
}

/// The reference model: read from `path`, or fit. `Ok(None)` when the fit
/// ran out of time.
fn reference_model(
    ctx: &Context,
    path: Option<&Path>,
    model: &ModelArgs,
) -> Result<Option<RuleList>, CliError> {
    match path {
        Some(p) => read_reference(p, &ctx.vocab).map(Some),
        None => {
            let r = fit_optimal(&ctx.data, &ctx.vocab, &model.optimizer()?)?;
            Ok(r.complete.then_some(r.best))
        }
    }
}

fn sorted_epsilons(eps: &[f64]) -> Result<Vec<f64>, CliError> {
    if let Some(bad) = eps
        .iter()
        .find(|e| !(e.is_finite() && (0.0..=1.0).contains(*e)))
    {
        return Err(CliError::Usage(format!(
            "tolerance {bad} is outside [0, 1]"
        )));
    }
    let mut v = eps.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

#[derive(Serialize)]
struct SolutionLine {
    #[serde(flatten)]
    rule_list: RuleListRecord,
    errors: u64,
    /// Smallest requested tolerance admitting the rule list.
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

#[derive(Serialize)]
struct ToleranceCount {
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_errors: Option<u64>,
    count: u64,
}

#[derive(Serialize)]
struct EnumerateOutput<'a> {
    manifest: &'a RunManifest,
    reference: Option<RuleListRecord>,
    threshold_errors: Option<u64>,
    tolerances: Vec<ToleranceCount>,
    stats: EnumStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_rss_bytes: Option<u64>,
}

/// Formats solutions as JSONL lines and assigns each to a tolerance bucket.
struct LineSink<'a> {
    vocab: &'a Vocabulary,
    reg: Regularizer,
    n: u64,
    buckets: &'a [(f64, Threshold)],
    counts: Vec<u64>,
    out: Vec<u8>,
    writer: Option<BufWriter<File>>,
}

impl LineSink<'_> {
    fn flush_buffer(&mut self) -> std::io::Result<()> {
        if let Some(w) = &mut self.writer {
            w.write_all(&self.out)?;
            self.out.clear();
        }
        Ok(())
    }
}

impl crate::enumerator::SolutionSink for LineSink<'_> {
    fn accept(&mut self, s: &Solution<'_>) -> Result<(), SinkError> {
        let len = s.len() as u64;
        let bucket = self
            .buckets
            .iter()
            .position(|(_, t)| t.admits(s.errors, len, self.n));
        if let Some(b) = bucket {
            self.counts[b] += 1;
        }
        let list = s.to_rule_list();
        let line = SolutionLine {
            rule_list: list.to_record(
                self.vocab,
                Evaluation {
                    errors: s.errors,
                    n: self.n,
                },
                self.reg,
            ),
            errors: s.errors,
            epsilon: bucket.map(|b| self.buckets[b].0),
        };
        serde_json::to_writer(&mut self.out, &line)?;
        self.out.push(b'\n');
        if self.out.len() >= 1 << 16 {
            self.flush_buffer()?;
        }
        Ok(())
    }
}

fn cmd_enumerate(a: &EnumerateArgs) -> Result<bool, CliError> {
    let mut ctx = load_context("enumerate", &a.data, &a.terms)?;
    a.model.record(&mut ctx.manifest);
    let epsilons = sorted_epsilons(&a.epsilons)?;
    if epsilons.is_empty() && a.max_errors.is_none() {
        return Err(CliError::Usage(
            "one of --epsilon or --max-errors is required".into(),
        ));
    }
    if a.objective && a.max_errors.is_some() {
        return Err(CliError::Usage(
            "--objective applies to --epsilon only".into(),
        ));
    }
    if a.sorted && a.threads > 1 {
        return Err(CliError::Usage("--sorted requires --threads 1".into()));
    }
    if a.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let m = &mut ctx.manifest.parameters;
    m.epsilons = epsilons.clone();
    m.max_errors = a.max_errors;
    m.prunings = Some(a.prune.prunings());
    m.threads = Some(a.threads);
    if let Some(r) = &a.reference {
        ctx.manifest = ctx.manifest.input("reference", r.display());
    }

    let reg = a.model.regularizer()?;
    let n = ctx.data.n_examples() as u64;
    create_out(&a.out)?;

    let reference = if a.max_errors.is_some() {
        None
    } else {
        match reference_model(&ctx, a.reference.as_deref(), &a.model)? {
            Some(r) => Some(r),
            None => {
                eprintln!("error: reference fit did not finish within the time budget");
                return Ok(false);
            }
        }
    };
    let (threshold, buckets) = match (&reference, a.max_errors) {
        (_, Some(e)) => (Threshold::Errors(e), Vec::new()),
        (Some(r), None) => {
            let ref_errors = misclassifications(r, &ctx.data, &ctx.vocab);
            let buckets = epsilons
                .iter()
                .map(|&e| {
                    let t = if a.objective {
                        let scaled = reg.scaled(ref_errors, r.len() as u64, n);
                        Threshold::objective_within(reg, scaled, e, n as usize)?
                    } else {
                        Threshold::Errors(threshold_from_errors(ref_errors, e, n)?)
                    };
                    Ok((e, t))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            (buckets.last().expect("non-empty").1, buckets)
        }
        (None, None) => unreachable!(),
    };

    let config = EnumConfig {
        max_total_len: a.model.max_len,
        threshold,
        min_capture: a.model.min_capture,
        prunings: a.prune.prunings(),
        emit_order: if a.sorted {
            EmitOrder::Sorted
        } else {
            EmitOrder::Dfs
        },
        timeout: timeout(a.model.timeout_s)?,
    };
    let path = a.out.join("solutions.jsonl");
    let file = File::create(&path).map_err(io_err(&path))?;
    memory::reset_peak();
    let make_sink = || LineSink {
        vocab: &ctx.vocab,
        reg,
        n,
        buckets: &buckets,
        counts: vec![0; buckets.len()],
        out: Vec::new(),
        writer: None,
    };
    let (stats, counts) = if a.threads == 1 {
        let mut sink = make_sink();
        sink.writer = Some(BufWriter::new(file));
        let stats = enumerate_rashomon(&ctx.data, &ctx.vocab, &config, &mut sink)?;
        sink.flush_buffer().map_err(io_err(&path))?;
        let mut w = sink.writer.take().expect("writer set");
        w.flush().map_err(io_err(&path))?;
        (stats, sink.counts)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.threads)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let (sinks, stats) = pool
            .install(|| enumerate_parallel(&ctx.data, &ctx.vocab, &config, a.threads, make_sink))?;
        let mut w = BufWriter::new(file);
        let mut counts = vec![0u64; buckets.len()];
        for s in &sinks {
            w.write_all(&s.out).map_err(io_err(&path))?;
            for (c, x) in counts.iter_mut().zip(&s.counts) {
                *c += x;
            }
        }
        w.flush().map_err(io_err(&path))?;
        (stats, counts)
    };
    let peak_rss_bytes = memory::peak_rss_bytes();

    let cumulative = counts.iter().scan(0u64, |acc, &c| {
        *acc += c;
        Some(*acc)
    });
    let tolerances = buckets
        .iter()
        .zip(cumulative)
        .map(|((e, t), count)| ToleranceCount {
            epsilon: *e,
            max_errors: match t {
                Threshold::Errors(m) => Some(*m),
                Threshold::Objective { .. } => None,
            },
            count,
        })
        .collect::<Vec<_>>();
    for t in &tolerances {
        println!("epsilon {}: {} rule lists", t.epsilon, t.count);
    }
    println!(
        "{} solutions, {} candidates, {:.1} ms",
        stats.solutions,
        stats.candidates_visited,
        stats.elapsed.as_secs_f64() * 1e3
    );
    let complete = stats.complete;
    write_json(
        &a.out.join("stats.json"),
        &EnumerateOutput {
            manifest: &ctx.manifest,
            reference: reference.as_ref().map(|r| {
                r.to_record(
                    &ctx.vocab,
                    crate::rulelist::evaluate(r, &ctx.data, &ctx.vocab),
                    reg,
                )
            }),
            threshold_errors: match threshold {
                Threshold::Errors(m) => Some(m),
                Threshold::Objective { .. } => None,
            },
            tolerances,
            stats,
            peak_rss_bytes,
        },
    )?;
    Ok(complete)
}

#[derive(Serialize)]
struct TopkOutput<'a> {
    manifest: &'a RunManifest,
    complete: bool,
    stats: TopKStats,
    answers: Vec<AnswerRecord>,
}

fn cmd_topk(a: &TopkArgs) -> Result<bool, CliError> {
    let mut ctx = load_context("topk", &a.data, &a.terms)?;
    a.model.record(&mut ctx.manifest);
    ctx.manifest.parameters.k = Some(a.k);
    let branching: Branching = a.branching.into();
    ctx.manifest.parameters.branching = Some(branching_name(branching));
    let reg = a.model.regularizer()?;
    let mut cfg = TopKConfig::new(a.k, a.model.max_len, reg);
    cfg.optimizer = a.model.optimizer()?;
    cfg.optimizer.timeout = None;
    cfg.branching = branching;
    cfg.timeout = timeout(a.model.timeout_s)?;
    let result = topk(&ctx.data, &ctx.vocab, &cfg)?;
    create_out(&a.out)?;
    let answers = result.answer_records(&ctx.vocab, reg, ctx.data.n_examples() as u64);
    for (ans, rec) in result.answers.iter().zip(&answers) {
        println!(
            "{:>4}  {:.6}  {}",
            rec.rank,
            ans.objective,
            ans.rule_list.display(&ctx.vocab)
        );
    }
    write_json(
        &a.out.join("topk.json"),
        &TopkOutput {
            manifest: &ctx.manifest,
            complete: result.complete,
            stats: result.stats.clone(),
            answers,
        },
    )?;
    Ok(result.complete)
}

fn branching_name(b: Branching) -> String {
    match b {
        Branching::Partition => "partition".into(),
        Branching::TermRemoval => "term_removal".into(),
    }
}

#[derive(Serialize)]
struct EnumeratorSummary {
    complete: bool,
    elapsed_ms: f64,
    models: u64,
    term_sets: usize,
    candidates_visited: u64,
    peak_live_bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_rss_bytes: Option<u64>,
}

#[derive(Serialize)]
struct LawlerSummary {
    complete: bool,
    elapsed_ms: f64,
    models: usize,
    pops: u64,
    refits: u64,
    peak_seen_sets: usize,
    seen_sets_bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_rss_bytes: Option<u64>,
}

#[derive(Serialize)]
struct Agreement {
    /// Length of the shorter of the two ranked series.
    shared_prefix: usize,
    /// Whether the objective values agree over the shared prefix.
    agree: bool,
    /// First rank (1-based) at which they differ.
    #[serde(skip_serializing_if = "Option::is_none")]
    first_difference: Option<usize>,
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    manifest: &'a RunManifest,
    enumerator: EnumeratorSummary,
    lawler: LawlerSummary,
    agreement: Agreement,
}

fn cmd_compare(a: &CompareArgs) -> Result<bool, CliError> {
    let mut ctx = load_context("compare", &a.data, &a.terms)?;
    a.model.record(&mut ctx.manifest);
    ctx.manifest.parameters.k = Some(a.k);
    let branching: Branching = a.branching.into();
    ctx.manifest.parameters.branching = Some(branching_name(branching));
    if let Some(e) = a.epsilon {
        ctx.manifest.parameters.epsilons = vec![e];
    }
    let reg = a.model.regularizer()?;
    let budget = timeout(a.model.timeout_s)?;
    let n = ctx.data.n_examples() as u64;
    let unit = n as f64 * reg.unit() as f64;

    // Enumerator.
    let threshold = match a.epsilon {
        None => Threshold::unbounded(ctx.data.n_examples()),
        Some(e) => {
            let mut cfg = a.model.optimizer()?;
            cfg.timeout = None;
            let best = fit_optimal(&ctx.data, &ctx.vocab, &cfg)?;
            Threshold::objective_within(reg, best.best_scaled, e, ctx.data.n_examples())?
        }
    };
    let mut config = EnumConfig::new(a.model.max_len, threshold);
    config.min_capture = a.model.min_capture;
    config.timeout = budget;
    let mut all: Vec<u128> = Vec::new();
    let mut grouped: HashMap<Vec<TermId>, u128> = HashMap::new();
    memory::reset_peak();
    let enum_stats = {
        let mut sink = |s: &Solution<'_>| -> Result<(), SinkError> {
            let score = reg.scaled(s.errors, s.len() as u64, n);
            all.push(score);
            let key = crate::enumerator::term_set(s.rules);
            grouped
                .entry(key)
                .and_modify(|v| *v = (*v).min(score))
                .or_insert(score);
            Ok(())
        };
        enumerate_rashomon(&ctx.data, &ctx.vocab, &config, &mut sink)?
    };
    let enum_rss = memory::peak_rss_bytes();
    all.sort_unstable();
    let mut grouped: Vec<u128> = grouped.into_values().collect();
    grouped.sort_unstable();

    // Lawler.
    memory::reset_peak();
    let mut cfg = TopKConfig::new(a.k, a.model.max_len, reg);
    cfg.optimizer.min_capture = a.model.min_capture;
    cfg.branching = branching;
    cfg.timeout = budget;
    let lawler = topk(&ctx.data, &ctx.vocab, &cfg)?;
    let lawler_rss = memory::peak_rss_bytes();
    let lawler_scores: Vec<u128> = lawler.answers.iter().map(|x| x.score).collect();

    let shared = lawler_scores.len().min(grouped.len());
    let first_difference = (0..shared)
        .find(|&i| lawler_scores[i] != grouped[i])
        .map(|i| i + 1);

    create_out(&a.out)?;
    let path = a.out.join("rank_objective.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Dataset(e.into()))?;
    let csv_err = |e: csv::Error| CliError::Dataset(e.into());
    w.write_record(["rank", "objective", "method"])
        .map_err(csv_err)?;
    for (method, series) in [
        ("enumerator", &all),
        ("enumerator_grouped", &grouped),
        ("lawler", &lawler_scores),
    ] {
        for (i, s) in series.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                (*s as f64 / unit).to_string(),
                method.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let out = CompareOutput {
        manifest: &ctx.manifest,
        enumerator: EnumeratorSummary {
            complete: enum_stats.complete,
            elapsed_ms: enum_stats.elapsed.as_secs_f64() * 1e3,
            models: enum_stats.solutions,
            term_sets: grouped.len(),
            candidates_visited: enum_stats.candidates_visited,
            peak_live_bytes: enum_stats.peak_live_bytes,
            peak_rss_bytes: enum_rss,
        },
        lawler: LawlerSummary {
            complete: lawler.complete,
            elapsed_ms: lawler.stats.elapsed.as_secs_f64() * 1e3,
            models: lawler.answers.len(),
            pops: lawler.stats.pops,
            refits: lawler.stats.refits,
            peak_seen_sets: lawler.stats.peak_seen_sets,
            seen_sets_bytes: lawler.stats.seen_sets_bytes,
            peak_rss_bytes: lawler_rss,
        },
        agreement: Agreement {
            shared_prefix: shared,
            agree: first_difference.is_none(),
            first_difference,
        },
    };
    println!(
        "enumerator: {} models ({} term sets) in {:.1} ms{}",
        out.enumerator.models,
        out.enumerator.term_sets,
        out.enumerator.elapsed_ms,
        if out.enumerator.complete {
            ""
        } else {
            " (incomplete)"
        }
    );
    println!(
        "lawler: {} models in {:.1} ms{}",
        out.lawler.models,
        out.lawler.elapsed_ms,
        if out.lawler.complete {
            ""
        } else {
            " (incomplete)"
        }
    );
    println!(
        "objective series agree on the first {} ranks: {}",
        shared, out.agreement.agree
    );
    write_json(&a.out.join("compare.json"), &out)?;
    // Budget exhaustion is part of what is being compared, not a failure.
    Ok(true)
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    manifest: &'a RunManifest,
    reference: RuleListRecord,
    eval_split: EvalSplit,
    n_eval: usize,
    reports: Vec<MetricsReport>,
    warnings: Vec<String>,
}

struct Bucket {
    epsilon: f64,
    multiplicity: MultiplicityAccumulator,
    dp: Option<UnfairnessAccumulator>,
    eo: Option<UnfairnessAccumulator>,
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<bool, CliError> {
    if a.fairness && a.data.sensitive_col.is_none() {
        return Err(CliError::Usage(
            "--fairness requires --sensitive-col".into(),
        ));
    }
    let mut ctx = load_context("analyze", &a.data, &a.terms)?;
    a.model.record(&mut ctx.manifest);
    let epsilons = sorted_epsilons(&a.epsilons)?;
    ctx.manifest.parameters.epsilons = epsilons.clone();
    ctx.manifest = ctx.manifest.input("solutions", a.solutions.display());
    if let Some(r) = &a.reference {
        ctx.manifest = ctx.manifest.input("reference", r.display());
    }
    let reg = a.model.regularizer()?;
    let n = ctx.data.n_examples() as u64;
    let Some(reference) = reference_model(&ctx, a.reference.as_deref(), &a.model)? else {
        eprintln!("error: reference fit did not finish within the time budget");
        return Ok(false);
    };
    let ref_errors = misclassifications(&reference, &ctx.data, &ctx.vocab);
    let thresholds = epsilons
        .iter()
        .map(|&e| threshold_from_errors(ref_errors, e, n))
        .collect::<Result<Vec<_>, _>>()?;

    let (eval_data, eval_sensitive, eval_vocab) = match a.eval_split {
        EvalSplit::Train => (&ctx.data, ctx.sensitive.as_ref(), &ctx.vocab),
        EvalSplit::Test => match &ctx.holdout {
            Some(h) => (&h.data, h.sensitive.as_ref(), &h.vocab),
            None => {
                return Err(CliError::Usage(
                    "--eval-split test requires --train-fraction below 1".into(),
                ))
            }
        },
    };
    if eval_data.n_examples() == 0 {
        return Err(CliError::Usage(
            "the evaluation split has no examples".into(),
        ));
    }
    let labels = eval_data.labels();
    let mut warnings = Vec::new();
    let mut dp_ok = a.fairness;
    let mut eo_ok = a.fairness;
    let ref_pred = prediction_vector(&reference, eval_vocab);
    if let Some(z) = eval_sensitive.filter(|_| a.fairness) {
        if let Err(e) = Criterion::DemographicParity.score(&ref_pred, z, labels) {
            warnings.push(format!("DP not reported: {e}"));
            dp_ok = false;
        }
        if let Err(e) = Criterion::EqualOpportunity.score(&ref_pred, z, labels) {
            warnings.push(format!("EO not reported: {e}"));
            eo_ok = false;
        }
    }
    let mut buckets: Vec<Bucket> = epsilons
        .iter()
        .map(|&epsilon| Bucket {
            epsilon,
            multiplicity: MultiplicityAccumulator::new(&ref_pred),
            dp: dp_ok.then(|| UnfairnessAccumulator::new(Criterion::DemographicParity)),
            eo: eo_ok.then(|| UnfairnessAccumulator::new(Criterion::EqualOpportunity)),
        })
        .collect();

    create_out(&a.out)?;
    let per_model_path = a.out.join("per_model.csv");
    let csv_err = |e: csv::Error| CliError::Dataset(e.into());
    let mut per_model = csv::Writer::from_path(&per_model_path).map_err(csv_err)?;
    per_model
        .write_record([
            "min_epsilon",
            "errors",
            "risk",
            "distance",
            "dp",
            "eo",
            "rule_list",
        ])
        .map_err(csv_err)?;

    let mut add = |list: &RuleList, buckets: &mut [Bucket]| -> Result<(), CliError> {
        let errors = misclassifications(list, &ctx.data, &ctx.vocab);
        let Some(first) = thresholds.iter().position(|&t| errors <= t) else {
            return Ok(());
        };
        let p = prediction_vector(list, eval_vocab);
        let distance = p.0.count_xor(&ref_pred.0) as f64 / eval_data.n_examples() as f64;
        let z = eval_sensitive.filter(|_| a.fairness);
        let dp = match z.filter(|_| dp_ok) {
            Some(z) => Some(Criterion::DemographicParity.score(&p, z, labels)?),
            None => None,
        };
        let eo = match z.filter(|_| eo_ok) {
            Some(z) => Some(Criterion::EqualOpportunity.score(&p, z, labels)?),
            None => None,
        };
        for b in &mut buckets[first..] {
            b.multiplicity.add(&p)?;
            if let (Some(acc), Some(s)) = (&mut b.dp, dp) {
                acc.add_score(s);
            }
            if let (Some(acc), Some(s)) = (&mut b.eo, eo) {
                acc.add_score(s);
            }
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        per_model
            .write_record([
                epsilons[first].to_string(),
                errors.to_string(),
                (errors as f64 / n as f64).to_string(),
                distance.to_string(),
                opt(dp),
                opt(eo),
                list.display(&ctx.vocab).to_string(),
            ])
            .map_err(csv_err)?;
        Ok(())
    };

    add(&reference, &mut buckets)?;
    let file = File::open(&a.solutions).map_err(io_err(&a.solutions))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&a.solutions))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RuleListRecord =
            serde_json::from_str(&line).map_err(|source| CliError::Json {
                path: a.solutions.clone(),
                source,
            })?;
        let list = RuleList::from_record(&record, &ctx.vocab)
            .map_err(|e| CliError::Usage(format!("{}:{}: {e}", a.solutions.display(), i + 1)))?;
        if list != reference {
            add(&list, &mut buckets)?;
        }
    }
    per_model.flush().map_err(io_err(&per_model_path))?;

    let mut reports = Vec::new();
    for b in &buckets {
        let range =
            |acc: &Option<UnfairnessAccumulator>| -> Result<Option<[f64; 2]>, MetricsError> {
                Ok(match acc {
                    Some(acc) => {
                        let r = acc.finish()?;
                        Some([r.lo, r.hi])
                    }
                    None => None,
                })
            };
        reports.push(MetricsReport {
            epsilon: b.epsilon,
            n_models: b.multiplicity.n_models(),
            ambiguity: b.multiplicity.ambiguity()?,
            discrepancy: b.multiplicity.discrepancy()?,
            dp_range: range(&b.dp)?,
            eo_range: range(&b.eo)?,
        });
    }

    let path = a.out.join("metrics.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["epsilon", "metric", "value"])
        .map_err(csv_err)?;
    for r in &reports {
        let mut rows = vec![
            ("n_models", r.n_models as f64),
            ("ambiguity", r.ambiguity),
            ("discrepancy", r.discrepancy),
        ];
        if let Some([lo, hi]) = r.dp_range {
            rows.extend([("dp_min", lo), ("dp_max", hi)]);
        }
        if let Some([lo, hi]) = r.eo_range {
            rows.extend([("eo_min", lo), ("eo_max", hi)]);
        }
        for (metric, value) in rows {
            w.write_record([r.epsilon.to_string(), metric.to_string(), value.to_string()])
                .map_err(csv_err)?;
        }
        println!(
            "epsilon {}: {} models, ambiguity {:.4}, discrepancy {:.4}",
            r.epsilon, r.n_models, r.ambiguity, r.discrepancy
        );
    }
    w.flush().map_err(io_err(&path))?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    write_json(
        &a.out.join("metrics.json"),
        &AnalyzeOutput {
            manifest: &ctx.manifest,
            reference: reference.to_record(
                &ctx.vocab,
                Evaluation {
                    errors: ref_errors,
                    n,
                },
                reg,
            ),
            eval_split: a.eval_split,
            n_eval: eval_data.n_examples(),
            reports,
            warnings,
        },
    )?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_repeatable_epsilons() {
        let cli = Cli::try_parse_from([
            "rashomon",
            "enumerate",
            "--data",
            "d.csv",
            "--label-col",
            "y",
            "--mine",
            "--epsilon",
            "0.05",
            "--epsilon",
            "0.01",
            "--out",
            "o",
        ])
        .unwrap();
        let Command::Enumerate(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.epsilons, vec![0.05, 0.01]);
        assert_eq!(sorted_epsilons(&a.epsilons).unwrap(), vec![0.01, 0.05]);
        assert!(a.prune.prunings().symmetry);
    }

    #[test]
    fn missing_flag_is_usage_error() {
        assert_eq!(run(["rashomon", "fit", "--data", "x.csv"]), 2);
        assert_eq!(run(["rashomon", "--version"]), 0);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Dataset(DatasetError::EmptyDataset).exit_code(), 3);
        assert_eq!(
            CliError::Vocabulary(VocabularyError::InvalidCoverage(1.5)).exit_code(),
            2
        );
    }
}
