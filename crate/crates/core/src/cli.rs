//! Command-line surface of the `multievent` binary.
//!
//! Every command reads its settings from an optional TOML run config (one
//! section per stage), applies flag overrides, and writes its artifacts into
//! `--out-dir` together with two bookkeeping files:
//!
//! - `config.toml`: the resolved settings; passing it back with `--config`
//!   and the same inputs reproduces the artifacts byte-for-byte;
//! - `summary.json`: argv, timestamps, counts and any per-item failures.
//!
//! Backends are named by short specs:
//!
//! | kind | specs |
//! |---|---|
//! | seq2seq | `reference`, `tiny:<model or run dir>`, `fixture:<jsonl>` |
//! | oie | `heuristic`, `replay:<jsonl>` |
//! | embedder | `hashing`, `hashing:<dim>` |
//! | nli | `lexical`, `table:<jsonl>` |
//!
//! `reference` is the toy pretrained model, cached under
//! `$MULTIEVENT_CACHE_DIR`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{dataset_stats, ingest, split_dataset, stats_json, ContextEvents, CorpusDoc, SplitConfig};
use crate::error::{Error, Result};
use crate::evalkit::human::{load_ratings, sample_events, write_hit_csv, write_key_csv};
use crate::evalkit::report::EvalGroup;
use crate::evalkit::{
    diversity_projection, evaluate_model, evaluate_references, export_human_eval, group_records, score_human_eval,
    write_plot_csv, EvalReport, HumanEvalItem, TsneConfig,
};
use crate::modelkit::{
    batch_generate, fine_tune, generate, Beam, EmbeddingBackend, FixtureSeq2Seq, GenerationConfig, HashingEmbedder,
    LexicalNli, NliBackend, RunDir, Seq2SeqBackend, TableNli, TinySeq2Seq, TrainConfig,
};
use crate::schema::{read_jsonl, write_jsonl, ContextSentence, EventMention, RecordLine, RecordSet, RelationType};
use crate::seqio::{serialize_prompt, serialize_records, special_tokens};
use crate::silverlab::{build_silver_dataset, SilverBackends, SilverConfig, Strategy};
use crate::splitter::{HeuristicOie, OieBackend, ReplayOie};
use crate::tagging::RuleTagger;
use crate::text::stage_seed;
use crate::toydata::{held_out_sentence, reference_model};

#[derive(Debug, Parser)]
#[command(name = "multievent", version, about = "Commonsense inference for events in multi-event sentences")]
pub struct Cli {
    /// TOML run config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select multi-event sentences from a corpus and extract their events.
    Ingest(IngestArgs),
    /// Split records into disjoint train/dev/test files with statistics.
    SplitData(SplitArgs),
    /// Build silver-standard records for ingested contexts.
    Silver(SilverArgs),
    /// Serialize records as target-marked training pairs.
    Format(FormatArgs),
    /// Fine-tune a seq2seq backend on records.
    Train(TrainArgs),
    /// Generate inferences for prompts, one per line.
    Generate(GenerateArgs),
    /// Score models against references.
    Eval(EvalArgs),
    /// Project per-event generations and measure their separation.
    Analyze(AnalyzeArgs),
    /// Export blinded human-evaluation sheets.
    ExportHit(ExportHitArgs),
    /// Aggregate rated human-evaluation sheets.
    ScoreHit(ScoreHitArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus JSONL, one document per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub top_k_topics: Option<usize>,
    #[arg(long)]
    pub min_events: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Records JSONL.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Train, dev and test fractions, e.g. `0.6,0.1,0.3`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SilverArgs {
    /// Output of `ingest`.
    #[arg(long)]
    pub contexts: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seq2seq: Option<String>,
    #[arg(long)]
    pub oie: Option<String>,
    #[arg(long)]
    pub nli: Option<String>,
}

#[derive(Debug, Args)]
pub struct FormatArgs {
    /// Records JSONL.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training records JSONL.
    #[arg(long)]
    pub train: PathBuf,
    /// Run directory to create.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Initial model spec.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Text file with one prompt per line.
    #[arg(long)]
    pub prompts: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub beam_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Test records JSONL.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `label=spec` or `spec`; repeatable.
    #[arg(long)]
    pub model: Vec<String>,
    /// Score the references against themselves instead of a model.
    #[arg(long)]
    pub references_as_generations: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `label=spec` or `spec`; repeatable.
    #[arg(long)]
    pub model: Vec<String>,
    /// Context sentence; defaults to the built-in three-event example.
    #[arg(long, requires = "event")]
    pub sentence: Option<String>,
    /// Event surface inside `--sentence`; repeatable.
    #[arg(long)]
    pub event: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ExportHitArgs {
    /// Test records JSONL; events are sampled from it.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `label=spec` or `spec`; repeatable.
    #[arg(long)]
    pub model: Vec<String>,
    #[arg(long)]
    pub events: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreHitArgs {
    /// Rated sheet: one row per rater and item.
    #[arg(long)]
    pub rated: PathBuf,
    #[arg(long)]
    pub key: PathBuf,
    /// The exported sheet.
    #[arg(long)]
    pub hits: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub seq2seq: String,
    pub oie: String,
    pub embedder: String,
    pub nli: String,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            seq2seq: "reference".into(),
            oie: "heuristic".into(),
            embedder: "hashing".into(),
            nli: "lexical".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub top_k_topics: usize,
    pub min_events: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { top_k_topics: 10, min_events: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub embed: bool,
    pub per_relation: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { embed: true, per_relation: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanConfig {
    /// Events sampled for rating.
    pub events: usize,
    pub seed: u64,
}

impl Default for HumanConfig {
    fn default() -> Self {
        HumanConfig { events: 50, seed: 0 }
    }
}

/// All settings of a run, one section per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub backends: BackendConfig,
    pub ingest: IngestConfig,
    pub split: SplitConfig,
    pub silver: SilverConfig,
    pub train: TrainConfig,
    pub generation: GenerationConfig,
    pub eval: EvalConfig,
    pub analyze: TsneConfig,
    pub human: HumanConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            backends: BackendConfig::default(),
            ingest: IngestConfig::default(),
            split: SplitConfig::default(),
            silver: SilverConfig::default(),
            train: TrainConfig::default(),
            generation: GenerationConfig::default(),
            eval: EvalConfig::default(),
            analyze: TsneConfig::default(),
            human: HumanConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Overwrites every stage seed with one derived from the global seed.
    pub fn derive_seeds(&mut self) {
        self.split.seed = stage_seed(self.seed, "split");
        self.train.seed = stage_seed(self.seed, "train");
        self.analyze.seed = stage_seed(self.seed, "analyze");
        self.human.seed = stage_seed(self.seed, "human");
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::data(format!("config does not serialize: {e}")))
    }
}

/// Parses argv, runs the command and maps the outcome to an exit code:
/// 0 on success, 1 on a runtime failure, 2 on a configuration error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(format!("input file {} does not exist", path.display())))
    }
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))
}

/// Runs a parsed command.
pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    let started = now();
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.derive_seeds();
    let (name, out_dir, details) = match cli.command {
        Command::Ingest(a) => ("ingest", a.out_dir.clone(), cmd_ingest(&a, &mut config)?),
        Command::SplitData(a) => ("split-data", a.out_dir.clone(), cmd_split(&a, &mut config)?),
        Command::Silver(a) => ("silver", a.out_dir.clone(), cmd_silver(&a, &mut config)?),
        Command::Format(a) => ("format", a.out_dir.clone(), cmd_format(&a)?),
        Command::Train(a) => ("train", a.out_dir.clone(), cmd_train(&a, &mut config)?),
        Command::Generate(a) => ("generate", a.out_dir.clone(), cmd_generate(&a, &mut config)?),
        Command::Eval(a) => ("eval", a.out_dir.clone(), cmd_eval(&a, &config)?),
        Command::Analyze(a) => ("analyze", a.out_dir.clone(), cmd_analyze(&a, &config)?),
        Command::ExportHit(a) => ("export-hit", a.out_dir.clone(), cmd_export_hit(&a, &mut config)?),
        Command::ScoreHit(a) => ("score-hit", a.out_dir.clone(), cmd_score_hit(&a)?),
    };
    fs::write(out_dir.join("config.toml"), config.to_toml()?)?;
    let summary = json!({
        "command": name,
        "argv": argv,
        "started_unix": started,
        "finished_unix": now(),
        "details": details,
    });
    fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    info!("{name}: wrote {}", out_dir.display());
    Ok(())
}

/// Builds a seq2seq backend from its spec.
pub fn load_seq2seq(spec: &str) -> Result<Box<dyn Seq2SeqBackend>> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "reference" => Ok(Box::new(reference_model()?)),
        "tiny" => {
            let dir = Path::new(arg);
            let model_dir = if dir.join("model").is_dir() { dir.join("model") } else { dir.to_path_buf() };
            if !model_dir.is_dir() {
                return Err(Error::config(format!("model directory {arg} does not exist")));
            }
            Ok(Box::new(TinySeq2Seq::load(&model_dir)?))
        }
        "fixture" => {
            let path = Path::new(arg);
            require_file(path)?;
            let mut backend = FixtureSeq2Seq::new();
            for line in read_jsonl::<FixtureLine>(path)? {
                backend = match line.error {
                    Some(msg) => backend.with_failure(line.prompt, &msg),
                    None => {
                        let texts: Vec<&str> = line.generations.iter().map(String::as_str).collect();
                        backend.with(line.prompt, &texts)
                    }
                };
            }
            Ok(Box::new(backend))
        }
        _ => Err(Error::config(format!("unknown seq2seq backend {spec:?}"))),
    }
}

/// One line of a `fixture:` seq2seq file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureLine {
    pub prompt: String,
    #[serde(default)]
    pub generations: Vec<String>,
    #[serde(default)]
    pub error: Option<String>,
}

pub fn load_oie(spec: &str) -> Result<Box<dyn OieBackend>> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "heuristic" => Ok(Box::new(HeuristicOie::default())),
        "replay" => {
            require_file(Path::new(arg))?;
            Ok(Box::new(ReplayOie::load(Path::new(arg))?))
        }
        _ => Err(Error::config(format!("unknown OIE backend {spec:?}"))),
    }
}

pub fn load_embedder(spec: &str) -> Result<Box<dyn EmbeddingBackend>> {
    match spec.split_once(':') {
        None if spec == "hashing" => Ok(Box::new(HashingEmbedder::default())),
        Some(("hashing", dim)) => {
            let dim: usize = dim.parse().map_err(|_| Error::config(format!("bad embedding dimension {dim:?}")))?;
            if dim == 0 {
                return Err(Error::config("embedding dimension must be positive"));
            }
            Ok(Box::new(HashingEmbedder::new(dim)))
        }
        _ => Err(Error::config(format!("unknown embedding backend {spec:?}"))),
    }
}

pub fn load_nli(spec: &str) -> Result<Box<dyn NliBackend>> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "lexical" => Ok(Box::new(LexicalNli)),
        "table" => {
            require_file(Path::new(arg))?;
            Ok(Box::new(TableNli::load(Path::new(arg))?))
        }
        _ => Err(Error::config(format!("unknown NLI backend {spec:?}"))),
    }
}

/// Splits `label=spec`; a bare spec is its own label.
fn labelled(arg: &str) -> (String, String) {
    match arg.split_once('=') {
        Some((label, spec)) if !label.contains(':') => (label.to_string(), spec.to_string()),
        _ => (arg.to_string(), arg.to_string()),
    }
}

fn models_or_default(args: &[String], config: &RunConfig) -> Vec<(String, String)> {
    if args.is_empty() {
        vec![labelled(&config.backends.seq2seq)]
    } else {
        args.iter().map(|a| labelled(a)).collect()
    }
}

fn load_records(path: &Path) -> Result<RecordSet> {
    require_file(path)?;
    RecordSet::load(path)
}

fn cmd_ingest(a: &IngestArgs, config: &mut RunConfig) -> Result<serde_json::Value> {
    require_file(&a.corpus)?;
    if let Some(k) = a.top_k_topics {
        config.ingest.top_k_topics = k;
    }
    if let Some(m) = a.min_events {
        config.ingest.min_events = m;
    }
    prepare_out_dir(&a.out_dir)?;
    let docs: Vec<CorpusDoc> = read_jsonl(&a.corpus)?;
    let selected = ingest(&docs, config.ingest.top_k_topics, config.ingest.min_events, &RuleTagger)?;
    write_jsonl(&a.out_dir.join("contexts.jsonl"), &selected)?;
    let events: usize = selected.iter().map(|c| c.events.len()).sum();
    Ok(json!({ "documents": docs.len(), "contexts": selected.len(), "events": events }))
}

fn cmd_split(a: &SplitArgs, config: &mut RunConfig) -> Result<serde_json::Value> {
    if let Some(r) = &a.ratios {
        config.split.ratios = [r[0], r[1], r[2]];
    }
    config.split.validate()?;
    let set = load_records(&a.input)?;
    prepare_out_dir(&a.out_dir)?;
    let splits = split_dataset(&set.records, &config.split)?;
    for s in &splits {
        let lines: Vec<RecordLine> =
            s.records.iter().map(|r| RecordLine::new(r, &set.contexts[&r.context_id].text)).collect();
        write_jsonl(&a.out_dir.join(format!("{}.jsonl", s.name.as_str())), &lines)?;
    }
    let stats = stats_json(&dataset_stats(&splits));
    fs::write(a.out_dir.join("stats.json"), serde_json::to_string_pretty(&stats)? + "\n")?;
    Ok(stats)
}

fn cmd_silver(a: &SilverArgs, config: &mut RunConfig) -> Result<serde_json::Value> {
    if let Some(s) = a.strategy {
        config.silver.strategy = s;
    }
    if let Some(t) = a.threshold {
        config.silver.overlap_threshold = t;
    }
    for (flag, slot) in [
        (&a.seq2seq, &mut config.backends.seq2seq),
        (&a.oie, &mut config.backends.oie),
        (&a.nli, &mut config.backends.nli),
    ] {
        if let Some(v) = flag {
            *slot = v.clone();
        }
    }
    config.silver.validate()?;
    require_file(&a.contexts)?;
    let strategy = config.silver.strategy;
    let seq2seq = load_seq2seq(&config.backends.seq2seq)?;
    let oie = load_oie(&config.backends.oie)?;
    let embedder = match strategy {
        Strategy::Overlap => Some(load_embedder(&config.backends.embedder)?),
        _ => None,
    };
    let nli = match strategy {
        Strategy::Nli => Some(load_nli(&config.backends.nli)?),
        _ => None,
    };
    prepare_out_dir(&a.out_dir)?;
    let input: Vec<ContextEvents> = read_jsonl(&a.contexts)?;
    let pairs: Vec<(ContextSentence, Vec<EventMention>)> = input.into_iter().map(|c| (c.context, c.events)).collect();
    let backends = SilverBackends {
        seq2seq: Some(seq2seq.as_ref()),
        oie: Some(oie.as_ref()),
        embedder: embedder.as_deref(),
        nli: nli.as_deref(),
    };
    let out = build_silver_dataset(&pairs, &config.silver, backends)?;
    let texts: BTreeMap<&str, &str> = pairs.iter().map(|(c, _)| (c.id.as_str(), c.text.as_str())).collect();
    let lines: Vec<RecordLine> =
        out.records.iter().map(|r| RecordLine::new(r, texts[r.context_id.as_str()])).collect();
    write_jsonl(&a.out_dir.join("silver.jsonl"), &lines)?;
    write_jsonl(&a.out_dir.join("audit.jsonl"), &out.audit)?;
    let unaligned: Vec<_> = out.unaligned_events.iter().map(|e| json!([e.context_id, e.span, e.surface])).collect();
    Ok(json!({
        "strategy": strategy,
        "contexts": pairs.len(),
        "records": out.records.len(),
        "audited": out.audit.len(),
        "unaligned_events": unaligned,
    }))
}

fn cmd_format(a: &FormatArgs) -> Result<serde_json::Value> {
    let set = load_records(&a.input)?;
    prepare_out_dir(&a.out_dir)?;
    let examples = serialize_records(&set.records, &set.contexts)?;
    write_jsonl(&a.out_dir.join("examples.jsonl"), &examples)?;
    Ok(json!({ "examples": examples.len(), "special_tokens": special_tokens() }))
}

fn cmd_train(a: &TrainArgs, config: &mut RunConfig) -> Result<serde_json::Value> {
    if let Some(init) = &a.init {
        config.backends.seq2seq = init.clone();
    }
    if let Some(e) = a.epochs {
        config.train.epochs = e;
    }
    if let Some(b) = a.batch_size {
        config.train.batch_size = b;
    }
    if let Some(lr) = a.lr {
        config.train.learning_rate = lr;
    }
    config.train.validate()?;
    let set = load_records(&a.train)?;
    let examples = serialize_records(&set.records, &set.contexts)?;
    let mut backend = load_seq2seq(&config.backends.seq2seq)?;
    let run_dir = RunDir::create(&a.out_dir).map_err(|e| Error::config(format!("{}: {e}", a.out_dir.display())))?;
    let report = fine_tune(backend.as_mut(), &examples, &config.train)?;
    run_dir.persist(&config.train, &report, backend.as_ref())?;
    Ok(json!({ "examples": examples.len(), "epoch_losses": report.epoch_losses, "steps": report.steps.len() }))
}

#[derive(Debug, Serialize)]
struct GenerationLine<'a> {
    prompt: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    beams: Option<&'a [Beam]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_generate(a: &GenerateArgs, config: &mut RunConfig) -> Result<serde_json::Value> {
    if let Some(m) = &a.model {
        config.backends.seq2seq = m.clone();
    }
    if let Some(b) = a.beam_size {
        config.generation.beam_size = b;
        config.generation.num_return = config.generation.num_return.min(b);
    }
    config.generation.validate()?;
    require_file(&a.prompts)?;
    let prompts: Vec<String> = fs::read_to_string(&a.prompts)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    let backend = load_seq2seq(&config.backends.seq2seq)?;
    prepare_out_dir(&a.out_dir)?;
    let outputs = batch_generate(backend.as_ref(), &prompts, &config.generation, &|_, _| {});
    let mut failures = Vec::new();
    let mut lines = Vec::with_capacity(prompts.len());
    for p in &prompts {
        match &outputs[p] {
            Ok(beams) => lines.push(GenerationLine { prompt: p, beams: Some(beams), error: None }),
            Err(e) => {
                warn!("generation failed for {p:?}: {e}");
                failures.push(json!({ "prompt": p, "error": e.to_string() }));
                lines.push(GenerationLine { prompt: p, beams: None, error: Some(e.to_string()) });
            }
        }
    }
    write_jsonl(&a.out_dir.join("generations.jsonl"), &lines)?;
    Ok(json!({ "prompts": prompts.len(), "failures": failures }))
}

fn cmd_eval(a: &EvalArgs, config: &RunConfig) -> Result<serde_json::Value> {
    config.generation.validate()?;
    let set = load_records(&a.test)?;
    let groups = group_records(&set.records, &set.contexts)?;
    let embedder = if config.eval.embed { Some(load_embedder(&config.backends.embedder)?) } else { None };
    let models = if a.references_as_generations { Vec::new() } else { models_or_default(&a.model, config) };
    let backends: Vec<(String, Box<dyn Seq2SeqBackend>)> =
        models.iter().map(|(label, spec)| Ok((label.clone(), load_seq2seq(spec)?))).collect::<Result<_>>()?;
    prepare_out_dir(&a.out_dir)?;
    let mut scores = Vec::new();
    if a.references_as_generations {
        scores.push(evaluate_references(&groups, embedder.as_deref())?);
    }
    for (label, backend) in &backends {
        let mut s = evaluate_model(backend.as_ref(), &groups, &config.generation, embedder.as_deref())?;
        s.model = label.clone();
        scores.push(s);
    }
    let report = EvalReport::new(scores);
    let json = report.to_json();
    fs::write(a.out_dir.join("report.json"), serde_json::to_string_pretty(&json)? + "\n")?;
    fs::write(a.out_dir.join("report.md"), report.to_markdown(config.eval.per_relation))?;
    let partial: Vec<_> = report
        .models
        .iter()
        .map(|m| json!({ "model": m.model, "groups_scored": m.groups_scored, "groups_skipped": m.groups_skipped, "groups_empty": m.groups_empty }))
        .collect();
    Ok(json!({ "groups": groups.len(), "models": partial }))
}

/// Generations for every relation of every event, pooled per event.
pub fn generations_by_event(
    backend: &dyn Seq2SeqBackend,
    context: &ContextSentence,
    events: &[EventMention],
    config: &GenerationConfig,
) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for e in events {
        let mut texts = Vec::new();
        for rel in RelationType::ALL {
            let prompt = serialize_prompt(context, e, rel)?;
            texts.extend(generate(backend, &prompt, config)?.into_iter().map(|b| b.text));
        }
        out.push((e.surface.clone(), texts));
    }
    Ok(out)
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn cmd_analyze(a: &AnalyzeArgs, config: &RunConfig) -> Result<serde_json::Value> {
    config.generation.validate()?;
    let (context, events) = match &a.sentence {
        Some(text) => {
            let ctx = ContextSentence::new("analyze", text.trim());
            let events = a
                .event
                .iter()
                .map(|s| {
                    EventMention::find(&ctx, s)
                        .ok_or_else(|| Error::config(format!("event {s:?} does not occur in the sentence")))
                })
                .collect::<Result<Vec<_>>>()?;
            (ctx, events)
        }
        None => held_out_sentence(),
    };
    let embedder = load_embedder(&config.backends.embedder)?;
    let models = models_or_default(&a.model, config);
    let backends: Vec<(String, Box<dyn Seq2SeqBackend>)> =
        models.iter().map(|(label, spec)| Ok((label.clone(), load_seq2seq(spec)?))).collect::<Result<_>>()?;
    prepare_out_dir(&a.out_dir)?;
    let mut silhouettes = BTreeMap::new();
    for (label, backend) in &backends {
        let by_event = generations_by_event(backend.as_ref(), &context, &events, &config.generation)?;
        let result = diversity_projection(&by_event, embedder.as_ref(), &config.analyze)?;
        write_plot_csv(&result.points, &a.out_dir.join(format!("plot_{}.csv", file_label(label))))?;
        silhouettes.insert(label.clone(), result.silhouette);
    }
    let analysis = json!({ "context": context.text, "silhouette": silhouettes });
    fs::write(a.out_dir.join("analysis.json"), serde_json::to_string_pretty(&analysis)? + "\n")?;
    Ok(analysis)
}

fn cmd_export_hit(a: &ExportHitArgs, config: &mut RunConfig) -> Result<serde_json::Value> {
    if let Some(n) = a.events {
        config.human.events = n;
    }
    config.generation.validate()?;
    let set = load_records(&a.test)?;
    let groups = group_records(&set.records, &set.contexts)?;
    let models = models_or_default(&a.model, config);
    let backends: Vec<(String, Box<dyn Seq2SeqBackend>)> =
        models.iter().map(|(label, spec)| Ok((label.clone(), load_seq2seq(spec)?))).collect::<Result<_>>()?;
    prepare_out_dir(&a.out_dir)?;
    let mut events: Vec<(ContextSentence, EventMention)> = Vec::new();
    for g in &groups {
        if events.last().is_none_or(|(c, e)| c.id != g.context.id || e.span != g.event.span) {
            events.push((g.context.clone(), g.event.clone()));
        }
    }
    let sampled = sample_events(&events, config.human.events, config.human.seed);
    let top1 = GenerationConfig { num_return: 1, ..config.generation };
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for (ctx, ev) in &sampled {
        for rel in RelationType::ALL {
            let group = EvalGroup { context: ctx.clone(), event: ev.clone(), relation: rel, references: Vec::new() };
            let prompt = group.prompt()?;
            for (label, backend) in &backends {
                match generate(backend.as_ref(), &prompt, &top1) {
                    Ok(beams) => items.extend(beams.into_iter().take(1).map(|b| HumanEvalItem {
                        context: ctx.text.clone(),
                        event: ev.surface.clone(),
                        relation: rel,
                        inference: b.text,
                        model: label.clone(),
                        ratings: Vec::new(),
                    })),
                    Err(e) => failures.push(json!({ "model": label, "prompt": prompt, "error": e.to_string() })),
                }
            }
        }
    }
    let (rows, key) = export_human_eval(&items, config.human.seed);
    write_hit_csv(fs::File::create(a.out_dir.join("hits.csv"))?, &rows)?;
    write_key_csv(fs::File::create(a.out_dir.join("key.csv"))?, &key)?;
    Ok(json!({ "events": sampled.len(), "items": rows.len(), "failures": failures }))
}

fn cmd_score_hit(a: &ScoreHitArgs) -> Result<serde_json::Value> {
    for p in [&a.rated, &a.key, &a.hits] {
        require_file(p)?;
    }
    prepare_out_dir(&a.out_dir)?;
    let items = load_ratings(&a.rated, &a.key, &a.hits)?;
    let summary = score_human_eval(&items);
    let value = serde_json::to_value(&summary)?;
    fs::write(a.out_dir.join("human_eval.json"), serde_json::to_string_pretty(&value)? + "\n")?;
    fs::write(a.out_dir.join("human_eval.md"), summary.to_markdown())?;
    Ok(json!({ "items": items.len(), "excluded": summary.excluded }))
}
