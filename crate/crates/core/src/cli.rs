//! Command-line front end.
//!
//! Settings come from an optional TOML file (`--config`) with flags taking
//! precedence. One top-level seed drives every random choice: the split
//! uses it directly, CNN weight initialization draws from stream 1 of it and
//! CNN batch shuffling from stream 2.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{self, CorpusFormat, Label, LabeledCorpus, SplitConfig};
use crate::error::Error;
use crate::eval::{evaluate, top_informative_features};
use crate::meta::{sha256_hex, RunMetadata};
use crate::models::persist::{load_model, save_model};
use crate::models::{train_pipeline, ModelKind, PipelineConfig, TrainedPipeline};
use crate::preprocess::{
    self, clean_document, ngram_frequency, normalize_document, parse_phrase_lines, top_fraction,
    NormalizationConfig, StopPhraseList,
};
use crate::stats::{density_histogram, ttest_two_tailed, NanPolicy, TTestVariant};
use crate::stylometrics::{corpus_profile, parse_tagged, CorpusProfile, Lexicon, Measure};
use crate::vectorize::{Analyzer, Weighting};

const BUILTIN_CLICHES: &str = include_str!("../data/cliches.txt");
const BUILTIN_EMOTIONS: &str = include_str!("../data/emotions.txt");
const BUILTIN_STOP_REAL: &str = include_str!("../data/stop_phrases_real.txt");
const BUILTIN_STOP_FAKE: &str = include_str!("../data/stop_phrases_fake.txt");

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "satira", version, about = "Satirical fake-news detection toolkit for Arabic text")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Labeled corpus (.jsonl or .csv).
    #[arg(long, global = true, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Record that the corpus was segmented into stem and clitic tokens.
    #[arg(long, global = true)]
    pub segmented: bool,
    #[arg(long, global = true, value_name = "nb|gbt|cnn")]
    pub model: Option<ModelKind>,
    #[arg(long, global = true, value_name = "count|tfidf")]
    pub weighting: Option<Weighting>,
    #[arg(long, global = true, value_name = "word|char")]
    pub analyzer: Option<Analyzer>,
    /// N-gram range, e.g. `1,2`.
    #[arg(long, global = true, value_name = "LO,HI", value_parser = parse_range)]
    pub ngram: Option<(usize, usize)>,
    #[arg(long, global = true, value_name = "N")]
    pub max_features: Option<usize>,
    #[arg(long, global = true, value_name = "X")]
    pub max_df: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    Ok((lo, hi))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize text and remove stop phrases; writes cleaned.jsonl.
    Clean {
        /// Stop-phrase list (repeatable). Defaults to the bundled lists.
        #[arg(long = "stop-phrases", value_name = "FILE")]
        stop_phrases: Vec<PathBuf>,
    },
    /// N-gram frequency dictionaries and top-fraction stop-phrase candidates.
    Boilerplate {
        /// N-gram orders to count (repeatable, 1 to 3).
        #[arg(long = "order", value_name = "N")]
        orders: Vec<usize>,
        /// Share of most frequent n-grams to report as candidates.
        #[arg(long, value_name = "X")]
        fraction: Option<f64>,
    },
    /// Per-document stylometric measures; writes measures.csv.
    Measure(LexiconArgs),
    /// Two-sample t-tests of each measure, fake against real.
    Ttest {
        #[command(flatten)]
        lexicons: LexiconArgs,
        /// Read measures from a measures.csv instead of computing them.
        #[arg(long, value_name = "FILE")]
        measures: Option<PathBuf>,
        #[arg(long, value_name = "pooled|welch")]
        variant: Option<TTestVariant>,
        #[arg(long, value_name = "omit|propagate")]
        nan_policy: Option<NanPolicy>,
    },
    /// Fit a classifier on the training split; writes model.json.
    Train {
        /// Word-vector file for the cnn model.
        #[arg(long, value_name = "FILE")]
        embeddings: Option<PathBuf>,
        /// CNN training epochs.
        #[arg(long, value_name = "N")]
        epochs: Option<usize>,
        /// Boosting rounds.
        #[arg(long, value_name = "N")]
        rounds: Option<usize>,
        #[arg(long, value_name = "X")]
        test_fraction: Option<f64>,
        /// Train on the whole corpus instead of the training split.
        #[arg(long)]
        full: bool,
    },
    /// Score a model on the held-out split; writes eval.txt and eval.json.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        model_file: PathBuf,
        #[arg(long, value_name = "X")]
        test_fraction: Option<f64>,
        /// Evaluate on the whole corpus instead of the held-out split.
        #[arg(long)]
        full: bool,
    },
    /// Most informative naive Bayes features per class.
    Features {
        #[arg(long, value_name = "FILE")]
        model_file: PathBuf,
        #[arg(long, value_name = "K")]
        k: Option<usize>,
    },
    /// Label an unlabeled JSONL file; writes predictions.tsv.
    Predict {
        #[arg(long, value_name = "FILE")]
        model_file: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Density histograms of each measure per class.
    PlotData {
        #[command(flatten)]
        lexicons: LexiconArgs,
        #[arg(long, value_name = "FILE")]
        measures: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        bins: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct LexiconArgs {
    /// Journalistic cliche lexicon. Defaults to the bundled list.
    #[arg(long, value_name = "FILE")]
    pub cliches: Option<PathBuf>,
    /// Emotion lexicon. Defaults to the bundled list.
    #[arg(long, value_name = "FILE")]
    pub emotions: Option<PathBuf>,
    /// POS-tagged corpus (`surface<TAB>tag`, blank line between documents).
    #[arg(long, value_name = "FILE")]
    pub tagged: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    pub cliches: Option<PathBuf>,
    pub emotions: Option<PathBuf>,
    pub tagged: Option<PathBuf>,
    pub stop_phrases: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoilerplateConfig {
    pub orders: Vec<usize>,
    pub fraction: f64,
}

impl Default for BoilerplateConfig {
    fn default() -> Self {
        BoilerplateConfig {
            orders: vec![1, 2, 3],
            fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TTestConfig {
    pub variant: TTestVariant,
    pub nan_policy: NanPolicy,
}

/// Effective settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub segmented: bool,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub lexicons: LexiconPaths,
    pub normalization: NormalizationConfig,
    pub split: SplitConfig,
    pub pipeline: PipelineConfig,
    pub boilerplate: BoilerplateConfig,
    pub ttest: TTestConfig,
    pub bins: usize,
    pub top_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            segmented: false,
            seed: 42,
            threads: None,
            out: PathBuf::from("out"),
            lexicons: LexiconPaths::default(),
            normalization: NormalizationConfig::default(),
            split: SplitConfig::default(),
            pipeline: PipelineConfig::default(),
            boilerplate: BoilerplateConfig::default(),
            ttest: TTestConfig::default(),
            bins: 30,
            top_k: 30,
        }
    }
}

impl RunConfig {
    pub fn from_toml(content: &str) -> Result<RunConfig, Error> {
        toml::from_str(content).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    /// Hash of every setting that can change results. Output location and
    /// thread count are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.threads = None;
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    fn apply(&mut self, a: &CommonArgs) {
        if let Some(p) = &a.corpus {
            self.corpus = Some(p.clone());
        }
        if a.segmented {
            self.segmented = true;
        }
        if let Some(m) = a.model {
            self.pipeline.model = m;
        }
        let v = &mut self.pipeline.vectorizer;
        if let Some(w) = a.weighting {
            v.weighting = w;
        }
        if let Some(an) = a.analyzer {
            v.analyzer = an;
        }
        if let Some(r) = a.ngram {
            v.ngram_range = r;
        }
        if let Some(n) = a.max_features {
            v.max_features = n;
        }
        if let Some(x) = a.max_df {
            v.max_df = x;
        }
        if let Some(s) = a.seed {
            self.seed = s;
        }
        if let Some(t) = a.threads {
            self.threads = Some(t);
        }
        if let Some(o) = &a.out {
            self.out = o.clone();
        }
    }

    fn apply_lexicons(&mut self, l: &LexiconArgs) {
        if let Some(p) = &l.cliches {
            self.lexicons.cliches = Some(p.clone());
        }
        if let Some(p) = &l.emotions {
            self.lexicons.emotions = Some(p.clone());
        }
        if let Some(p) = &l.tagged {
            self.lexicons.tagged = Some(p.clone());
        }
    }

    /// Fan the top-level seed out to the components that draw randomness.
    fn propagate_seed(&mut self) {
        self.split.seed = self.seed;
        self.pipeline.train.seed = self.seed;
    }
}

/// Failure of one CLI run, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `argv` (program name first), run the command and return the exit
/// code. Messages go to stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("satira: {e}");
            e.exit_code()
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("SATIRA_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Build the effective configuration for a parsed command line.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            RunConfig::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    cfg.apply(&cli.common);
    match &cli.command {
        Command::Clean { stop_phrases } => {
            if !stop_phrases.is_empty() {
                cfg.lexicons.stop_phrases = stop_phrases.clone();
            }
        }
        Command::Boilerplate { orders, fraction } => {
            if !orders.is_empty() {
                cfg.boilerplate.orders = orders.clone();
            }
            if let Some(f) = fraction {
                cfg.boilerplate.fraction = *f;
            }
        }
        Command::Measure(l) => cfg.apply_lexicons(l),
        Command::Ttest {
            lexicons,
            variant,
            nan_policy,
            ..
        } => {
            cfg.apply_lexicons(lexicons);
            if let Some(v) = variant {
                cfg.ttest.variant = *v;
            }
            if let Some(p) = nan_policy {
                cfg.ttest.nan_policy = *p;
            }
        }
        Command::Train {
            embeddings,
            epochs,
            rounds,
            test_fraction,
            ..
        } => {
            if let Some(e) = embeddings {
                cfg.pipeline.embeddings = Some(e.clone());
            }
            if let Some(n) = epochs {
                cfg.pipeline.train.epochs = *n;
            }
            if let Some(n) = rounds {
                cfg.pipeline.gbt.n_rounds = *n;
            }
            if let Some(f) = test_fraction {
                cfg.split.test_fraction = *f;
            }
        }
        Command::Evaluate { test_fraction, .. } => {
            if let Some(f) = test_fraction {
                cfg.split.test_fraction = *f;
            }
        }
        Command::Features { k, .. } => {
            if let Some(k) = k {
                cfg.top_k = *k;
            }
        }
        Command::Predict { .. } => {}
        Command::PlotData { lexicons, bins, .. } => {
            cfg.apply_lexicons(lexicons);
            if let Some(b) = bins {
                cfg.bins = *b;
            }
        }
    }
    cfg.propagate_seed();
    Ok(cfg)
}

/// Run a parsed command, writing the console summary to `console`.
pub fn execute<W: Write>(cli: &Cli, console: &mut W) -> CliResult<()> {
    let cfg = resolve_config(cli)?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("thread pool already initialized; --threads {n} ignored");
        }
    }
    let mut ctx = Context::new(cfg);
    match &cli.command {
        Command::Clean { .. } => ctx.clean(console),
        Command::Boilerplate { .. } => ctx.boilerplate(console),
        Command::Measure(_) => ctx.measure(console),
        Command::Ttest { measures, .. } => ctx.ttest(measures.as_deref(), console),
        Command::Train { full, .. } => ctx.train(*full, console),
        Command::Evaluate { model_file, full, .. } => ctx.evaluate(model_file, *full, console),
        Command::Features { model_file, .. } => ctx.features(model_file, console),
        Command::Predict { model_file, input } => ctx.predict(model_file, input, console),
        Command::PlotData { measures, .. } => ctx.plot_data(measures.as_deref(), console),
    }
}

struct LoadedText {
    content: String,
    sha256: String,
}

fn read_text(path: &Path) -> CliResult<LoadedText> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let sha256 = sha256_hex(&bytes);
    let content = String::from_utf8(bytes)
        .map_err(|_| Error::invalid(format!("{}: not valid UTF-8", path.display())))?;
    Ok(LoadedText { content, sha256 })
}

struct Context {
    cfg: RunConfig,
    meta: RunMetadata,
}

impl Context {
    fn new(cfg: RunConfig) -> Self {
        let meta = RunMetadata {
            config_hash: cfg.hash(),
            segmented: cfg.segmented,
            lexicons: Vec::new(),
            extra: Vec::new(),
        };
        Context { cfg, meta }
    }

    fn corpus_path(&self) -> CliResult<&Path> {
        self.cfg
            .corpus
            .as_deref()
            .ok_or_else(|| CliError::Usage("this command needs --corpus".into()))
    }

    /// Load the corpus and normalize every document. Normalization is
    /// idempotent, so already-cleaned corpora pass through unchanged.
    fn load_normalized(&mut self, path: &Path) -> CliResult<LabeledCorpus> {
        let text = read_text(path)?;
        self.meta.extra.push(("corpus.sha256".into(), text.sha256));
        let parsed = match CorpusFormat::from_path(path) {
            CorpusFormat::Jsonl => corpus::parse_jsonl(&text.content),
            CorpusFormat::Csv => corpus::parse_csv(&text.content),
        }
        .map_err(|e| e.in_file(path))?;
        let norm = self.cfg.normalization;
        Ok(parsed.map_documents(|d| normalize_document(d, &norm))?)
    }

    fn corpus(&mut self) -> CliResult<LabeledCorpus> {
        let path = self.corpus_path()?.to_path_buf();
        self.load_normalized(&path)
    }

    fn lexicon(&mut self, name: &str, path: Option<&Path>, builtin: &str) -> CliResult<Lexicon> {
        let norm = self.cfg.normalization;
        let (content, sha, source) = match path {
            Some(p) => {
                let t = read_text(p)?;
                (t.content, t.sha256, p.display().to_string())
            }
            None => (builtin.to_string(), sha256_hex(builtin.as_bytes()), "builtin".to_string()),
        };
        let phrases = parse_phrase_lines(&content, Some(&norm));
        let lex = Lexicon::new(name, phrases).map_err(|e| Error::invalid(format!("lexicon {name} ({source}): {e}")))?;
        self.meta.lexicons.push((name.to_string(), sha));
        self.meta.extra.push((format!("lexicon.{name}.source"), source));
        Ok(lex)
    }

    fn out_file(&self, name: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.cfg.out).map_err(|e| Error::io(&self.cfg.out, e))?;
        Ok(self.cfg.out.join(name))
    }

    /// Write `body` to `name` in the output directory, preceded by the
    /// metadata header.
    fn write_with_header<F>(&self, name: &str, body: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let path = self.out_file(name)?;
        let mut buf = self.meta.header().into_bytes();
        body(&mut buf).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json(&self, name: &str, mut value: serde_json::Value) -> CliResult<PathBuf> {
        value["meta"] = self.meta.to_json();
        let path = self.out_file(name)?;
        let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::invalid(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn clean<W: Write>(&mut self, console: &mut W) -> CliResult<()> {
        let path = self.corpus_path()?.to_path_buf();
        let text = read_text(&path)?;
        self.meta.extra.push(("corpus.sha256".into(), text.sha256));
        let raw = match CorpusFormat::from_path(&path) {
            CorpusFormat::Jsonl => corpus::parse_jsonl(&text.content),
            CorpusFormat::Csv => corpus::parse_csv(&text.content),
        }
        .map_err(|e| e.in_file(path))?;
        let norm = self.cfg.normalization;
        let mut lists = Vec::new();
        if self.cfg.lexicons.stop_phrases.is_empty() {
            for (name, builtin) in [("stop_real", BUILTIN_STOP_REAL), ("stop_fake", BUILTIN_STOP_FAKE)] {
                lists.push(StopPhraseList::new(parse_phrase_lines(builtin, Some(&norm)))?);
                self.meta.lexicons.push((name.into(), sha256_hex(builtin.as_bytes())));
            }
        } else {
            for (i, p) in self.cfg.lexicons.stop_phrases.clone().iter().enumerate() {
                let t = read_text(p)?;
                lists.push(StopPhraseList::new(parse_phrase_lines(&t.content, Some(&norm)))?);
                self.meta.lexicons.push((format!("stop{i}"), t.sha256));
                self.meta.extra.push((format!("lexicon.stop{i}.source"), p.display().to_string()));
            }
        }
        let stop = StopPhraseList::merged(&lists)?;
        let cleaned = raw.map_documents(|d| clean_document(d, &norm, &stop))?;
        let removed: usize = raw
            .iter()
            .zip(cleaned.iter())
            .map(|(a, b)| preprocess::tokenize(&preprocess::normalize(&a.text, &norm)).len() - b.len())
            .sum();
        let path = self.write_with_header("cleaned.jsonl", |buf| corpus::write_jsonl(&cleaned, buf))?;
        writeln!(
            console,
            "cleaned {} documents, removed {removed} stop-phrase tokens -> {}",
            cleaned.len(),
            path.display()
        )
        .ok();
        Ok(())
    }

    fn boilerplate<W: Write>(&mut self, console: &mut W) -> CliResult<()> {
        let corpus = self.corpus()?;
        let bp = self.cfg.boilerplate.clone();
        for label in Label::ALL {
            let docs: Vec<_> = corpus.iter().filter(|d| d.label == Some(label)).collect();
            for &n in &bp.orders {
                let freq = ngram_frequency(docs.iter().copied(), n)?;
                let top = top_fraction(&freq, bp.fraction)?;
                self.write_with_header(&format!("ngrams_{label}_{n}.tsv"), |buf| freq.write_tsv(buf))?;
                let path = self.write_with_header(&format!("candidates_{label}_{n}.tsv"), |buf| {
                    writeln!(buf, "ngram\tcount")?;
                    for (g, c) in &top {
                        writeln!(buf, "{g}\t{c}")?;
                    }
                    Ok(())
                })?;
                writeln!(
                    console,
                    "{label} {n}-grams: {} distinct, {} candidates -> {}",
                    freq.len(),
                    top.len(),
                    path.display()
                )
                .ok();
            }
        }
        Ok(())
    }

    fn profile(&mut self) -> CliResult<CorpusProfile> {
        let corpus = self.corpus()?;
        let lex = self.cfg.lexicons.clone();
        let cliches = self.lexicon("cliches", lex.cliches.as_deref(), BUILTIN_CLICHES)?;
        let emotions = self.lexicon("emotions", lex.emotions.as_deref(), BUILTIN_EMOTIONS)?;
        let tagged = match &lex.tagged {
            Some(p) => {
                let t = read_text(p)?;
                self.meta.extra.push(("tagged.sha256".into(), t.sha256));
                Some(parse_tagged(&t.content).map_err(|e| e.in_file(p))?)
            }
            None => None,
        };
        Ok(corpus_profile(&corpus, &cliches, &emotions, tagged.as_deref())?)
    }

    fn profile_from(&mut self, measures: Option<&Path>) -> CliResult<CorpusProfile> {
        match measures {
            Some(p) => {
                let t = read_text(p)?;
                self.meta.extra.push(("measures.sha256".into(), t.sha256));
                Ok(CorpusProfile::read_csv(&t.content).map_err(|e| e.in_file(p))?)
            }
            None => self.profile(),
        }
    }

    fn measure<W: Write>(&mut self, console: &mut W) -> CliResult<()> {
        let profile = self.profile()?;
        let path = self.out_file("measures.csv")?;
        let mut buf = self.meta.header().into_bytes();
        profile.write_csv(&mut buf)?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        writeln!(console, "measured {} documents -> {}", profile.len(), path.display()).ok();
        Ok(())
    }

    fn ttest<W: Write>(&mut self, measures: Option<&Path>, console: &mut W) -> CliResult<()> {
        let profile = self.profile_from(measures)?;
        let tc = self.cfg.ttest;
        let mut rows = Vec::new();
        for m in Measure::ALL {
            let fake = profile.column(Label::Fake, m);
            let real = profile.column(Label::Real, m);
            match ttest_two_tailed(&fake, &real, tc.variant, tc.nan_policy) {
                Ok(r) => rows.push((m, Some(r))),
                Err(e) => {
                    log::warn!("t-test on {} skipped: {e}", m.column());
                    rows.push((m, None));
                }
            }
        }
        for (m, r) in &rows {
            match r {
                Some(r) => writeln!(
                    console,
                    "{}: statistic={} p_value={} df={} n_fake={} n_real={}",
                    m.column(),
                    r.statistic,
                    r.p_value,
                    r.df,
                    r.n_a,
                    r.n_b
                ),
                None => writeln!(console, "{}: not testable", m.column()),
            }
            .ok();
        }
        let path = self.write_with_header("ttest.tsv", |buf| {
            writeln!(buf, "measure\tstatistic\tp_value\tdf\tn_fake\tn_real\tvariant\tnan_policy")?;
            for (m, r) in &rows {
                match r {
                    Some(r) => writeln!(
                        buf,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        m.column(),
                        r.statistic,
                        r.p_value,
                        r.df,
                        r.n_a,
                        r.n_b,
                        r.variant,
                        r.nan_policy
                    )?,
                    None => writeln!(buf, "{}\t\t\t\t\t\t{}\t{}", m.column(), tc.variant, tc.nan_policy)?,
                }
            }
            Ok(())
        })?;
        writeln!(console, "-> {}", path.display()).ok();
        Ok(())
    }

    fn split(&self, corpus: &LabeledCorpus) -> CliResult<(LabeledCorpus, LabeledCorpus)> {
        Ok(corpus::split(corpus, &self.cfg.split)?)
    }

    fn train<W: Write>(&mut self, full: bool, console: &mut W) -> CliResult<()> {
        let corpus = self.corpus()?;
        let train = if full { corpus } else { self.split(&corpus)?.0 };
        let pcfg = self.cfg.pipeline.clone();
        let (pipeline, log) = train_pipeline(&train, &pcfg)?;
        if let crate::models::TrainedPipeline::ConvNet { source, .. } = &pipeline {
            self.meta.lexicons.push(("embeddings".into(), source.sha256.clone()));
        }
        let mut meta = self.meta.to_json();
        meta["split"] = json!({
            "test_fraction": self.cfg.split.test_fraction,
            "seed": self.cfg.split.seed,
            "stratified": self.cfg.split.stratified,
            "trained_on": if full { "all" } else { "train" },
        });
        meta["n_train"] = json!(train.len());
        if let Some(c) = log.embedding_coverage {
            meta["embedding_coverage"] = json!(c);
        }
        let path = self.out_file("model.json")?;
        save_model(&path, &pipeline, &pcfg, meta)?;
        if !log.loss_history.is_empty() {
            self.write_with_header("loss.tsv", |buf| {
                writeln!(buf, "step\tloss")?;
                for (i, l) in log.loss_history.iter().enumerate() {
                    writeln!(buf, "{i}\t{l}")?;
                }
                Ok(())
            })?;
        }
        writeln!(
            console,
            "trained {} on {} documents -> {}",
            pipeline.kind(),
            train.len(),
            path.display()
        )
        .ok();
        Ok(())
    }

    fn load_pipeline(&mut self, path: &Path) -> CliResult<TrainedPipeline> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.meta.extra.push(("model.sha256".into(), sha256_hex(&bytes)));
        let saved = load_model(path).map_err(|e| e.in_file(path))?;
        Ok(saved.pipeline)
    }

    fn evaluate<W: Write>(&mut self, model_file: &Path, full: bool, console: &mut W) -> CliResult<()> {
        let pipeline = self.load_pipeline(model_file)?;
        let corpus = self.corpus()?;
        let test = if full { corpus } else { self.split(&corpus)?.1 };
        let gold = test.labels()?;
        let pred: Vec<Label> = pipeline.predict(test.documents())?.iter().map(|p| p.label).collect();
        let report = evaluate(&pred, &gold)?;
        self.write_with_header("eval.txt", |buf| report.write_text(buf))?;
        let path = self.write_json("eval.json", report.to_json())?;
        writeln!(
            console,
            "accuracy={} macro_precision={} macro_recall={} macro_f1={} n={} -> {}",
            report.accuracy,
            report.macro_precision,
            report.macro_recall,
            report.macro_f1,
            report.n,
            path.display()
        )
        .ok();
        Ok(())
    }

    fn features<W: Write>(&mut self, model_file: &Path, console: &mut W) -> CliResult<()> {
        let pipeline = self.load_pipeline(model_file)?;
        let (vocab, model) = match &pipeline {
            TrainedPipeline::NaiveBayes { vocabulary, model } => (vocabulary, model),
            other => {
                return Err(Error::invalid(format!(
                    "feature rankings need a naive Bayes model, found {}",
                    other.kind()
                ))
                .into())
            }
        };
        let (fake, real) = top_informative_features(model, vocab, self.cfg.top_k)?;
        for r in [&fake, &real] {
            let path = self.write_with_header(&format!("features_{}.tsv", r.class), |buf| r.write_tsv(buf))?;
            let head: Vec<&str> = r.entries.iter().take(5).map(|e| e.feature.as_str()).collect();
            writeln!(console, "{}: {} -> {}", r.class, head.join(" "), path.display()).ok();
        }
        Ok(())
    }

    fn predict<W: Write>(&mut self, model_file: &Path, input: &Path, console: &mut W) -> CliResult<()> {
        let pipeline = self.load_pipeline(model_file)?;
        let docs = self.load_normalized(input)?;
        let preds = pipeline.predict(docs.documents())?;
        let path = self.write_with_header("predictions.tsv", |buf| {
            writeln!(buf, "id\tlabel\tprobability_fake")?;
            for (d, p) in docs.iter().zip(&preds) {
                writeln!(buf, "{}\t{}\t{}", d.id, p.label, p.probability)?;
            }
            Ok(())
        })?;
        writeln!(console, "labeled {} documents -> {}", preds.len(), path.display()).ok();
        Ok(())
    }

    fn plot_data<W: Write>(&mut self, measures: Option<&Path>, console: &mut W) -> CliResult<()> {
        let profile = self.profile_from(measures)?;
        let bins = self.cfg.bins;
        for m in Measure::ALL {
            for label in Label::ALL {
                let values = profile.column(label, m);
                match density_histogram(&values, bins) {
                    Ok(d) => {
                        let path = self.write_with_header(&format!("density_{}_{label}.csv", m.column()), |buf| {
                            d.write_csv(buf)
                        })?;
                        writeln!(console, "{} {label} -> {}", m.column(), path.display()).ok();
                    }
                    Err(e) => log::warn!("no density for {} {label}: {e}", m.column()),
                }
            }
        }
        Ok(())
    }
}
