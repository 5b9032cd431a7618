//! End-to-end driver: text → frequencies and surprisal → predictions →
//! codes and optimised lengths → evaluation report, plus the λ and
//! training-size sweeps.
//!
//! Every artifact is written to a staging directory next to the output
//! directory and moved into place only once the whole run has succeeded.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::Serialize;
use sha2::{Digest as _, Sha256};

use crate::coder::build_huffman_k;
use crate::corpus::{count_frequencies, ingest_and_filter, CorpusConfig, FilterProtocol, FrequencyTable};
use crate::costs::{fit_capacity, optimize_lengths, CostSpec, LengthAssignment, Objective};
use crate::error::{Error, Result, StageExt};
use crate::eval::{evaluate, EvalReport, Metrics};
use crate::hypotheses::{predict_cch, predict_cch_lower, predict_zipf, write_rows, PredictionSet, PREDICTION_HEADER};
use crate::scalar::format_sig17;
use crate::surprisal::{ingest_external, score_corpus, train_ngram, NgramModel, SampleStats, SurprisalSource, SurprisalTable};
use crate::tsv;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_WEIGHTS: [f64; 3] = [0.2, 0.3, 0.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityMode {
    /// Fit `C` to the observed lengths for each λ.
    Fit,
    Fixed(f64),
}

impl fmt::Display for CapacityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacityMode::Fit => f.write_str("fit"),
            CapacityMode::Fixed(c) => write!(f, "fixed:{}", format_sig17(*c)),
        }
    }
}

impl FromStr for CapacityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "fit" {
            return Ok(CapacityMode::Fit);
        }
        let value = s
            .strip_prefix("fixed:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::Config(format!("capacity mode {s:?} is neither \"fit\" nor \"fixed:<value>\"")))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!("fixed capacity must be positive, got {value}")));
        }
        Ok(CapacityMode::Fixed(value))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    /// Per-token surprisal file; replaces the n-gram model when given.
    pub external: Option<PathBuf>,
    pub corpus: CorpusConfig,
    pub order: usize,
    pub weights: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub capacity: CapacityMode,
    /// Alphabet size of the Huffman code to emit, if any.
    pub code_k: Option<usize>,
    pub language: String,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(train: impl Into<PathBuf>, test: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            train: train.into(),
            test: test.into(),
            external: None,
            corpus: CorpusConfig::default(),
            order: DEFAULT_ORDER,
            weights: DEFAULT_WEIGHTS.to_vec(),
            lambdas: vec![1.0],
            capacity: CapacityMode::Fit,
            code_k: None,
            language: "xx".into(),
            output_dir: output_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [Some(&self.train), Some(&self.test), self.external.as_ref()].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        if self.lambdas.is_empty() {
            return Err(Error::Config("the lambda list is empty".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Config(format!("lambda must be positive and finite, got {l}")));
        }
        if self.weights.len() != self.order {
            return Err(Error::Config(format!("{} interpolation weights for order {}", self.weights.len(), self.order)));
        }
        if let Some(k) = self.code_k {
            if k < 2 {
                return Err(Error::Config(format!("code alphabet size must be at least 2, got {k}")));
            }
        }
        Ok(())
    }

    /// SHA-256 over the settings and the contents of the input files. Paths
    /// and the output directory do not enter, so moved inputs keep their
    /// digest.
    pub fn digest(&self) -> Result<String> {
        #[derive(Serialize)]
        struct View<'a> {
            corpus: &'a CorpusConfig,
            order: usize,
            weights: &'a [f64],
            lambdas: &'a [f64],
            capacity: String,
            code_k: Option<usize>,
            language: &'a str,
            inputs: Vec<String>,
        }
        let mut inputs = Vec::new();
        for p in [Some(&self.train), Some(&self.test), self.external.as_ref()].into_iter().flatten() {
            inputs.push(hex::encode(Sha256::digest(fs::read(p)?)));
        }
        let view = View {
            corpus: &self.corpus,
            order: self.order,
            weights: &self.weights,
            lambdas: &self.lambdas,
            capacity: self.capacity.to_string(),
            code_k: self.code_k,
            language: &self.language,
            inputs,
        };
        let json = serde_json::to_vec(&view).expect("config serialises");
        Ok(hex::encode(Sha256::digest(json))[..16].to_string())
    }
}

/// Everything derived from the inputs before any hypothesis is scored.
pub struct Prepared {
    pub train_tokens: Vec<String>,
    pub test_tokens: Vec<String>,
    /// Unfiltered training counts; Zipf's `q(w)`.
    pub train_freq: FrequencyTable,
    /// Filtered, top-N test counts; the analysis vocabulary, observed
    /// lengths and evaluation weights.
    pub test_freq: FrequencyTable,
    pub model: Option<NgramModel>,
    /// Surprisal samples restricted to the analysis vocabulary.
    pub table: SurprisalTable<f64>,
}

fn read_tokens(path: &Path, config: &CorpusConfig) -> Result<Vec<String>> {
    ingest_and_filter(BufReader::new(File::open(path)?), config)
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let unfiltered = config.corpus.clone().with_filter(FilterProtocol::All).with_top_n(None)?;
    let train_tokens = read_tokens(&config.train, &unfiltered).stage("corpus")?;
    let test_tokens = read_tokens(&config.test, &unfiltered).stage("corpus")?;
    if train_tokens.is_empty() || test_tokens.is_empty() {
        return Err(Error::validation("training and test text must both contain tokens").in_stage("corpus"));
    }
    let train_freq = count_frequencies(&train_tokens, &unfiltered);
    let analysis: Vec<&String> = test_tokens.iter().filter(|t| config.corpus.keeps(t)).collect();
    let test_freq = count_frequencies(&analysis, &config.corpus);
    info!(
        "corpus: {} train tokens, {} test tokens, {} analysis types",
        train_tokens.len(),
        test_tokens.len(),
        test_freq.len()
    );

    let (model, mut table) = match &config.external {
        Some(path) => {
            let raw: SurprisalTable<f64> = ingest_external(BufReader::new(File::open(path)?)).stage("surprisal")?;
            let mut table = SurprisalTable::new(SurprisalSource::External);
            for (form, samples) in raw.iter() {
                for s in samples {
                    table.push(config.corpus.normalize(form.to_string()), *s);
                }
            }
            (None, table)
        }
        None => {
            let model = train_ngram(&train_tokens, config.order, &config.weights).stage("surprisal")?;
            let table = score_corpus(&model, &test_tokens);
            (Some(model), table)
        }
    };
    table.retain(|f| test_freq.contains(f));
    if table.is_empty() {
        return Err(Error::validation("no analysis word has surprisal samples").in_stage("surprisal"));
    }
    Ok(Prepared { train_tokens, test_tokens, train_freq, test_freq, model, table })
}

impl Prepared {
    pub fn predictions(&self, digest: &str) -> [PredictionSet<f64>; 3] {
        let mut zipf = predict_zipf(&self.train_freq);
        zipf.per_word.retain(|f, _| self.test_freq.contains(f));
        zipf.excluded.retain(|f| self.test_freq.contains(f));
        [zipf, predict_cch_lower(&self.table), predict_cch(&self.table)].map(|s| s.with_digest(digest))
    }

    /// Words whose surprisal is not identically zero; the others have no
    /// finite optimal length.
    pub fn optimizable(&self) -> SurprisalTable<f64> {
        let mut t = self.table.clone();
        t.retain(|f| SampleStats::of(self.table.samples(f).expect("form from table")).sum > 0.0);
        t
    }

    pub fn capacity(&self, mode: CapacityMode, lambda: f64) -> Result<f64> {
        match mode {
            CapacityMode::Fixed(c) => Ok(c),
            CapacityMode::Fit => {
                fit_capacity(&self.optimizable(), &LengthAssignment::observed(&self.test_freq), &self.test_freq, lambda)
            }
        }
    }

    /// Optimal CCH and CCH-lower lengths for one λ.
    pub fn optimized(&self, capacity: f64, lambda: f64) -> Result<[LengthAssignment<f64>; 2]> {
        let table = self.optimizable();
        let cch = optimize_lengths(&table, &CostSpec::new(capacity, lambda, Objective::Cch)?)?;
        let lower = optimize_lengths(&table, &CostSpec::new(capacity, lambda, Objective::CchLower)?)?;
        Ok([cch, lower])
    }

    pub fn evaluate(&self, per_word: &BTreeMap<String, f64>) -> Result<Metrics> {
        evaluate(per_word, &self.test_freq)
    }
}

struct Staging {
    dir: tempfile::TempDir,
    files: Vec<String>,
}

impl Staging {
    fn new(output_dir: &Path) -> Result<Self> {
        let parent = match output_dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let dir = tempfile::Builder::new().prefix(".wordlen-stage").tempdir_in(parent)?;
        Ok(Staging { dir, files: Vec::new() })
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let mut out = BufWriter::new(File::create(self.dir.path().join(name))?);
        body(&mut out)?;
        out.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_str(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, |out| Ok(out.write_all(text.as_bytes())?))
    }

    fn commit(self, output_dir: &Path) -> Result<()> {
        fs::create_dir_all(output_dir)?;
        for name in &self.files {
            fs::rename(self.dir.path().join(name), output_dir.join(name))?;
        }
        Ok(())
    }
}

pub fn lengths_file_name(lambda: f64) -> String {
    format!("lengths_lambda_{}.tsv", format_sig17(lambda))
}

/// Runs every stage and writes the artifacts to `config.output_dir`:
///
/// * `train_freq.tsv`, `test_freq.tsv`: frequency tables
/// * `surprisal.tsv`: samples of the analysis words, external format
/// * `model.json`: the n-gram model (omitted with external surprisal)
/// * `predictions.tsv`: the three prediction sets
/// * `codebook.tsv`: Huffman code over the training vocabulary, if requested
/// * `capacity.tsv` and `lengths_lambda_<λ>.tsv`: optimised lengths per λ
/// * `report.json`, `report.txt`, `metrics.csv`
pub fn run_pipeline(config: &RunConfig) -> Result<EvalReport> {
    config.validate()?;
    let digest = config.digest()?;
    let prep = prepare(config)?;
    let mut stage = Staging::new(&config.output_dir)?;

    stage.write("train_freq.tsv", |o| prep.train_freq.write_tsv(o))?;
    stage.write("test_freq.tsv", |o| prep.test_freq.write_tsv(o))?;
    stage.write("surprisal.tsv", |o| prep.table.write_tsv(o))?;
    if let Some(model) = &prep.model {
        stage.write_str("model.json", &model.to_json()?)?;
    }

    let sets = prep.predictions(&digest);
    stage.write("predictions.tsv", |o| {
        tsv::write_header(o, &PREDICTION_HEADER)?;
        for s in &sets {
            write_rows(o, s.hypothesis.label(), &s.per_word)?;
        }
        Ok(())
    })?;

    if let Some(k) = config.code_k {
        let book = build_huffman_k(&prep.train_freq, k).stage("coder")?;
        info!("coder: {k}-ary code, expected length {:?}", book.expected_length());
        stage.write("codebook.tsv", |o| book.write_tsv(o))?;
    }

    let mut capacities = String::from("lambda\tcapacity\n");
    for &lambda in &config.lambdas {
        let capacity = prep.capacity(config.capacity, lambda).stage("costs")?;
        let [cch, lower] = prep.optimized(capacity, lambda).stage("costs")?;
        info!("costs: lambda {lambda}, capacity {capacity}");
        let _ = writeln!(capacities, "{}\t{}", format_sig17(lambda), format_sig17(capacity));
        stage.write(&lengths_file_name(lambda), |o| {
            tsv::write_header(o, &PREDICTION_HEADER)?;
            write_rows(o, "cch", cch.as_map())?;
            write_rows(o, "cch_lower", lower.as_map())
        })?;
    }
    stage.write_str("capacity.tsv", &capacities)?;

    let mut report = EvalReport::new(config.language.clone(), digest)?;
    for s in &sets {
        let metrics = prep.evaluate(&s.per_word).stage("eval")?;
        report.insert(s.hypothesis.label(), metrics, prep.test_freq.len() - metrics.n_words);
    }
    stage.write_str("report.json", &report.to_json())?;
    stage.write_str("report.txt", &report.to_text())?;
    stage.write_str("metrics.csv", &report.to_csv())?;

    stage.commit(&config.output_dir)?;
    info!("wrote {}", config.output_dir.display());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub lambda: f64,
    pub capacity: f64,
    pub hypothesis: &'static str,
    pub metrics: Metrics,
}

/// Optimised CCH and CCH-lower lengths, evaluated at each λ.
pub fn sweep_lambda(prep: &Prepared, mode: CapacityMode, lambdas: &[f64]) -> Result<Vec<LambdaRow>> {
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let capacity = prep.capacity(mode, lambda).stage("costs")?;
        let [cch, lower] = prep.optimized(capacity, lambda).stage("costs")?;
        for (hypothesis, lengths) in [("cch", cch), ("cch_lower", lower)] {
            let metrics = prep.evaluate(lengths.as_map()).stage("eval")?;
            rows.push(LambdaRow { lambda, capacity, hypothesis, metrics });
        }
    }
    Ok(rows)
}

pub fn lambda_csv(rows: &[LambdaRow]) -> String {
    let mut s = String::from("lambda,capacity,hypothesis,spearman,pearson,slope,weighted_mse,n_words\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            format_sig17(r.lambda),
            format_sig17(r.capacity),
            r.hypothesis,
            format_sig17(m.spearman),
            format_sig17(m.pearson),
            format_sig17(m.slope),
            format_sig17(m.weighted_mse),
            m.n_words
        );
    }
    s
}

/// `n` sizes spaced evenly in log space from `lo` to `hi`, deduplicated.
pub fn log_uniform_sizes(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    if n <= 1 || hi <= lo {
        return vec![hi.max(1)];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut sizes: Vec<usize> =
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as usize).collect();
    sizes.dedup();
    sizes
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSizeRow {
    pub train_tokens: usize,
    pub cross_entropy: f64,
    pub hypothesis: &'static str,
    pub metrics: Metrics,
}

/// Retrains the n-gram model on growing prefixes of the training text and
/// rescores the test text with each. Cross-entropy is measured on the full
/// test stream over the closed vocabulary of all training and test types, so
/// models with different vocabularies are compared on the same events.
pub fn sweep_train_sizes(prep: &Prepared, config: &RunConfig, sizes: &[usize]) -> Result<Vec<TrainSizeRow>> {
    let universe: std::collections::BTreeSet<&str> =
        prep.train_tokens.iter().chain(&prep.test_tokens).map(String::as_str).collect();
    let mut rows = Vec::new();
    for &n in sizes {
        let tokens = &prep.train_tokens[..n.min(prep.train_tokens.len())];
        let model = train_ngram(tokens, config.order, &config.weights).stage("surprisal")?;
        let cross_entropy = model.cross_entropy_closed(&prep.test_tokens, universe.len());
        let mut table: SurprisalTable<f64> = score_corpus(&model, &prep.test_tokens);
        table.retain(|f| prep.test_freq.contains(f));
        let mut zipf = predict_zipf(&count_frequencies(tokens, &CorpusConfig::default()));
        zipf.per_word.retain(|f, _| prep.test_freq.contains(f));
        info!("sweep: {} train tokens, cross-entropy {cross_entropy:.4} bits", tokens.len());
        for set in [zipf, predict_cch_lower(&table), predict_cch(&table)] {
            let metrics = prep.evaluate(&set.per_word).stage("eval")?;
            rows.push(TrainSizeRow { train_tokens: tokens.len(), cross_entropy, hypothesis: set.hypothesis.label(), metrics });
        }
    }
    Ok(rows)
}

pub fn train_size_csv(rows: &[TrainSizeRow]) -> String {
    let mut s = String::from("train_tokens,cross_entropy_bits,hypothesis,spearman,pearson,slope,weighted_mse,n_words\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.train_tokens,
            format_sig17(r.cross_entropy),
            r.hypothesis,
            format_sig17(m.spearman),
            format_sig17(m.pearson),
            format_sig17(m.slope),
            format_sig17(m.weighted_mse),
            m.n_words
        );
    }
    s
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub lambdas: Option<Vec<f64>>,
    pub train_sizes: Option<Vec<usize>>,
}

/// Runs the requested sweeps and writes `sweep_lambda.csv` and/or
/// `sweep_train_sizes.csv` into `config.output_dir`.
pub fn run_sweeps(config: &RunConfig, options: &SweepOptions) -> Result<()> {
    if options.lambdas.is_none() && options.train_sizes.is_none() {
        return Err(Error::Config("no sweep requested".into()));
    }
    let prep = prepare(config)?;
    let mut stage = Staging::new(&config.output_dir)?;
    if let Some(lambdas) = &options.lambdas {
        let rows = sweep_lambda(&prep, config.capacity, lambdas)?;
        stage.write_str("sweep_lambda.csv", &lambda_csv(&rows))?;
    }
    if let Some(sizes) = &options.train_sizes {
        if config.external.is_some() {
            return Err(Error::Config("the training-size sweep needs the n-gram model, not external surprisal".into()));
        }
        let rows = sweep_train_sizes(&prep, config, sizes)?;
        stage.write_str("sweep_train_sizes.csv", &train_size_csv(&rows))?;
    }
    stage.commit(&config.output_dir)
}

/// Desk-scale training-size grid: 7 log-uniform points from 10^3 to
/// min(10^6, available tokens).
pub fn default_train_sizes(available: usize) -> Vec<usize> {
    log_uniform_sizes(1_000.min(available), available.min(1_000_000), 7)
}
