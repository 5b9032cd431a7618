use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wordlen::coder::build_huffman_k;
use wordlen::corpus::{count_frequencies, ingest_and_filter, CorpusConfig, FilterProtocol, FrequencyTable};
use wordlen::costs::{fit_capacity, lambda_grid, optimize_lengths, CostSpec, LengthAssignment, Objective};
use wordlen::eval::{evaluate, EvalReport};
use wordlen::hypotheses::{predict_cch, predict_cch_lower, predict_zipf, read_labelled_tsv, PREDICTION_HEADER};
use wordlen::pipeline::{
    default_train_sizes, run_pipeline, run_sweeps, RunConfig, SweepOptions, DEFAULT_ORDER,
};
use wordlen::scalar::format_sig17;
use wordlen::surprisal::{ingest_external, score_corpus, train_ngram, NgramModel, SurprisalTable};
use wordlen::{Error, Result};

#[derive(Parser)]
#[command(name = "wordlen", version, about = "Word-length predictions from frequency and surprisal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenise, filter and count a text file.
    Count {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train the interpolated n-gram model.
    TrainLm {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        lm: LmArgs,
        #[arg(long)]
        lowercase: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a text file with a trained model; writes per-token surprisal.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lowercase: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// The three per-word length predictions.
    Predict {
        /// Frequency table (TSV) for the Zipf estimator.
        #[arg(long)]
        freq: PathBuf,
        /// Surprisal file (external format) for the CCH estimators.
        #[arg(long)]
        surprisal: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build a K-ary Huffman code for a frequency table.
    Code {
        #[arg(long)]
        freq: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Optimal relaxed lengths for a CCH objective.
    Optimize {
        #[arg(long)]
        surprisal: PathBuf,
        #[arg(long)]
        capacity: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Cch)]
        objective: ObjectiveArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit the channel capacity to observed word lengths.
    FitCapacity {
        #[arg(long)]
        surprisal: PathBuf,
        #[arg(long)]
        freq: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Score prediction files against observed lengths.
    Evaluate {
        /// Prediction or length TSV files.
        #[arg(long = "predictions", required = true)]
        predictions: Vec<PathBuf>,
        /// Frequency table supplying observed lengths and weights.
        #[arg(long)]
        freq: PathBuf,
        #[arg(long, default_value = "xx")]
        language: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Full pipeline from text to report.
    Run(RunArgs),
    /// λ-grid and training-size sensitivity sweeps.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated λ values; the default grid when given without a value.
        #[arg(long, num_args = 0..=1, default_missing_value = "grid", value_name = "LIST")]
        sweep_lambda: Option<String>,
        /// Comma-separated training sizes; a log-uniform grid when given without a value.
        #[arg(long, num_args = 0..=1, default_missing_value = "grid", value_name = "LIST")]
        sweep_train_sizes: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Cch,
    CchLower,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct CorpusArgs {
    /// Word filtering protocol: all, nopunct or alpha.
    #[arg(long, default_value = "all")]
    filter: String,
    /// Keep only the N most frequent types.
    #[arg(long)]
    top_n: Option<usize>,
    /// File whose characters form the alphabet for `--filter alpha`.
    #[arg(long)]
    alphabet: Option<PathBuf>,
    #[arg(long)]
    lowercase: bool,
}

impl CorpusArgs {
    fn config(&self) -> Result<CorpusConfig> {
        let mut c = CorpusConfig::default().with_filter(self.filter.parse::<FilterProtocol>()?).with_top_n(self.top_n)?;
        if let Some(path) = &self.alphabet {
            c = c.with_alphabet_file(path)?;
        }
        c.lowercase = self.lowercase;
        Ok(c)
    }
}

#[derive(Args)]
struct LmArgs {
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
    /// Comma-separated interpolation weights, lowest order first.
    #[arg(long, default_value = "0.2,0.3,0.5")]
    weights: String,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// External per-token surprisal; replaces the n-gram model.
    #[arg(long)]
    surprisal: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    lm: LmArgs,
    /// Comma-separated λ values.
    #[arg(long, default_value = "1")]
    lambda: String,
    /// `fit` or `fixed:<value>`.
    #[arg(long, default_value = "fit")]
    capacity: String,
    /// Also emit a K-ary Huffman code of the training vocabulary.
    #[arg(long)]
    code_k: Option<usize>,
    #[arg(long, default_value = "xx")]
    language: String,
    #[arg(long)]
    output_dir: PathBuf,
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| Error::Config(format!("invalid {what} value {v:?}"))))
        .collect()
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::new(&self.train, &self.test, &self.output_dir);
        c.external = self.surprisal.clone();
        c.corpus = self.corpus.config()?;
        c.order = self.lm.order;
        c.weights = parse_list("weight", &self.lm.weights)?;
        c.lambdas = parse_list("lambda", &self.lambda)?;
        c.capacity = self.capacity.parse()?;
        c.code_k = self.code_k;
        c.language = self.language.clone();
        Ok(c)
    }
}

fn reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn lowercase_config(lowercase: bool) -> CorpusConfig {
    CorpusConfig { lowercase, ..CorpusConfig::default() }
}

fn read_freq(path: &Path) -> Result<FrequencyTable> {
    FrequencyTable::read_tsv(reader(path)?)
}

fn read_surprisal(path: &Path) -> Result<SurprisalTable<f64>> {
    ingest_external(reader(path)?)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Count { input, corpus, output } => {
            let config = corpus.config()?;
            let tokens = ingest_and_filter(reader(&input)?, &config)?;
            let mut out = writer(output.as_deref())?;
            count_frequencies(&tokens, &config).write_tsv(&mut out)?;
            out.flush()?;
        }
        Command::TrainLm { input, lm, lowercase, output } => {
            let tokens = ingest_and_filter(reader(&input)?, &lowercase_config(lowercase))?;
            let weights: Vec<f64> = parse_list("weight", &lm.weights)?;
            train_ngram(&tokens, lm.order, &weights)?.save(&output)?;
        }
        Command::Score { model, input, lowercase, output } => {
            let model = NgramModel::load(&model)?;
            let tokens = ingest_and_filter(reader(&input)?, &lowercase_config(lowercase))?;
            let table: SurprisalTable<f64> = score_corpus(&model, &tokens);
            let mut out = writer(output.as_deref())?;
            table.write_tsv(&mut out)?;
            out.flush()?;
        }
        Command::Predict { freq, surprisal, output } => {
            let freq = read_freq(&freq)?;
            let table = read_surprisal(&surprisal)?;
            let mut out = writer(output.as_deref())?;
            writeln!(out, "{}", PREDICTION_HEADER.join("\t"))?;
            for set in [predict_zipf(&freq), predict_cch_lower(&table), predict_cch(&table)] {
                for (form, v) in &set.per_word {
                    writeln!(out, "{form}\t{}\t{}", set.hypothesis.label(), format_sig17(*v))?;
                }
                if !set.excluded.is_empty() {
                    eprintln!("{}: excluded {} word(s) with undefined predictions", set.hypothesis, set.excluded.len());
                }
            }
            out.flush()?;
        }
        Command::Code { freq, k, output } => {
            let book = build_huffman_k(&read_freq(&freq)?, k)?;
            let mut out = writer(output.as_deref())?;
            book.write_tsv(&mut out)?;
            out.flush()?;
        }
        Command::Optimize { surprisal, capacity, lambda, objective, output } => {
            let objective = match objective {
                ObjectiveArg::Cch => Objective::Cch,
                ObjectiveArg::CchLower => Objective::CchLower,
            };
            let spec = CostSpec::new(capacity, lambda, objective)?;
            let lengths = optimize_lengths(&read_surprisal(&surprisal)?, &spec)?;
            let mut out = writer(output.as_deref())?;
            lengths.write_tsv(&mut out, &objective.to_string())?;
            out.flush()?;
        }
        Command::FitCapacity { surprisal, freq, lambda } => {
            let freq = read_freq(&freq)?;
            let c = fit_capacity(&read_surprisal(&surprisal)?, &LengthAssignment::observed(&freq), &freq, lambda)?;
            println!("{}", format_sig17(c));
        }
        Command::Evaluate { predictions, freq, language, format, output } => {
            let freq = read_freq(&freq)?;
            let mut report = EvalReport::new(language, "")?;
            for path in &predictions {
                for (label, per_word) in read_labelled_tsv::<f64, _>(reader(path)?)? {
                    let metrics = evaluate(&per_word, &freq)?;
                    report.insert(label, metrics, freq.len() - metrics.n_words);
                }
            }
            let text = match format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            let mut out = writer(output.as_deref())?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        Command::Run(args) => {
            let report = run_pipeline(&args.config()?)?;
            print!("{}", report.to_text());
        }
        Command::Sweep { run, sweep_lambda, sweep_train_sizes } => {
            let config = run.config()?;
            let lambdas = match sweep_lambda.as_deref() {
                None => None,
                Some("grid") => Some(lambda_grid()),
                Some(list) => Some(parse_list("lambda", list)?),
            };
            let train_sizes = match sweep_train_sizes.as_deref() {
                None => None,
                Some("grid") => {
                    let available = ingest_and_filter(reader(&config.train)?, &CorpusConfig::default())?.len();
                    Some(default_train_sizes(available))
                }
                Some(list) => Some(parse_list("training size", list)?),
            };
            run_sweeps(&config, &SweepOptions { lambdas, train_sizes })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
