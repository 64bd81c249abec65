mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  contract or training error (bad option combination, model/dataset mismatch,
     no movie could be predicted)
  2  I/O error (missing or unwritable file)
  3  parse or validation error in an input file
  4  usage error (bad flag, bad config value)

Settings are read from built-in defaults, then --config, then flags.";

#[derive(Debug, Parser)]
#[command(name = "genre-nb", version, about = "Predict movie genres from who rated them", after_help = EXIT_CODES)]
struct Cli {
    /// Flat `key = value` configuration file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every random split
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for evaluation (0 = all cores)
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Output directory for default file locations
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse u.data and u.item, report anomalies, write the dataset file
    Ingest(IngestArgs),
    /// Train one model per rating value
    Train(TrainArgs),
    /// Predict genres for movies with a trained model
    Predict(PredictArgs),
    /// Run the learning-curve experiment
    Evaluate(EvaluateArgs),
    /// Export the genre correlation matrix
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Ratings file (u.data layout)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Item file (u.item layout)
    #[arg(long)]
    items: Option<PathBuf>,
    /// Genre name file (u.genre layout)
    #[arg(long)]
    genres: Option<PathBuf>,
    /// Dataset file to write [default: <out>/dataset.tsv]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DatasetArg {
    /// Dataset file written by `ingest` [default: <out>/dataset.tsv]
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelOptionArgs {
    /// Prior over genres
    #[arg(long, value_name = "empirical|uniform")]
    prior: Option<String>,
    /// Denominator of the smoothed estimate
    #[arg(long, value_name = "users|textbook")]
    smoothing: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// Rating values, comma-separated
    #[arg(long, value_name = "R[,R..]", value_delimiter = ',', value_parser = parse_rating_list)]
    rating: Vec<genre_nb::dataset::Rating>,
    /// Train on these movie ids, comma-separated [default: all labeled movies]
    #[arg(long, value_delimiter = ',', conflicts_with = "train_fraction")]
    movies: Option<Vec<u32>>,
    /// Train on a seeded random fraction of the labeled movies
    #[arg(long, value_name = "F")]
    train_fraction: Option<f64>,
    #[command(flatten)]
    model: ModelOptionArgs,
    /// Model file; with several ratings `.rN` is inserted before the extension
    /// [default: <out>/model.rN.txt]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write P(u|g,r) and log P(m|g,r) as CSV next to each model
    #[arg(long)]
    export_matrices: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model file written by `train`
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    dataset: DatasetArg,
    /// Movie ids, comma-separated [default: every movie]
    #[arg(long, value_delimiter = ',')]
    movies: Option<Vec<u32>>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Correlation threshold for the similar verdict
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// Rating values, comma-separated
    #[arg(long)]
    ratings: Option<String>,
    /// Training fractions, comma-separated, each in (0, 0.8]
    #[arg(long)]
    fractions: Option<String>,
    /// Random splits per training fraction
    #[arg(long)]
    repetitions: Option<usize>,
    /// Correlation threshold for the similar verdict
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    model: ModelOptionArgs,
    /// Movies the correlation is computed from
    #[arg(long, value_name = "training|full")]
    correlation_source: Option<String>,
    /// Correlate genre indicators, or indicators weighted by 1/genre count
    #[arg(long, value_name = "membership|weights")]
    estimator: Option<String>,
    /// Draw a new test set per repetition, or one per master seed
    #[arg(long, value_name = "resample|fixed")]
    test_mode: Option<String>,
    /// Also write one row per repetition to runs.csv
    #[arg(long)]
    runs: bool,
    /// Image backend for the learning curves
    #[arg(long, value_enum, default_value = "svg")]
    plot: plot::BackendKind,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    #[command(flatten)]
    dataset: DatasetArg,
    /// All labeled movies, or a seeded training split
    #[arg(long, value_name = "training|full", default_value = "full")]
    source: String,
    /// Training fraction when --source training
    #[arg(long, default_value_t = genre_nb::evaluation::MAX_TRAIN_FRACTION)]
    train_fraction: f64,
    /// Correlate genre indicators, or indicators weighted by 1/genre count
    #[arg(long, value_name = "membership|weights")]
    estimator: Option<String>,
    /// CSV file [default: <out>/correlation.csv]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_rating_list(s: &str) -> Result<genre_nb::dataset::Rating, String> {
    let r: u8 = s.parse().map_err(|_| format!("not a rating: {s:?}"))?;
    genre_nb::dataset::Rating::new(r).map_err(|e| e.to_string())
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Lib {
        path: Option<PathBuf>,
        source: genre_nb::Error,
    },
    /// Every requested item failed; details were already reported.
    AllFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn lib(path: &Path) -> impl FnOnce(genre_nb::Error) -> CliError + '_ {
        move |source| match source {
            genre_nb::Error::Io(e) => CliError::io(path, e),
            source => CliError::Lib {
                path: Some(path.to_path_buf()),
                source,
            },
        }
    }

    fn exit_code(&self) -> u8 {
        use genre_nb::Error as E;
        match self {
            CliError::Usage(_) => 4,
            CliError::Io { .. }
            | CliError::Lib {
                source: E::Io(_), ..
            } => 2,
            CliError::Lib {
                source: E::Parse { .. } | E::Validation(_),
                ..
            } => 3,
            CliError::Lib { .. } | CliError::AllFailed(_) => 1,
        }
    }
}

impl From<genre_nb::Error> for CliError {
    fn from(source: genre_nb::Error) -> Self {
        CliError::Lib { path: None, source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::AllFailed(m) => write!(f, "{m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Lib {
                path: Some(path),
                source: genre_nb::Error::Parse { line, message },
            } => write!(f, "{}:{line}: {message}", path.display()),
            CliError::Lib {
                path: Some(path),
                source,
            } => write!(f, "{}: {source}", path.display()),
            CliError::Lib { path: None, source } => write!(f, "{source}"),
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    let set = |config: &mut RunConfig, key: &str, value: &Option<String>| match value {
        Some(v) => config.set(key, v),
        None => Ok(()),
    };
    let set_model = |config: &mut RunConfig, m: &ModelOptionArgs| {
        set(config, "prior", &m.prior)?;
        set(config, "smoothing", &m.smoothing)
    };
    match &cli.command {
        Command::Ingest(a) => {
            if a.data.is_some() {
                config.data = a.data.clone();
            }
            if a.items.is_some() {
                config.items = a.items.clone();
            }
            if a.genres.is_some() {
                config.genres = a.genres.clone();
            }
        }
        Command::Train(a) => {
            set_model(&mut config, &a.model)?;
            if !a.rating.is_empty() {
                config.ratings = a.rating.clone();
            }
        }
        Command::Predict(a) => {
            if let Some(t) = a.threshold {
                config.threshold = t;
            }
        }
        Command::Evaluate(a) => {
            set(&mut config, "ratings", &a.ratings)?;
            set(&mut config, "fractions", &a.fractions)?;
            if let Some(n) = a.repetitions {
                config.repetitions = n;
            }
            if let Some(t) = a.threshold {
                config.threshold = t;
            }
            set_model(&mut config, &a.model)?;
            set(&mut config, "correlation_source", &a.correlation_source)?;
            set(&mut config, "estimator", &a.estimator)?;
            set(&mut config, "test_mode", &a.test_mode)?;
        }
        Command::Correlate(a) => {
            set(&mut config, "estimator", &a.estimator)?;
            set(&mut config, "correlation_source", &Some(a.source.clone()))?;
        }
    }
    let dataset = match &cli.command {
        Command::Train(a) => &a.dataset.dataset,
        Command::Predict(a) => &a.dataset.dataset,
        Command::Evaluate(a) => &a.dataset.dataset,
        Command::Correlate(a) => &a.dataset.dataset,
        Command::Ingest(_) => &None,
    };
    if dataset.is_some() {
        config.dataset = dataset.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = build_config(&cli)?;
    if config.jobs > 0 {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global();
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(&config, a.out),
        Command::Train(a) => commands::train(
            &config,
            commands::TrainRequest {
                movies: a.movies,
                train_fraction: a.train_fraction,
                out: a.out,
                export_matrices: a.export_matrices,
            },
        ),
        Command::Predict(a) => {
            commands::predict(&config, &a.model, a.movies, matches!(a.format, Format::Csv))
        }
        Command::Evaluate(a) => commands::evaluate(&config, a.runs, a.plot.backend().as_ref()),
        Command::Correlate(a) => commands::correlate(&config, a.train_fraction, a.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
