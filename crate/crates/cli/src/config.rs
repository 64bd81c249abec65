//! Run configuration: defaults, a flat `key = value` file, then flags.
//!
//! ```text
//! # comments and blank lines are ignored
//! data = data/ml-100k/u.data
//! items = data/ml-100k/u.item
//! genres = data/ml-100k/u.genre
//! dataset = out/dataset.tsv
//! ratings = 1,2,3,4,5
//! fractions = 0.01,0.05,0.1
//! repetitions = 20
//! seed = 2017
//! threshold = 0.1
//! prior = empirical            # empirical | uniform
//! smoothing = users            # users | textbook
//! correlation_source = training  # training | full
//! estimator = membership       # membership | weights
//! test_mode = resample         # resample | fixed
//! jobs = 0                     # 0 = all cores
//! out = out
//! ```

use std::path::{Path, PathBuf};

use genre_nb::correlation::{CorrelationEstimator, DEFAULT_SIMILARITY_THRESHOLD};
use genre_nb::dataset::Rating;
use genre_nb::evaluation::{
    default_fractions, CorrelationSource, EvalOptions, TestMode, DEFAULT_MASTER_SEED,
    DEFAULT_REPETITIONS, MAX_TRAIN_FRACTION,
};
use genre_nb::model::{PriorMode, Smoothing, TrainOptions};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub items: Option<PathBuf>,
    pub genres: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub ratings: Vec<Rating>,
    pub fractions: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub threshold: f64,
    pub prior: PriorMode,
    pub smoothing: Smoothing,
    pub correlation_source: CorrelationSource,
    pub estimator: CorrelationEstimator,
    pub test_mode: TestMode,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            items: None,
            genres: None,
            dataset: None,
            ratings: Rating::ALL.to_vec(),
            fractions: default_fractions(),
            repetitions: DEFAULT_REPETITIONS,
            seed: DEFAULT_MASTER_SEED,
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
            prior: PriorMode::default(),
            smoothing: Smoothing::default(),
            correlation_source: CorrelationSource::default(),
            estimator: CorrelationEstimator::default(),
            test_mode: TestMode::default(),
            jobs: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn parse_ratings(s: &str) -> Result<Vec<Rating>, CliError> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<u8>()
                .ok()
                .and_then(|r| Rating::new(r).ok())
                .ok_or_else(|| usage(format!("rating must be 1..=5, got {v:?}")))
        })
        .collect()
}

pub fn parse_fractions(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("not a fraction: {v:?}")))
        })
        .collect()
}

fn parse_keyword<T: std::str::FromStr<Err = genre_nb::Error>>(v: &str) -> Result<T, CliError> {
    v.parse().map_err(|e: genre_nb::Error| usage(e.to_string()))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| usage(format!("config key `{key}`: cannot parse {v:?}")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim() {
            "data" => self.data = Some(v.into()),
            "items" => self.items = Some(v.into()),
            "genres" => self.genres = Some(v.into()),
            "dataset" => self.dataset = Some(v.into()),
            "ratings" => self.ratings = parse_ratings(v)?,
            "fractions" => self.fractions = parse_fractions(v)?,
            "repetitions" => self.repetitions = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "threshold" => self.threshold = parse_num(key, v)?,
            "prior" => self.prior = parse_keyword(v)?,
            "smoothing" => self.smoothing = parse_keyword(v)?,
            "correlation_source" => self.correlation_source = parse_keyword(v)?,
            "estimator" => self.estimator = parse_keyword(v)?,
            "test_mode" => self.test_mode = parse_keyword(v)?,
            "jobs" => self.jobs = parse_num(key, v)?,
            "out" => self.out = v.into(),
            other => return Err(usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_file_text(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.threshold.is_finite() {
            return Err(usage(format!(
                "threshold must be finite, got {}",
                self.threshold
            )));
        }
        if self.repetitions == 0 {
            return Err(usage("repetitions must be at least 1"));
        }
        if self.ratings.is_empty() || self.fractions.is_empty() {
            return Err(usage("ratings and fractions must not be empty"));
        }
        if let Some(f) = self
            .fractions
            .iter()
            .find(|&&f| !(f > 0.0 && f <= MAX_TRAIN_FRACTION + 1e-12))
        {
            return Err(usage(format!(
                "training fraction {f} outside (0, {MAX_TRAIN_FRACTION}]"
            )));
        }
        Ok(())
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            threshold: self.threshold,
            train: self.train_options(),
            correlation_source: self.correlation_source,
            estimator: self.estimator,
            test_mode: self.test_mode,
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            smoothing: self.smoothing,
            prior_mode: self.prior,
        }
    }

    /// Path of the validated dataset file: explicit, else `<out>/dataset.tsv`.
    pub fn dataset_path(&self) -> PathBuf {
        self.dataset
            .clone()
            .unwrap_or_else(|| self.out.join("dataset.tsv"))
    }

    /// Every model-relevant setting as `key=value`, in a fixed order. Paths
    /// and `jobs` are left out: they do not change results.
    pub fn echo(&self) -> Vec<String> {
        let join = |v: Vec<String>| v.join(",");
        vec![
            format!(
                "ratings={}",
                join(self.ratings.iter().map(|r| r.to_string()).collect())
            ),
            format!(
                "fractions={}",
                join(self.fractions.iter().map(|f| f.to_string()).collect())
            ),
            format!("repetitions={}", self.repetitions),
            format!("seed={}", self.seed),
            format!("threshold={}", self.threshold),
            format!("prior={}", self.prior),
            format!("smoothing={}", self.smoothing),
            format!("correlation_source={}", self.correlation_source),
            format!("estimator={}", self.estimator),
            format!("test_mode={}", self.test_mode),
        ]
    }

    /// First 16 hex digits of SHA-256 over [`RunConfig::echo`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().join("\n").as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Comment lines stamped at the top of every output file.
    pub fn provenance(&self) -> Vec<String> {
        let mut lines = vec![
            format!("genre-nb {}", env!("CARGO_PKG_VERSION")),
            format!("config-hash {}", self.hash()),
            format!("seed {}", self.seed),
        ];
        lines.extend(self.echo().into_iter().map(|kv| format!("config {kv}")));
        lines
    }
}
