//! Random-subsampling evaluation: train on a fraction of the labeled movies,
//! predict the genre of a disjoint 20% test set, and aggregate exact and
//! with-similar accuracy over repetitions into learning curves.
//!
//! # Seeds
//!
//! A master seed expands into one seed per `(rating, fraction)` cell:
//!
//! ```text
//! cell_seed  = mix(mix(master, rating), round(fraction * 1e6))
//! split_seed = mix(cell_seed, repetition)
//! ```
//!
//! where `mix(a, b)` is the SplitMix64 finalizer applied to
//! `a ^ splitmix64(b)`. The split of repetition `k` of any cell can therefore
//! be regenerated without running the rest of the grid. Splits shuffle the
//! ascending movie list with a ChaCha8 stream seeded by `split_seed`.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::correlation::{compute_correlation, CorrelationEstimator, GenreCorrelationMatrix};
use crate::dataset::{Dataset, IndicatorMatrix, Rating};
use crate::error::{Error, Result};
use crate::model::{keyword_enum, train_preference_model, FeatureVector, TrainOptions};

/// Share of all labeled movies held out for testing.
pub const TEST_FRACTION: f64 = 0.2;
/// Largest training share that still leaves room for the test set.
pub const MAX_TRAIN_FRACTION: f64 = 1.0 - TEST_FRACTION;
pub const DEFAULT_REPETITIONS: usize = 20;
pub const DEFAULT_MASTER_SEED: u64 = 2017;

const FIXED_TEST_STREAM: u64 = 0x7465_7374_5f73_6574;

/// 1%, 5%, then 5% steps up to 80%.
pub fn default_fractions() -> Vec<f64> {
    std::iter::once(0.01)
        .chain((1..=16).map(|k| (5 * k) as f64 / 100.0))
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

pub fn cell_seed(master: u64, rating: Rating, train_fraction: f64) -> u64 {
    let ppm = (train_fraction * 1e6).round() as u64;
    mix(mix(master, rating.value() as u64), ppm)
}

fn subset_size(fraction: f64, n: usize) -> usize {
    // tolerance keeps e.g. 0.15 * 1680 from landing on 251.999...
    (fraction * n as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub repetition: u32,
}

impl SplitSpec {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix(self.seed, self.repetition as u64))
    }

    fn check(&self) -> Result<()> {
        let f = self.train_fraction;
        if !(f > 0.0 && f + TEST_FRACTION <= 1.0 + 1e-9) {
            return Err(Error::Contract(format!(
                "training fraction {f} outside (0, {MAX_TRAIN_FRACTION}]"
            )));
        }
        Ok(())
    }
}

/// Disjoint training and test movie ids, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<u32>,
    pub test: Vec<u32>,
}

impl Split {
    pub fn is_disjoint(&self) -> bool {
        // both sides are sorted
        let (mut i, mut j) = (0, 0);
        while i < self.train.len() && j < self.test.len() {
            match self.train[i].cmp(&self.test[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }
}

fn sorted_unique(movies: &[u32]) -> Vec<u32> {
    let mut v = movies.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn draw_train(pool: &mut [u32], n_train: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    pool.shuffle(rng);
    let mut train = pool[..n_train].to_vec();
    train.sort_unstable();
    train
}

/// Draws `⌊0.2·|M|⌋` test movies, then `⌊f·|M|⌋` training movies from the rest.
pub fn split(movies: &[u32], spec: &SplitSpec) -> Result<Split> {
    spec.check()?;
    let movies = sorted_unique(movies);
    let n_test = subset_size(TEST_FRACTION, movies.len());
    let n_train = train_size(spec.train_fraction, movies.len())?;
    let mut rng = spec.rng();
    let mut shuffled = movies;
    shuffled.shuffle(&mut rng);
    let mut test = shuffled[..n_test].to_vec();
    test.sort_unstable();
    let train = draw_train(&mut shuffled[n_test..], n_train, &mut rng);
    Ok(Split { train, test })
}

fn train_size(fraction: f64, n: usize) -> Result<usize> {
    let n_train = subset_size(fraction, n);
    if n_train == 0 {
        return Err(Error::Contract(format!(
            "training fraction {fraction} of {n} movies selects no movie"
        )));
    }
    if n_train + subset_size(TEST_FRACTION, n) > n {
        return Err(Error::Contract(format!(
            "training fraction {fraction} leaves no room for the test set"
        )));
    }
    Ok(n_train)
}

/// The test set shared by every repetition in [`TestMode::Fixed`].
pub fn fixed_test_set(movies: &[u32], master_seed: u64) -> Vec<u32> {
    let mut shuffled = sorted_unique(movies);
    let n_test = subset_size(TEST_FRACTION, shuffled.len());
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(
        master_seed,
        FIXED_TEST_STREAM,
    )));
    let mut test = shuffled[..n_test].to_vec();
    test.sort_unstable();
    test
}

/// Draws the training movies from `movies \ test`.
pub fn split_with_test(movies: &[u32], test: &[u32], spec: &SplitSpec) -> Result<Split> {
    spec.check()?;
    let movies = sorted_unique(movies);
    let test = sorted_unique(test);
    let n_train = train_size(spec.train_fraction, movies.len())?;
    let mut pool: Vec<u32> = movies
        .into_iter()
        .filter(|m| test.binary_search(m).is_err())
        .collect();
    let mut rng = spec.rng();
    let train = draw_train(&mut pool, n_train, &mut rng);
    Ok(Split { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationSource {
    /// Training movies of each split only.
    #[default]
    Training,
    /// All labeled movies.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestMode {
    /// Fresh test set every repetition.
    #[default]
    Resample,
    /// One test set per master seed.
    Fixed,
}

keyword_enum!(CorrelationSource { Training => "training", Full => "full" });
keyword_enum!(TestMode { Resample => "resample", Fixed => "fixed" });

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub threshold: f64,
    pub train: TrainOptions,
    pub correlation_source: CorrelationSource,
    pub estimator: CorrelationEstimator,
    pub test_mode: TestMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            threshold: crate::correlation::DEFAULT_SIMILARITY_THRESHOLD,
            train: TrainOptions::default(),
            correlation_source: CorrelationSource::default(),
            estimator: CorrelationEstimator::default(),
            test_mode: TestMode::default(),
        }
    }
}

/// Outcome of one train/test run. Every test movie lands in exactly one of
/// exact, similar or wrong.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPair {
    pub exact: f64,
    pub with_similar: f64,
    pub num_test: usize,
    pub num_exact: usize,
    pub num_similar: usize,
    pub num_wrong: usize,
    /// Test movies nobody gave this rating (predicted from priors and the
    /// all-absent likelihood).
    pub num_zero_feature: usize,
}

/// Outcome for a single test movie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Exact,
    Similar,
    Wrong,
}

/// Labeled dataset with its five indicator matrices, ready for repeated runs.
pub struct Evaluator<'a> {
    dataset: &'a Dataset,
    options: EvalOptions,
    matrices: Vec<IndicatorMatrix>,
    movies: Vec<u32>,
    full_correlation: Option<GenreCorrelationMatrix>,
}

impl<'a> Evaluator<'a> {
    pub fn new(dataset: &'a Dataset, options: EvalOptions) -> Result<Self> {
        if options.threshold.is_nan() || options.threshold == f64::NEG_INFINITY {
            return Err(Error::Contract(format!(
                "similarity threshold {} is not usable",
                options.threshold
            )));
        }
        let movies = dataset.genres.labeled_movies();
        if movies.is_empty() {
            return Err(Error::Contract("dataset has no labeled movies".to_string()));
        }
        let full_correlation = match options.correlation_source {
            CorrelationSource::Full => Some(compute_correlation(
                &dataset.genres,
                &movies,
                options.estimator,
            )?),
            CorrelationSource::Training => None,
        };
        Ok(Evaluator {
            dataset,
            options,
            matrices: Rating::ALL.iter().map(|&r| dataset.indicator(r)).collect(),
            movies,
            full_correlation,
        })
    }

    pub fn options(&self) -> &EvalOptions {
        &self.options
    }

    /// Labeled movies, the population splits are drawn from.
    pub fn movies(&self) -> &[u32] {
        &self.movies
    }

    pub fn matrix(&self, rating: Rating) -> &IndicatorMatrix {
        &self.matrices[rating.value() as usize - 1]
    }

    /// Splits by `spec` (fresh test set) and evaluates.
    pub fn evaluate_once(&self, rating: Rating, spec: &SplitSpec) -> Result<AccuracyPair> {
        let split = split(&self.movies, spec)?;
        self.evaluate_split(rating, &split)
    }

    /// Trains on `split.train`, predicts every `split.test` movie.
    pub fn evaluate_split(&self, rating: Rating, split: &Split) -> Result<AccuracyPair> {
        if !split.is_disjoint() {
            return Err(Error::Contract(
                "training and test sets overlap".to_string(),
            ));
        }
        if split.test.is_empty() {
            return Err(Error::Contract("empty test set".to_string()));
        }
        let genres = &self.dataset.genres;
        let matrix = self.matrix(rating);
        let model = train_preference_model(matrix, genres, &split.train, &self.options.train)?;
        let local;
        let correlation = match &self.full_correlation {
            Some(c) => c,
            None => {
                local = compute_correlation(genres, &split.train, self.options.estimator)?;
                &local
            }
        };

        let mut pair = AccuracyPair {
            exact: 0.0,
            with_similar: 0.0,
            num_test: split.test.len(),
            num_exact: 0,
            num_similar: 0,
            num_wrong: 0,
            num_zero_feature: 0,
        };
        for &movie in &split.test {
            let features = FeatureVector::from_matrix(matrix, movie);
            if features.is_empty() {
                pair.num_zero_feature += 1;
            }
            let predicted = model.predict(&features)?;
            let truth = genres.genres_of(movie)?;
            match classify(correlation, predicted, truth, self.options.threshold)? {
                Verdict::Exact => pair.num_exact += 1,
                Verdict::Similar => pair.num_similar += 1,
                Verdict::Wrong => pair.num_wrong += 1,
            }
        }
        let n = pair.num_test as f64;
        pair.exact = pair.num_exact as f64 / n;
        pair.with_similar = (pair.num_exact + pair.num_similar) as f64 / n;
        Ok(pair)
    }

    /// Runs `repetitions` splits for every `(rating, fraction)` cell.
    pub fn learning_curve(
        &self,
        ratings: &[Rating],
        fractions: &[f64],
        repetitions: usize,
        master_seed: u64,
    ) -> Result<EvaluationReport> {
        if ratings.is_empty() || fractions.is_empty() {
            return Err(Error::Contract(
                "no ratings or fractions to evaluate".to_string(),
            ));
        }
        if repetitions == 0 {
            return Err(Error::Contract(
                "repetitions must be at least 1".to_string(),
            ));
        }
        for &f in fractions {
            if !(f > 0.0 && f <= MAX_TRAIN_FRACTION + 1e-12) {
                return Err(Error::Contract(format!(
                    "training fraction {f} outside (0, {MAX_TRAIN_FRACTION}]"
                )));
            }
            train_size(f, self.movies.len())?;
        }
        let fixed_test = match self.options.test_mode {
            TestMode::Fixed => Some(fixed_test_set(&self.movies, master_seed)),
            TestMode::Resample => None,
        };

        let jobs: Vec<(Rating, f64, u32)> = ratings
            .iter()
            .flat_map(|&r| {
                fractions
                    .iter()
                    .flat_map(move |&f| (0..repetitions as u32).map(move |k| (r, f, k)))
            })
            .collect();
        let run = |&(rating, fraction, repetition): &(Rating, f64, u32)| -> Result<RunRecord> {
            let spec = SplitSpec {
                train_fraction: fraction,
                seed: cell_seed(master_seed, rating, fraction),
                repetition,
            };
            let split = match &fixed_test {
                Some(test) => split_with_test(&self.movies, test, &spec)?,
                None => split(&self.movies, &spec)?,
            };
            Ok(RunRecord {
                rating,
                train_fraction: fraction,
                repetition,
                seed: spec.seed,
                num_train: split.train.len(),
                accuracy: self.evaluate_split(rating, &split)?,
            })
        };

        #[cfg(feature = "parallel")]
        let runs: Vec<RunRecord> = {
            use rayon::prelude::*;
            jobs.par_iter().map(run).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let runs: Vec<RunRecord> = jobs.iter().map(run).collect::<Result<_>>()?;

        let cells = runs
            .chunks(repetitions)
            .map(CellSummary::from_runs)
            .collect();
        Ok(EvaluationReport {
            master_seed,
            repetitions,
            cells,
            runs,
        })
    }
}

/// Exact if `predicted` is one of the true genres, else similar if it
/// correlates with one of them above `threshold`, else wrong.
pub fn classify(
    correlation: &GenreCorrelationMatrix,
    predicted: usize,
    truth: &[usize],
    threshold: f64,
) -> Result<Verdict> {
    if truth.contains(&predicted) {
        Ok(Verdict::Exact)
    } else if correlation.is_similar(predicted, truth, threshold)? {
        Ok(Verdict::Similar)
    } else {
        Ok(Verdict::Wrong)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub rating: Rating,
    pub train_fraction: f64,
    pub repetition: u32,
    pub seed: u64,
    pub num_train: usize,
    pub accuracy: AccuracyPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub rating: Rating,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub exact_mean: f64,
    pub exact_std: f64,
    pub similar_mean: f64,
    pub similar_std: f64,
    /// Summed over repetitions.
    pub zero_feature_count: usize,
}

impl CellSummary {
    fn from_runs(runs: &[RunRecord]) -> Self {
        let exact: Vec<f64> = runs.iter().map(|r| r.accuracy.exact).collect();
        let similar: Vec<f64> = runs.iter().map(|r| r.accuracy.with_similar).collect();
        let (exact_mean, exact_std) = mean_std(&exact);
        let (similar_mean, similar_std) = mean_std(&similar);
        CellSummary {
            rating: runs[0].rating,
            train_fraction: runs[0].train_fraction,
            repetitions: runs.len(),
            exact_mean,
            exact_std,
            similar_mean,
            similar_std,
            zero_feature_count: runs.iter().map(|r| r.accuracy.num_zero_feature).sum(),
        }
    }
}

/// Mean and sample (n − 1) standard deviation; the deviation of a single
/// value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub master_seed: u64,
    pub repetitions: usize,
    /// One per `(rating, fraction)`, ratings outermost, in request order.
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunRecord>,
}

pub const REPORT_HEADER: &str =
    "rating,train_fraction,repetitions,exact_mean,exact_std,similar_mean,similar_std,zero_feature_count";
pub const RUNS_HEADER: &str =
    "rating,train_fraction,repetition,seed,num_train,num_test,num_exact,num_similar,num_wrong,num_zero_feature,exact,with_similar";

fn write_preamble<W: Write>(out: &mut W, preamble: &[String]) -> Result<()> {
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

impl EvaluationReport {
    pub fn cell(&self, rating: Rating, train_fraction: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.rating == rating && (c.train_fraction - train_fraction).abs() < 1e-12)
    }

    /// Summary CSV, one row per cell, after `# `-prefixed preamble lines.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        write_preamble(&mut out, preamble)?;
        writeln!(out, "{REPORT_HEADER}")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
                c.rating,
                c.train_fraction,
                c.repetitions,
                c.exact_mean,
                c.exact_std,
                c.similar_mean,
                c.similar_std,
                c.zero_feature_count
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// One row per repetition.
    pub fn write_runs_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        write_preamble(&mut out, preamble)?;
        writeln!(out, "{RUNS_HEADER}")?;
        for r in &self.runs {
            let a = &r.accuracy;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
                r.rating,
                r.train_fraction,
                r.repetition,
                r.seed,
                r.num_train,
                a.num_test,
                a.num_exact,
                a.num_similar,
                a.num_wrong,
                a.num_zero_feature,
                a.exact,
                a.with_similar
            )?;
        }
        out.flush()?;
        Ok(())
    }
}
