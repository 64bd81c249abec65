use genre_nb::correlation::{compute_correlation, CorrelationEstimator, GenreCorrelationMatrix};
use genre_nb::dataset::{self, canonical, Dataset, Rating};
use genre_nb::evaluation::{
    cell_seed, classify, split, EvalOptions, Evaluator, SplitSpec, Verdict,
};
use genre_nb::model::{train_preference_model, FeatureVector, TrainOptions};
use genre_nb::{Error, Result};
use serde::Serialize;

/// Upper bound on `fractions × repetitions` for one learning-curve request.
pub const MAX_CURVE_RUNS: usize = 2000;

pub struct Explorer {
    dataset: Dataset,
    labeled: Vec<u32>,
    correlation: GenreCorrelationMatrix,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub users: usize,
    pub movies: usize,
    pub labeled_movies: usize,
    pub ratings: usize,
    pub genres: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub genres: Vec<String>,
    /// Row-major; `None` where a genre has no variance.
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Serialize)]
pub struct PosteriorView {
    pub movie: u32,
    pub title: String,
    pub true_genres: Vec<String>,
    pub rated_by: usize,
    pub training_movies: usize,
    pub predicted: String,
    pub verdict: &'static str,
    pub genres: Vec<String>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct CurveView {
    pub rating: u8,
    pub fractions: Vec<f64>,
    pub exact_mean: Vec<f64>,
    pub exact_std: Vec<f64>,
    pub similar_mean: Vec<f64>,
    pub similar_std: Vec<f64>,
}

impl Explorer {
    pub fn new(dataset: Dataset) -> Result<Self> {
        let labeled = dataset.genres.labeled_movies();
        if labeled.is_empty() {
            return Err(Error::Validation(
                "dataset has no labeled movie".to_string(),
            ));
        }
        let correlation =
            compute_correlation(&dataset.genres, &labeled, CorrelationEstimator::Membership)?;
        Ok(Explorer {
            dataset,
            labeled,
            correlation,
        })
    }

    /// Reads a dataset file written by `genre-nb ingest`.
    pub fn from_dataset_file(text: &str) -> Result<Self> {
        Self::new(canonical::read(text.as_bytes())?)
    }

    /// Builds the dataset from raw `u.data` and `u.item` bytes.
    pub fn from_movielens(data: &[u8], items: &[u8]) -> Result<Self> {
        let events = dataset::parse_ratings(data)?;
        let genres = dataset::parse_items(items, None)?;
        Self::new(Dataset::new(events, genres)?)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn summary(&self) -> Summary {
        Summary {
            users: self.dataset.num_users(),
            movies: self.dataset.num_movies(),
            labeled_movies: self.labeled.len(),
            ratings: self.dataset.events.len(),
            genres: self.dataset.genres.genre_names().to_vec(),
        }
    }

    pub fn correlation(&self, estimator: CorrelationEstimator) -> Result<Heatmap> {
        let c = compute_correlation(&self.dataset.genres, &self.labeled, estimator)?;
        let n = c.size();
        Ok(Heatmap {
            genres: c.genre_names().to_vec(),
            values: (0..n)
                .map(|i| (0..n).map(|j| c.get(i, j)).collect())
                .collect(),
        })
    }

    /// Posterior for `movie` under the model for `rating`. With a training
    /// fraction the model sees a seeded random split; without one it sees
    /// every labeled movie except `movie`.
    pub fn posterior(
        &self,
        rating: Rating,
        movie: u32,
        train_fraction: Option<f64>,
        seed: u64,
        options: &TrainOptions,
        threshold: f64,
    ) -> Result<PosteriorView> {
        let genres = &self.dataset.genres;
        if movie == 0 || movie as usize > self.dataset.num_movies() {
            return Err(Error::Lookup(format!("unknown movie {movie}")));
        }
        let training: Vec<u32> = match train_fraction {
            Some(f) => {
                let spec = SplitSpec {
                    train_fraction: f,
                    seed: cell_seed(seed, rating, f),
                    repetition: 0,
                };
                split(&self.labeled, &spec)?.train
            }
            None => self
                .labeled
                .iter()
                .copied()
                .filter(|&m| m != movie)
                .collect(),
        };
        let matrix = self.dataset.indicator(rating);
        let model = train_preference_model(&matrix, genres, &training, options)?;
        let features = FeatureVector::from_matrix(&matrix, movie);
        let post = model.posterior(&features)?;
        let g = post.argmax();
        let names = genres.genre_names();
        let truth = genres.genres_of(movie).unwrap_or(&[]);
        let verdict = if truth.is_empty() {
            "unlabeled"
        } else {
            match classify(&self.correlation, g, truth, threshold)? {
                Verdict::Exact => "exact",
                Verdict::Similar => "similar",
                Verdict::Wrong => "wrong",
            }
        };
        Ok(PosteriorView {
            movie,
            title: genres.title(movie).unwrap_or("").to_string(),
            true_genres: truth.iter().map(|&i| names[i].clone()).collect(),
            rated_by: features.rated_users().len(),
            training_movies: training.len(),
            predicted: names[g].clone(),
            verdict,
            genres: names.to_vec(),
            probabilities: post.probabilities,
        })
    }

    pub fn learning_curve(
        &self,
        rating: Rating,
        fractions: &[f64],
        repetitions: usize,
        seed: u64,
        options: EvalOptions,
    ) -> Result<CurveView> {
        if fractions.len() * repetitions > MAX_CURVE_RUNS {
            return Err(Error::Contract(format!(
                "{} runs requested, the page allows {MAX_CURVE_RUNS}",
                fractions.len() * repetitions
            )));
        }
        let mut fractions = fractions.to_vec();
        fractions.sort_by(f64::total_cmp);
        fractions.dedup();
        let report = Evaluator::new(&self.dataset, options)?.learning_curve(
            &[rating],
            &fractions,
            repetitions,
            seed,
        )?;
        let cells = &report.cells;
        Ok(CurveView {
            rating: rating.value(),
            fractions: cells.iter().map(|c| c.train_fraction).collect(),
            exact_mean: cells.iter().map(|c| c.exact_mean).collect(),
            exact_std: cells.iter().map(|c| c.exact_std).collect(),
            similar_mean: cells.iter().map(|c| c.similar_mean).collect(),
            similar_std: cells.iter().map(|c| c.similar_std).collect(),
        })
    }
}
