//! Per-rating multivariate Bernoulli preference model.
//!
//! For a fixed rating `r`, every movie is a binary vector over all users
//! (`1` when the user gave it exactly `r`). Training estimates, per genre `g`
//! and user `u`, the smoothed probability `P(u|g,r)` from genre-weighted
//! counts over the training movies. A movie's likelihood under a genre is the
//! product over *all* users of `P` (rated) or `1 - P` (not rated); prediction
//! picks the genre with the largest prior-weighted likelihood.

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::dataset::{GenreAssignment, IndicatorMatrix, Rating};
use crate::error::{Error, Result};

/// Additive smoothing of the per-user Bernoulli parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// `(1 + count) / (|U| + mass)`.
    #[default]
    Users,
    /// Classic add-one Bernoulli smoothing, `(1 + count) / (2 + mass)`.
    Textbook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorMode {
    /// Genre share of the training movies' `1/N` weights.
    #[default]
    Empirical,
    Uniform,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:ident => $kw:literal),+ $(,)? }) => {
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $(Self::$variant => $kw),+ })
            }
        }

        impl std::str::FromStr for $ty {
            type Err = $crate::Error;

            fn from_str(s: &str) -> $crate::Result<Self> {
                match s {
                    $($kw => Ok(Self::$variant),)+
                    other => Err($crate::Error::Contract(format!(
                        "unknown {} {other:?}",
                        stringify!($ty)
                    ))),
                }
            }
        }
    };
}
pub(crate) use keyword_enum;

keyword_enum!(Smoothing { Users => "users", Textbook => "textbook" });
keyword_enum!(PriorMode { Empirical => "empirical", Uniform => "uniform" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainOptions {
    pub smoothing: Smoothing,
    pub prior_mode: PriorMode,
}

/// One movie's column `v_{m,·}(r)`: the ids of users who gave it rating `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    rating: Rating,
    rated_users: Vec<u32>,
    num_users: usize,
}

impl FeatureVector {
    pub fn new(rating: Rating, mut rated_users: Vec<u32>, num_users: usize) -> Result<Self> {
        rated_users.sort_unstable();
        rated_users.dedup();
        if let Some(&u) = rated_users
            .iter()
            .find(|&&u| u == 0 || u as usize > num_users)
        {
            return Err(Error::Contract(format!("user {u} outside 1..={num_users}")));
        }
        Ok(FeatureVector {
            rating,
            rated_users,
            num_users,
        })
    }

    /// The column of `movie` in `matrix`.
    pub fn from_matrix(matrix: &IndicatorMatrix, movie: u32) -> Self {
        FeatureVector {
            rating: matrix.rating(),
            rated_users: matrix.users_of(movie).to_vec(),
            num_users: matrix.num_users(),
        }
    }

    pub fn rating(&self) -> Rating {
        self.rating
    }

    pub fn rated_users(&self) -> &[u32] {
        &self.rated_users
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn is_empty(&self) -> bool {
        self.rated_users.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDistribution {
    /// `log P(m|g,r) + log P(g|r)`, unnormalized.
    pub log_scores: Vec<f64>,
    /// `P(g|m,r)`, normalized over genres.
    pub probabilities: Vec<f64>,
}

impl PosteriorDistribution {
    /// Index of the largest score, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.log_scores)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Trained `P(u|g,r)` table and genre priors for one rating value.
///
/// Tables are genre-major: entry `(g, u)` lives at `g * num_users + (u - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceModel {
    rating: Rating,
    num_users: usize,
    smoothing: Smoothing,
    genre_names: Vec<String>,
    user_prob: Vec<f64>,
    log_user_prob: Vec<f64>,
    log_complement: Vec<f64>,
    /// `Σ_u log(1 - P(u|g,r))` per genre: the likelihood of a movie nobody rated `r`.
    complement_sum: Vec<f64>,
    priors: Vec<f64>,
    log_priors: Vec<f64>,
    genre_mass: Vec<f64>,
    training_movies: usize,
}

impl PreferenceModel {
    #[allow(clippy::too_many_arguments)]
    fn from_tables(
        rating: Rating,
        num_users: usize,
        smoothing: Smoothing,
        genre_names: Vec<String>,
        user_prob: Vec<f64>,
        priors: Vec<f64>,
        genre_mass: Vec<f64>,
        training_movies: usize,
    ) -> Self {
        let log_user_prob: Vec<f64> = user_prob.iter().map(|p| p.ln()).collect();
        let log_complement: Vec<f64> = user_prob.iter().map(|p| (-p).ln_1p()).collect();
        let complement_sum = if num_users == 0 {
            vec![0.0; genre_names.len()]
        } else {
            log_complement
                .chunks(num_users)
                .map(|row| row.iter().sum())
                .collect()
        };
        let log_priors = priors.iter().map(|p| p.ln()).collect();
        PreferenceModel {
            rating,
            num_users,
            smoothing,
            genre_names,
            user_prob,
            log_user_prob,
            log_complement,
            complement_sum,
            priors,
            log_priors,
            genre_mass,
            training_movies,
        }
    }

    pub fn rating(&self) -> Rating {
        self.rating
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_genres(&self) -> usize {
        self.genre_names.len()
    }

    pub fn genre_names(&self) -> &[String] {
        &self.genre_names
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// `Σ_m w(g|m)` over the training movies.
    pub fn genre_mass(&self) -> &[f64] {
        &self.genre_mass
    }

    pub fn training_movies(&self) -> usize {
        self.training_movies
    }

    /// Genres no training movie carried. Their parameters sit at the
    /// smoothing floor.
    pub fn empty_genres(&self) -> Vec<usize> {
        (0..self.num_genres())
            .filter(|&g| self.genre_mass[g] == 0.0)
            .collect()
    }

    /// `P(u|g,r)`; `user` is 1-based.
    pub fn user_prob(&self, genre: usize, user: u32) -> f64 {
        self.user_prob[genre * self.num_users + user as usize - 1]
    }

    /// Row of `P(·|g,r)` for one genre, indexed by `user - 1`.
    pub fn genre_row(&self, genre: usize) -> &[f64] {
        &self.user_prob[genre * self.num_users..(genre + 1) * self.num_users]
    }

    pub fn log_user_prob(&self, genre: usize) -> &[f64] {
        &self.log_user_prob[genre * self.num_users..(genre + 1) * self.num_users]
    }

    pub fn log_complement(&self, genre: usize) -> &[f64] {
        &self.log_complement[genre * self.num_users..(genre + 1) * self.num_users]
    }

    fn check(&self, features: &FeatureVector) -> Result<()> {
        if features.rating != self.rating {
            return Err(Error::Contract(format!(
                "feature vector for rating {} given to the rating-{} model",
                features.rating, self.rating
            )));
        }
        if features.num_users != self.num_users {
            return Err(Error::Contract(format!(
                "feature vector over {} users, model over {}",
                features.num_users, self.num_users
            )));
        }
        Ok(())
    }

    fn check_genre(&self, genre: usize) -> Result<()> {
        if genre >= self.num_genres() {
            return Err(Error::Lookup(format!("unknown genre index {genre}")));
        }
        Ok(())
    }

    fn log_likelihood_unchecked(&self, features: &FeatureVector, genre: usize) -> f64 {
        let base = genre * self.num_users;
        let present: f64 = features
            .rated_users
            .iter()
            .map(|&u| {
                let i = base + u as usize - 1;
                self.log_user_prob[i] - self.log_complement[i]
            })
            .sum();
        self.complement_sum[genre] + present
    }

    /// `log P(m|g,r)` under the Bernoulli event model, over all users.
    pub fn log_likelihood(&self, features: &FeatureVector, genre: usize) -> Result<f64> {
        self.check(features)?;
        self.check_genre(genre)?;
        Ok(self.log_likelihood_unchecked(features, genre))
    }

    pub fn posterior(&self, features: &FeatureVector) -> Result<PosteriorDistribution> {
        self.check(features)?;
        let log_scores: Vec<f64> = (0..self.num_genres())
            .map(|g| self.log_likelihood_unchecked(features, g) + self.log_priors[g])
            .collect();
        let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probabilities: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = probabilities.iter().sum();
        for p in &mut probabilities {
            *p /= total;
        }
        Ok(PosteriorDistribution {
            log_scores,
            probabilities,
        })
    }

    /// Genre with the highest posterior; ties go to the lowest index.
    pub fn predict(&self, features: &FeatureVector) -> Result<usize> {
        Ok(self.posterior(features)?.argmax())
    }

    /// Writes the model in its text format (see [`PreferenceModel::read`]).
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        self.write_annotated(out, &[])
    }

    /// Like [`PreferenceModel::write`], with `# `-prefixed comment lines after
    /// the header.
    pub fn write_annotated<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        writeln!(out, "{MODEL_MAGIC}")?;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "rating\t{}", self.rating)?;
        writeln!(out, "users\t{}", self.num_users)?;
        writeln!(out, "smoothing\t{}", self.smoothing)?;
        writeln!(out, "training_movies\t{}", self.training_movies)?;
        writeln!(out, "genres\t{}", self.num_genres())?;
        for (g, name) in self.genre_names.iter().enumerate() {
            writeln!(
                out,
                "genre\t{g}\t{}\t{}\t{}",
                self.priors[g], self.genre_mass[g], name
            )?;
        }
        for g in 0..self.num_genres() {
            write!(out, "prob\t{g}")?;
            for p in self.genre_row(g) {
                write!(out, "\t{p}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the text format:
    ///
    /// ```text
    /// #genre-nb-model v1
    /// rating<TAB>3
    /// users<TAB>943
    /// smoothing<TAB>users
    /// training_movies<TAB>1344
    /// genres<TAB>18
    /// genre<TAB>g<TAB>prior<TAB>mass<TAB>name     one per genre
    /// prob<TAB>g<TAB>P(1|g,r)<TAB>...<TAB>P(|U||g,r)  one per genre
    /// ```
    ///
    /// Further lines starting with `#` are comments. Floats use the shortest
    /// representation that reads back to the same bits, so a write/read cycle
    /// is exact.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(i, l)| *i == 0 || !l.as_ref().is_ok_and(|l| l.starts_with('#')));
        let mut next = |want: &str| -> Result<(usize, Vec<String>)> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::Validation(format!("model file ends before `{want}`")))?;
            let line = line?;
            let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
            if fields[0] != want {
                return Err(Error::parse(
                    i + 1,
                    format!("expected `{want}`, found {:?}", fields[0]),
                ));
            }
            Ok((i + 1, fields))
        };
        fn field<T: FromStr>(line: usize, fields: &[String], i: usize) -> Result<T> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(line, format!("bad or missing field {i}")))
        }

        next(MODEL_MAGIC)?;
        let (l, f) = next("rating")?;
        let rating = Rating::new(field(l, &f, 1)?).map_err(|e| Error::parse(l, e.to_string()))?;
        let (l, f) = next("users")?;
        let num_users: usize = field(l, &f, 1)?;
        let (l, f) = next("smoothing")?;
        let smoothing: Smoothing = f
            .get(1)
            .ok_or_else(|| Error::parse(l, "missing smoothing"))?
            .parse()?;
        let (l, f) = next("training_movies")?;
        let training_movies: usize = field(l, &f, 1)?;
        let (l, f) = next("genres")?;
        let num_genres: usize = field(l, &f, 1)?;

        let mut names = Vec::with_capacity(num_genres);
        let mut priors = Vec::with_capacity(num_genres);
        let mut mass = Vec::with_capacity(num_genres);
        for g in 0..num_genres {
            let (l, f) = next("genre")?;
            if field::<usize>(l, &f, 1)? != g || f.len() != 5 {
                return Err(Error::parse(l, "malformed genre line"));
            }
            priors.push(field(l, &f, 2)?);
            mass.push(field(l, &f, 3)?);
            names.push(f[4].clone());
        }
        let mut user_prob = Vec::with_capacity(num_genres * num_users);
        for g in 0..num_genres {
            let (l, f) = next("prob")?;
            if field::<usize>(l, &f, 1)? != g || f.len() != num_users + 2 {
                return Err(Error::parse(
                    l,
                    format!("expected {num_users} probabilities"),
                ));
            }
            for i in 2..f.len() {
                let p: f64 = field(l, &f, i)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::parse(l, format!("probability {p} outside (0,1)")));
                }
                user_prob.push(p);
            }
        }
        Ok(Self::from_tables(
            rating,
            num_users,
            smoothing,
            names,
            user_prob,
            priors,
            mass,
            training_movies,
        ))
    }

    /// CSV of `P(u|g,r)`: one row per genre, one column per user.
    pub fn write_user_prob_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "genre")?;
        for u in 1..=self.num_users {
            write!(out, ",u{u}")?;
        }
        writeln!(out)?;
        for (g, name) in self.genre_names.iter().enumerate() {
            write!(out, "{}", csv_field(name))?;
            for p in self.genre_row(g) {
                write!(out, ",{p}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// CSV of `log P(m|g,r)` for each listed movie, one column per genre.
    /// Logs are written because the products underflow for realistic user
    /// counts.
    pub fn write_movie_likelihood_csv<W: Write>(
        &self,
        matrix: &IndicatorMatrix,
        movies: &[u32],
        mut out: W,
    ) -> Result<()> {
        write!(out, "movie")?;
        for name in &self.genre_names {
            write!(out, ",{}", csv_field(name))?;
        }
        writeln!(out)?;
        for &m in movies {
            let features = FeatureVector::from_matrix(matrix, m);
            self.check(&features)?;
            write!(out, "{m}")?;
            for g in 0..self.num_genres() {
                write!(out, ",{}", self.log_likelihood_unchecked(&features, g))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub const MODEL_MAGIC: &str = "#genre-nb-model v1";

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `w(g|m)` for every genre: `1/N` over the movie's `N` genres, zero elsewhere.
pub fn genre_weights(assignment: &GenreAssignment, movie: u32) -> Result<Vec<f64>> {
    assignment.weights(movie)
}

fn training_set(training_movies: &[u32]) -> Result<Vec<u32>> {
    let mut movies = training_movies.to_vec();
    movies.sort_unstable();
    movies.dedup();
    if movies.is_empty() {
        return Err(Error::Training("empty training set".to_string()));
    }
    Ok(movies)
}

/// Genre mass `Σ_m w(g|m)` over the given movies.
fn genre_mass(assignment: &GenreAssignment, movies: &[u32]) -> Result<Vec<f64>> {
    let mut mass = vec![0.0; assignment.num_genres()];
    for &m in movies {
        for (acc, w) in mass.iter_mut().zip(assignment.weights(m)?) {
            *acc += w;
        }
    }
    Ok(mass)
}

/// `P(g|r)` over the training movies.
pub fn estimate_priors(
    assignment: &GenreAssignment,
    training_movies: &[u32],
    mode: PriorMode,
) -> Result<Vec<f64>> {
    let movies = training_set(training_movies)?;
    let g = assignment.num_genres();
    match mode {
        PriorMode::Uniform => Ok(vec![1.0 / g as f64; g]),
        PriorMode::Empirical => {
            let n = movies.len() as f64;
            Ok(genre_mass(assignment, &movies)?
                .into_iter()
                .map(|m| m / n)
                .collect())
        }
    }
}

/// Estimates `P(u|g,r)` from the training columns of `matrix`, each movie
/// contributing its `1/N` genre weights.
pub fn train_preference_model(
    matrix: &IndicatorMatrix,
    assignment: &GenreAssignment,
    training_movies: &[u32],
    options: &TrainOptions,
) -> Result<PreferenceModel> {
    let movies = training_set(training_movies)?;
    let num_users = matrix.num_users();
    let num_genres = assignment.num_genres();
    if num_genres == 0 {
        return Err(Error::Training("no genres".to_string()));
    }
    if options.smoothing == Smoothing::Users && num_users < 2 {
        return Err(Error::Training(format!(
            "smoothing by |U| needs at least 2 users, got {num_users}"
        )));
    }

    let mut counts = vec![0.0; num_genres * num_users];
    let mut mass = vec![0.0; num_genres];
    for &m in &movies {
        let weights = assignment
            .weights(m)
            .map_err(|e| Error::Training(format!("training movie {m}: {e}")))?;
        for (g, &w) in weights.iter().enumerate().filter(|(_, &w)| w > 0.0) {
            mass[g] += w;
            let row = &mut counts[g * num_users..(g + 1) * num_users];
            for &u in matrix.users_of(m) {
                row[u as usize - 1] += w;
            }
        }
    }

    let floor = match options.smoothing {
        Smoothing::Users => num_users as f64,
        Smoothing::Textbook => 2.0,
    };
    for (g, row) in counts.chunks_mut(num_users.max(1)).enumerate() {
        let denom = floor + mass[g];
        for c in row {
            *c = (1.0 + *c) / denom;
        }
    }
    let empty: Vec<&str> = (0..num_genres)
        .filter(|&g| mass[g] == 0.0)
        .map(|g| assignment.genre_names()[g].as_str())
        .collect();
    if !empty.is_empty() {
        log::debug!(
            "rating {}: genres without training movies: {empty:?}",
            matrix.rating()
        );
    }

    let priors = estimate_priors(assignment, &movies, options.prior_mode)?;
    Ok(PreferenceModel::from_tables(
        matrix.rating(),
        num_users,
        options.smoothing,
        assignment.genre_names().to_vec(),
        counts,
        priors,
        mass,
        movies.len(),
    ))
}
