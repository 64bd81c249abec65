//! MovieLens 100k ingestion: ratings, genre labels and the per-rating binary
//! indicator matrices the model is trained on.
//!
//! User and movie ids are 1-based everywhere in the public API, genre indices
//! are 0-based positions into [`GenreAssignment::genre_names`].

pub mod canonical;

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Number of genre flags at the end of every `u.item` line (including "unknown").
pub const RAW_GENRE_FLAGS: usize = 19;
/// Metadata fields preceding the genre flags in `u.item`.
const ITEM_METADATA_FIELDS: usize = 5;

/// Genre labels of MovieLens 100k after dropping the leading "unknown" flag.
pub const DEFAULT_GENRE_NAMES: [&str; 18] = [
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

/// Reference counts of the canonical MovieLens 100k release.
pub mod canonical_counts {
    pub const USERS: usize = 943;
    pub const MOVIES: usize = 1682;
    pub const RATINGS: usize = 100_000;
    pub const GENRES: usize = 18;
    pub const MIN_RATINGS_PER_USER: usize = 20;
}

/// A star rating in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rating(u8);

impl Rating {
    pub const ALL: [Rating; 5] = [Rating(1), Rating(2), Rating(3), Rating(4), Rating(5)];

    pub fn new(value: u8) -> Result<Self> {
        if (1..=5).contains(&value) {
            Ok(Rating(value))
        } else {
            Err(Error::Contract(format!(
                "rating value {value} out of range 1..=5"
            )))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingRecord {
    pub user: u32,
    pub movie: u32,
    pub rating: Rating,
    pub timestamp: i64,
}

/// Validated rating events. No duplicate `(user, movie)` pairs; every id lies
/// inside `1..=num_users` / `1..=num_movies`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RatingEvents {
    records: Vec<RatingRecord>,
    num_users: usize,
    num_movies: usize,
}

impl RatingEvents {
    /// Builds an event set, taking the id spaces from the largest observed ids.
    pub fn from_records(records: Vec<RatingRecord>) -> Result<Self> {
        let num_users = records.iter().map(|r| r.user as usize).max().unwrap_or(0);
        let num_movies = records.iter().map(|r| r.movie as usize).max().unwrap_or(0);
        Self::with_counts(records, num_users, num_movies)
    }

    /// Builds an event set over explicit id spaces.
    pub fn with_counts(
        records: Vec<RatingRecord>,
        num_users: usize,
        num_movies: usize,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.user == 0 || r.user as usize > num_users {
                return Err(Error::Validation(format!(
                    "record {}: user {} outside 1..={num_users}",
                    i + 1,
                    r.user
                )));
            }
            if r.movie == 0 || r.movie as usize > num_movies {
                return Err(Error::Validation(format!(
                    "record {}: movie {} outside 1..={num_movies}",
                    i + 1,
                    r.movie
                )));
            }
            if !seen.insert((r.user, r.movie)) {
                return Err(Error::Validation(format!(
                    "record {}: duplicate rating of movie {} by user {}",
                    i + 1,
                    r.movie,
                    r.user
                )));
            }
        }
        Ok(RatingEvents {
            records,
            num_users,
            num_movies,
        })
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_movies(&self) -> usize {
        self.num_movies
    }

    /// Number of ratings given by each user, indexed by `user - 1`.
    pub fn ratings_per_user(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_users];
        for r in &self.records {
            counts[r.user as usize - 1] += 1;
        }
        counts
    }

    /// Serializes the events in `u.data` layout.
    pub fn to_tsv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 24);
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.user, r.movie, r.rating, r.timestamp
            ));
        }
        out
    }
}

/// Calls `f(line_number, line)` for every line, with trailing `\r\n` removed.
fn for_each_line<R, F>(mut reader: R, mut f: F) -> Result<()>
where
    R: BufRead,
    F: FnMut(usize, &[u8]) -> Result<()>,
{
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        f(line_no, &buf)?;
    }
}

fn latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

fn is_blank(line: &[u8]) -> bool {
    line.iter().all(u8::is_ascii_whitespace)
}

fn parse_field<T: std::str::FromStr>(line: usize, name: &str, raw: &[u8]) -> Result<T> {
    std::str::from_utf8(raw)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::parse(line, format!("{name} is not an integer: {:?}", latin1(raw))))
}

fn parse_id(line: usize, name: &str, raw: &[u8]) -> Result<u32> {
    let id: u32 = parse_field(line, name, raw)?;
    if id == 0 {
        return Err(Error::parse(line, format!("{name} must be >= 1")));
    }
    Ok(id)
}

/// Parses `u.data`: `user<TAB>item<TAB>rating<TAB>timestamp`, one event per
/// non-empty line.
pub fn parse_ratings<R: BufRead>(reader: R) -> Result<RatingEvents> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for_each_line(reader, |line, bytes| {
        if is_blank(bytes) {
            return Ok(());
        }
        let fields: Vec<&[u8]> = bytes.split(|&b| b == b'\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let user = parse_id(line, "user id", fields[0])?;
        let movie = parse_id(line, "movie id", fields[1])?;
        let value: i64 = parse_field(line, "rating", fields[2])?;
        let rating = u8::try_from(value)
            .ok()
            .and_then(|v| Rating::new(v).ok())
            .ok_or_else(|| Error::parse(line, format!("rating out of range: {value}")))?;
        let timestamp = parse_field(line, "timestamp", fields[3])?;
        records.push(RatingRecord {
            user,
            movie,
            rating,
            timestamp,
        });
        lines.push(line);
        Ok(())
    })?;

    let mut seen = HashSet::with_capacity(records.len());
    for (r, &line) in records.iter().zip(&lines) {
        if !seen.insert((r.user, r.movie)) {
            return Err(Error::Validation(format!(
                "line {line}: duplicate rating of movie {} by user {}",
                r.movie, r.user
            )));
        }
    }
    RatingEvents::from_records(records)
}

/// Parses `u.genre` (`name|index` per line). Returns names for the genres
/// retained after dropping index 0 ("unknown").
pub fn parse_genre_names<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut names: Vec<Option<String>> = vec![None; RAW_GENRE_FLAGS];
    for_each_line(reader, |line, bytes| {
        if is_blank(bytes) {
            return Ok(());
        }
        let text = latin1(bytes);
        let (name, index) = text
            .rsplit_once('|')
            .ok_or_else(|| Error::parse(line, "expected `name|index`"))?;
        let index: usize = index
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("genre index is not an integer: {index:?}")))?;
        if index >= RAW_GENRE_FLAGS {
            return Err(Error::parse(
                line,
                format!("genre index {index} out of range"),
            ));
        }
        names[index] = Some(name.to_string());
        Ok(())
    })?;
    names
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(i, n)| {
            n.ok_or_else(|| Error::Validation(format!("u.genre is missing genre index {i}")))
        })
        .collect()
}

/// Genre labels per movie. A movie with `N` genres weighs `1/N` on each.
///
/// Movies with an empty label set are unlabeled: either absent from the item
/// file or carrying only the "unknown" flag. They take part in neither
/// training nor testing.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreAssignment {
    genre_names: Vec<String>,
    membership: Vec<Vec<usize>>,
    titles: Vec<String>,
    unknown_only: Vec<u32>,
}

impl GenreAssignment {
    /// `membership[i]` holds the genre indices of movie `i + 1`.
    pub fn from_membership(genre_names: Vec<String>, membership: Vec<Vec<usize>>) -> Result<Self> {
        let titles = vec![String::new(); membership.len()];
        Self::build(genre_names, membership, titles, Vec::new())
    }

    fn build(
        genre_names: Vec<String>,
        mut membership: Vec<Vec<usize>>,
        titles: Vec<String>,
        unknown_only: Vec<u32>,
    ) -> Result<Self> {
        for (i, genres) in membership.iter_mut().enumerate() {
            genres.sort_unstable();
            genres.dedup();
            if let Some(&g) = genres.iter().find(|&&g| g >= genre_names.len()) {
                return Err(Error::Validation(format!(
                    "movie {}: genre index {g} out of range",
                    i + 1
                )));
            }
        }
        Ok(GenreAssignment {
            genre_names,
            membership,
            titles,
            unknown_only,
        })
    }

    pub fn genre_names(&self) -> &[String] {
        &self.genre_names
    }

    pub fn num_genres(&self) -> usize {
        self.genre_names.len()
    }

    /// Size of the movie id space (largest id seen).
    pub fn num_movies(&self) -> usize {
        self.membership.len()
    }

    pub fn title(&self, movie: u32) -> Option<&str> {
        self.titles
            .get((movie as usize).checked_sub(1)?)
            .map(String::as_str)
    }

    /// Movies excluded because their only flag was "unknown".
    pub fn unknown_only(&self) -> &[u32] {
        &self.unknown_only
    }

    pub fn genres_of(&self, movie: u32) -> Result<&[usize]> {
        (movie as usize)
            .checked_sub(1)
            .and_then(|i| self.membership.get(i))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Lookup(format!("unknown movie {movie}")))
    }

    pub fn is_labeled(&self, movie: u32) -> bool {
        self.genres_of(movie).is_ok_and(|g| !g.is_empty())
    }

    /// Ids of all movies with at least one genre, ascending.
    pub fn labeled_movies(&self) -> Vec<u32> {
        (1..=self.membership.len() as u32)
            .filter(|&m| !self.membership[m as usize - 1].is_empty())
            .collect()
    }

    pub fn genre_index(&self, name: &str) -> Option<usize> {
        self.genre_names.iter().position(|n| n == name)
    }

    /// Dense weight vector `w(g|m)`: `1/N` on each of the movie's `N` genres,
    /// zero elsewhere.
    pub fn weights(&self, movie: u32) -> Result<Vec<f64>> {
        let genres = self.genres_of(movie)?;
        if genres.is_empty() {
            return Err(Error::Lookup(format!("movie {movie} has no genre labels")));
        }
        let mut w = vec![0.0; self.genre_names.len()];
        let share = 1.0 / genres.len() as f64;
        for &g in genres {
            w[g] = share;
        }
        Ok(w)
    }
}

/// Parses `u.item`: `id|title|release|video-release|url|` followed by 19
/// binary genre flags, the first of which ("unknown") is dropped.
///
/// `genre_names`, when given, must name the 18 retained genres; otherwise
/// [`DEFAULT_GENRE_NAMES`] is used. Input is decoded as Latin-1.
pub fn parse_items<R: BufRead>(
    reader: R,
    genre_names: Option<Vec<String>>,
) -> Result<GenreAssignment> {
    let names = match genre_names {
        Some(n) if n.len() != RAW_GENRE_FLAGS - 1 => {
            return Err(Error::Validation(format!(
                "expected {} genre names, got {}",
                RAW_GENRE_FLAGS - 1,
                n.len()
            )))
        }
        Some(n) => n,
        None => DEFAULT_GENRE_NAMES.iter().map(|s| s.to_string()).collect(),
    };

    let mut rows: Vec<(u32, String, Vec<usize>, bool)> = Vec::new();
    for_each_line(reader, |line, bytes| {
        if is_blank(bytes) {
            return Ok(());
        }
        let fields: Vec<&[u8]> = bytes.split(|&b| b == b'|').collect();
        if fields.len() < ITEM_METADATA_FIELDS + RAW_GENRE_FLAGS {
            return Err(Error::parse(
                line,
                format!(
                    "expected at least {} pipe-separated fields, found {}",
                    ITEM_METADATA_FIELDS + RAW_GENRE_FLAGS,
                    fields.len()
                ),
            ));
        }
        let id = parse_id(line, "movie id", fields[0])?;
        let flags = &fields[fields.len() - RAW_GENRE_FLAGS..];
        let mut genres = Vec::new();
        let mut unknown = false;
        for (i, flag) in flags.iter().enumerate() {
            match *flag {
                b"0" => {}
                b"1" if i == 0 => unknown = true,
                b"1" => genres.push(i - 1),
                other => {
                    return Err(Error::parse(
                        line,
                        format!("genre flag {} is not binary: {:?}", i, latin1(other)),
                    ))
                }
            }
        }
        if genres.is_empty() && !unknown {
            return Err(Error::Validation(format!(
                "line {line}: movie {id} has no genre"
            )));
        }
        rows.push((id, latin1(fields[1]), genres, unknown));
        Ok(())
    })?;

    let num_movies = rows.iter().map(|r| r.0 as usize).max().unwrap_or(0);
    let mut membership = vec![Vec::new(); num_movies];
    let mut titles = vec![String::new(); num_movies];
    let mut present = vec![false; num_movies];
    let mut unknown_only = Vec::new();
    for (id, title, genres, _unknown) in rows {
        let i = id as usize - 1;
        if std::mem::replace(&mut present[i], true) {
            return Err(Error::Validation(format!("duplicate movie id {id}")));
        }
        if genres.is_empty() {
            unknown_only.push(id);
        }
        membership[i] = genres;
        titles[i] = title;
    }
    unknown_only.sort_unstable();
    if !unknown_only.is_empty() {
        log::warn!(
            "{} movie(s) carry only the \"unknown\" genre and are excluded: {:?}",
            unknown_only.len(),
            unknown_only
        );
    }
    GenreAssignment::build(names, membership, titles, unknown_only)
}

/// `v_{m,u}(r)` for one rating value: the set of `(movie, user)` pairs where
/// the user gave the movie exactly that rating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    rating: Rating,
    num_users: usize,
    /// Sorted user ids per movie, indexed by `movie - 1`.
    columns: Vec<Vec<u32>>,
    nnz: usize,
}

impl IndicatorMatrix {
    pub fn rating(&self) -> Rating {
        self.rating
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_movies(&self) -> usize {
        self.columns.len()
    }

    /// Number of set entries.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Users who gave `movie` this rating, ascending. Empty for unknown ids.
    pub fn users_of(&self, movie: u32) -> &[u32] {
        (movie as usize)
            .checked_sub(1)
            .and_then(|i| self.columns.get(i))
            .map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, movie: u32, user: u32) -> bool {
        self.users_of(movie).binary_search(&user).is_ok()
    }

    /// All `(movie, user)` entries in movie-then-user order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(i, users)| users.iter().map(move |&u| (i as u32 + 1, u)))
    }
}

pub fn build_indicator_matrix(events: &RatingEvents, rating: Rating) -> IndicatorMatrix {
    let mut columns = vec![Vec::new(); events.num_movies()];
    let mut nnz = 0;
    for r in events.records().iter().filter(|r| r.rating == rating) {
        columns[r.movie as usize - 1].push(r.user);
        nnz += 1;
    }
    for c in &mut columns {
        c.sort_unstable();
    }
    IndicatorMatrix {
        rating,
        num_users: events.num_users(),
        columns,
        nnz,
    }
}

/// Ratings plus genre labels over a shared movie id space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub events: RatingEvents,
    pub genres: GenreAssignment,
}

impl Dataset {
    /// Joins ratings and labels. Both sides are widened to the larger movie id
    /// space; movies missing from the item file count as unlabeled.
    pub fn new(events: RatingEvents, mut genres: GenreAssignment) -> Result<Self> {
        let num_movies = events.num_movies().max(genres.num_movies());
        genres.membership.resize(num_movies, Vec::new());
        genres.titles.resize(num_movies, String::new());
        let num_users = events.num_users();
        let events = RatingEvents::with_counts(events.records, num_users, num_movies)?;
        Ok(Dataset { events, genres })
    }

    pub fn num_users(&self) -> usize {
        self.events.num_users()
    }

    pub fn num_movies(&self) -> usize {
        self.genres.num_movies()
    }

    pub fn indicator(&self, rating: Rating) -> IndicatorMatrix {
        build_indicator_matrix(&self.events, rating)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_dataset(&self.events, &self.genres)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub num_users: usize,
    pub num_movies: usize,
    pub num_ratings: usize,
    pub num_genres: usize,
    pub min_ratings_per_user: usize,
    pub unknown_only_movies: usize,
    /// Deviations from the canonical release. Advisory only.
    pub anomalies: Vec<String>,
}

impl ValidationReport {
    pub fn is_canonical(&self) -> bool {
        self.anomalies.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} users, {} movies, {} ratings, {} genres",
            self.num_users, self.num_movies, self.num_ratings, self.num_genres
        )
    }
}

/// Checks a dataset against the canonical MovieLens 100k counts. Every
/// finding is reported; nothing is rejected.
pub fn validate_dataset(events: &RatingEvents, genres: &GenreAssignment) -> ValidationReport {
    use canonical_counts as c;

    let num_movies = events.num_movies().max(genres.num_movies());
    let per_user = events.ratings_per_user();
    let min_ratings_per_user = per_user.iter().copied().min().unwrap_or(0);

    let mut anomalies = Vec::new();
    let mut check = |what: &str, found: usize, expected: usize| {
        if found != expected {
            anomalies.push(format!("expected {expected} {what}, found {found}"));
        }
    };
    check("users", events.num_users(), c::USERS);
    check("movies", num_movies, c::MOVIES);
    check("ratings", events.len(), c::RATINGS);
    check("genres", genres.num_genres(), c::GENRES);

    if per_user.is_empty() {
        anomalies.push("no users, so the 20-rating minimum cannot hold".to_string());
    }
    for (i, &n) in per_user.iter().enumerate() {
        if n < c::MIN_RATINGS_PER_USER {
            anomalies.push(format!(
                "user {} below {}-rating minimum ({n} ratings)",
                i + 1,
                c::MIN_RATINGS_PER_USER
            ));
        }
    }
    let unlabeled_rated: HashSet<u32> = events
        .records()
        .iter()
        .map(|r| r.movie)
        .filter(|&m| genres.genres_of(m).is_err())
        .collect();
    if !unlabeled_rated.is_empty() {
        anomalies.push(format!(
            "{} rated movie(s) missing from the item file",
            unlabeled_rated.len()
        ));
    }

    ValidationReport {
        num_users: events.num_users(),
        num_movies,
        num_ratings: events.len(),
        num_genres: genres.num_genres(),
        min_ratings_per_user,
        unknown_only_movies: genres.unknown_only().len(),
        anomalies,
    }
}
