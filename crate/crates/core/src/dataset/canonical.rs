//! Validated dataset file shared by the downstream commands.
//!
//! Line-oriented UTF-8 text, tab-separated, LF endings:
//!
//! ```text
//! #genre-nb-dataset v1
//! users<TAB>943
//! movies<TAB>1682
//! genre<TAB>0<TAB>Action                  one line per genre, in index order
//! movie<TAB>1<TAB>2,3,4<TAB>Toy Story (1995)
//! rating<TAB>196<TAB>242<TAB>3<TAB>881250949
//! ```
//!
//! The genre field of a `movie` line is a comma-separated list of genre
//! indices, `unknown` for a movie whose only flag was "unknown", or `-` for an
//! id that never appeared in the item file. Rating lines keep input order.
//! Lines after the first that start with `#` are comments.

use std::io::{BufRead, Write};

use super::{for_each_line, Dataset, GenreAssignment, Rating, RatingEvents, RatingRecord};
use crate::error::{Error, Result};

pub const MAGIC: &str = "#genre-nb-dataset v1";

pub fn write<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    write_annotated(dataset, out, &[])
}

/// Like [`write`], with `# `-prefixed comment lines after the header.
pub fn write_annotated<W: Write>(dataset: &Dataset, mut out: W, comments: &[String]) -> Result<()> {
    let genres = &dataset.genres;
    writeln!(out, "{MAGIC}")?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "users\t{}", dataset.num_users())?;
    writeln!(out, "movies\t{}", dataset.num_movies())?;
    for (i, name) in genres.genre_names().iter().enumerate() {
        writeln!(out, "genre\t{i}\t{name}")?;
    }
    for movie in 1..=dataset.num_movies() as u32 {
        let labels = genres.genres_of(movie)?;
        let field = if !labels.is_empty() {
            labels
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        } else if genres.unknown_only().binary_search(&movie).is_ok() {
            "unknown".to_string()
        } else {
            "-".to_string()
        };
        let title = genres
            .title(movie)
            .unwrap_or("")
            .replace(['\t', '\n', '\r'], " ");
        writeln!(out, "movie\t{movie}\t{field}\t{title}")?;
    }
    for r in dataset.events.records() {
        writeln!(
            out,
            "rating\t{}\t{}\t{}\t{}",
            r.user, r.movie, r.rating, r.timestamp
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut num_users = None;
    let mut num_movies = None;
    let mut names = Vec::new();
    let mut membership: Vec<Vec<usize>> = Vec::new();
    let mut titles = Vec::new();
    let mut unknown_only = Vec::new();
    let mut records = Vec::new();

    fn num<T: std::str::FromStr>(line: usize, s: Option<&str>) -> Result<T> {
        s.and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(line, format!("expected a number, found {s:?}")))
    }

    for_each_line(reader, |line, bytes| {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::parse(line, "dataset file is not valid UTF-8"))?;
        if line == 1 {
            return if text == MAGIC {
                Ok(())
            } else {
                Err(Error::parse(line, format!("missing header `{MAGIC}`")))
            };
        }
        if text.is_empty() || text.starts_with('#') {
            return Ok(());
        }
        let mut fields = text.splitn(5, '\t');
        match fields.next() {
            Some("users") => num_users = Some(num::<usize>(line, fields.next())?),
            Some("movies") => {
                let n = num::<usize>(line, fields.next())?;
                num_movies = Some(n);
                membership = vec![Vec::new(); n];
                titles = vec![String::new(); n];
            }
            Some("genre") => {
                let index: usize = num(line, fields.next())?;
                if index != names.len() {
                    return Err(Error::parse(line, "genre lines out of order"));
                }
                names.push(fields.next().unwrap_or("").to_string());
            }
            Some("movie") => {
                let id: usize = num(line, fields.next())?;
                if id == 0 || id > membership.len() {
                    return Err(Error::parse(
                        line,
                        format!("movie {id} outside declared range"),
                    ));
                }
                match fields.next() {
                    Some("-") => {}
                    Some("unknown") => unknown_only.push(id as u32),
                    Some(list) => {
                        membership[id - 1] = list
                            .split(',')
                            .map(|g| num(line, Some(g)))
                            .collect::<Result<_>>()?
                    }
                    None => return Err(Error::parse(line, "movie line without genres")),
                }
                titles[id - 1] = fields.next().unwrap_or("").to_string();
            }
            Some("rating") => {
                let user = num(line, fields.next())?;
                let movie = num(line, fields.next())?;
                let rating = Rating::new(num(line, fields.next())?)
                    .map_err(|e| Error::parse(line, e.to_string()))?;
                let timestamp = num(line, fields.next())?;
                records.push(RatingRecord {
                    user,
                    movie,
                    rating,
                    timestamp,
                });
            }
            Some(other) => {
                return Err(Error::parse(line, format!("unknown record kind {other:?}")))
            }
            None => unreachable!("splitn yields at least one field"),
        }
        Ok(())
    })?;

    let (Some(num_users), Some(num_movies)) = (num_users, num_movies) else {
        return Err(Error::Validation(
            "dataset file lacks `users`/`movies` header lines".to_string(),
        ));
    };
    let genres = GenreAssignment::build(names, membership, titles, unknown_only)?;
    let events = RatingEvents::with_counts(records, num_users, num_movies)?;
    Ok(Dataset { events, genres })
}
