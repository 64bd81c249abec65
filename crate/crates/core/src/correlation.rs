//! Genre×genre Pearson correlation over movie labels, and the "similar
//! genre" acceptance rule built on it.

use std::io::Write;

use crate::dataset::GenreAssignment;
use crate::error::{Error, Result};
use crate::model::{csv_field, keyword_enum};

/// Threshold above which a wrong prediction still counts as a similar genre.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.1;

/// Which per-movie genre column enters the correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationEstimator {
    /// 0/1 membership indicators.
    #[default]
    Membership,
    /// The `1/N` genre weights.
    Weights,
}

keyword_enum!(CorrelationEstimator { Membership => "membership", Weights => "weights" });

/// Symmetric `|G|×|G|` matrix. `None` marks a pair involving a genre with zero
/// variance over the movie subset; such pairs never count as correlated.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreCorrelationMatrix {
    genre_names: Vec<String>,
    values: Vec<Option<f64>>,
}

impl GenreCorrelationMatrix {
    pub fn size(&self) -> usize {
        self.genre_names.len()
    }

    pub fn genre_names(&self) -> &[String] {
        &self.genre_names
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.size() + j]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `true` iff `predicted` correlates with some genre in `true_set` strictly
    /// above `threshold`. Membership of `predicted` in `true_set` is not
    /// special-cased here.
    pub fn is_similar(&self, predicted: usize, true_set: &[usize], threshold: f64) -> Result<bool> {
        if !threshold.is_finite() {
            // +inf can never be exceeded; anything else is a caller bug.
            if threshold == f64::INFINITY {
                return Ok(false);
            }
            return Err(Error::Contract(format!(
                "threshold {threshold} is not finite"
            )));
        }
        let n = self.size();
        if let Some(&g) = std::iter::once(&predicted)
            .chain(true_set)
            .find(|&&g| g >= n)
        {
            return Err(Error::Lookup(format!("unknown genre index {g}")));
        }
        let best = true_set
            .iter()
            .filter_map(|&t| self.get(predicted, t))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(best > threshold)
    }

    /// Square CSV with genre names heading rows and columns; `NA` for
    /// undefined entries.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "genre")?;
        for name in &self.genre_names {
            write!(out, ",{}", csv_field(name))?;
        }
        writeln!(out)?;
        for (i, name) in self.genre_names.iter().enumerate() {
            write!(out, "{}", csv_field(name))?;
            for j in 0..self.size() {
                match self.get(i, j) {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",NA")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Pearson correlation between the genre columns of `movies`.
pub fn compute_correlation(
    assignment: &GenreAssignment,
    movies: &[u32],
    estimator: CorrelationEstimator,
) -> Result<GenreCorrelationMatrix> {
    if movies.is_empty() {
        return Err(Error::Contract(
            "correlation needs at least one movie".to_string(),
        ));
    }
    let g = assignment.num_genres();
    let mut sum = vec![0.0; g];
    let mut cross = vec![0.0; g * g];
    let mut column = vec![0.0; g];
    for &m in movies {
        match estimator {
            CorrelationEstimator::Weights => column.copy_from_slice(&assignment.weights(m)?),
            CorrelationEstimator::Membership => {
                column.fill(0.0);
                for &i in assignment.genres_of(m)? {
                    column[i] = 1.0;
                }
            }
        }
        for i in 0..g {
            if column[i] == 0.0 {
                continue;
            }
            sum[i] += column[i];
            for j in i..g {
                cross[i * g + j] += column[i] * column[j];
            }
        }
    }

    let n = movies.len() as f64;
    // n·Σxy − Σx·Σy, proportional to the covariance
    let scatter = |i: usize, j: usize| n * cross[i * g + j] - sum[i] * sum[j];
    let mut values = vec![None; g * g];
    for i in 0..g {
        let var_i = scatter(i, i);
        if var_i <= 0.0 {
            continue;
        }
        values[i * g + i] = Some(1.0);
        for j in i + 1..g {
            let var_j = scatter(j, j);
            if var_j <= 0.0 {
                continue;
            }
            let r = (scatter(i, j) / (var_i.sqrt() * var_j.sqrt())).clamp(-1.0, 1.0);
            values[i * g + j] = Some(r);
            values[j * g + i] = Some(r);
        }
    }
    Ok(GenreCorrelationMatrix {
        genre_names: assignment.genre_names().to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> GenreAssignment {
        GenreAssignment::from_membership(
            vec!["A".into(), "B".into()],
            vec![vec![0], vec![1], vec![0, 1]],
        )
        .unwrap()
    }

    #[test]
    fn toy_pair_correlation() {
        let c = compute_correlation(&t1(), &[1, 2, 3], CorrelationEstimator::Membership).unwrap();
        assert_eq!(c.get(0, 0), Some(1.0));
        assert_eq!(c.get(1, 1), Some(1.0));
        assert!((c.get(0, 1).unwrap() + 0.5).abs() < 1e-15);
        assert!(c.is_symmetric());
    }

    #[test]
    fn identical_columns_are_perfectly_correlated() {
        let genres = GenreAssignment::from_membership(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![0, 1], vec![2], vec![0, 1, 2], vec![2]],
        )
        .unwrap();
        let c =
            compute_correlation(&genres, &[1, 2, 3, 4], CorrelationEstimator::Membership).unwrap();
        assert!((c.get(0, 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_genre_is_undefined() {
        let genres = GenreAssignment::from_membership(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![0], vec![0, 1]],
        )
        .unwrap();
        let c = compute_correlation(&genres, &[1, 2], CorrelationEstimator::Membership).unwrap();
        // A is always on, C always off
        assert_eq!(c.get(0, 0), None);
        assert_eq!(c.get(2, 1), None);
        assert_eq!(c.get(1, 1), Some(1.0));
        assert!(!c.is_similar(1, &[0], -1.0).unwrap());
    }

    #[test]
    fn empty_subset_is_contract_error() {
        assert!(matches!(
            compute_correlation(&t1(), &[], CorrelationEstimator::Membership),
            Err(Error::Contract(_))
        ));
    }

    fn matrix_with(value: f64) -> GenreCorrelationMatrix {
        GenreCorrelationMatrix {
            genre_names: vec!["P".into(), "T".into()],
            values: vec![Some(1.0), Some(value), Some(value), Some(1.0)],
        }
    }

    #[test]
    fn similarity_threshold_is_strict() {
        assert!(matrix_with(0.25).is_similar(0, &[1], 0.1).unwrap());
        assert!(!matrix_with(0.1).is_similar(0, &[1], 0.1).unwrap());
        assert!(!matrix_with(-0.3).is_similar(0, &[1], 0.1).unwrap());
        assert!(!matrix_with(0.9).is_similar(0, &[1], f64::INFINITY).unwrap());
        assert!(!matrix_with(0.9).is_similar(0, &[], 0.1).unwrap());
    }

    #[test]
    fn similarity_uses_best_true_genre() {
        let c = GenreCorrelationMatrix {
            genre_names: vec!["P".into(), "X".into(), "Y".into()],
            values: vec![
                Some(1.0),
                Some(-0.2),
                Some(0.3),
                Some(-0.2),
                Some(1.0),
                None,
                Some(0.3),
                None,
                Some(1.0),
            ],
        };
        assert!(c.is_similar(0, &[1, 2], 0.1).unwrap());
        assert!(!c.is_similar(0, &[1], 0.1).unwrap());
    }

    #[test]
    fn similarity_rejects_bad_input() {
        let c = matrix_with(0.5);
        assert!(matches!(c.is_similar(2, &[1], 0.1), Err(Error::Lookup(_))));
        assert!(matches!(c.is_similar(0, &[5], 0.1), Err(Error::Lookup(_))));
        assert!(matches!(
            c.is_similar(0, &[1], f64::NAN),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn csv_marks_undefined_entries() {
        let genres = GenreAssignment::from_membership(
            vec!["A".into(), "B, C".into()],
            vec![vec![0], vec![0]],
        )
        .unwrap();
        let c = compute_correlation(&genres, &[1, 2], CorrelationEstimator::Membership).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "genre,A,\"B, C\"\nA,NA,NA\n\"B, C\",NA,NA\n"
        );
    }
}
