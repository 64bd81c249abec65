//! Movie genre prediction from who rated a movie, and how.
//!
//! For every rating value `r` a movie is the set of users who gave it exactly
//! `r`. A multivariate Bernoulli Naive Bayes model over those sets predicts the
//! movie's genre; a genre correlation matrix decides when a wrong prediction
//! is still "similar" to the truth. The [`evaluation`] module runs the
//! learning-curve protocol on MovieLens 100k.
//!
//! ```
//! use genre_nb::dataset::{build_indicator_matrix, GenreAssignment, Rating, RatingEvents, RatingRecord};
//! use genre_nb::model::{train_preference_model, FeatureVector, TrainOptions};
//!
//! let r3 = Rating::new(3)?;
//! let rec = |user, movie| RatingRecord { user, movie, rating: r3, timestamp: 0 };
//! let events = RatingEvents::from_records(vec![rec(1, 1), rec(2, 1), rec(3, 2), rec(1, 3)])?;
//! let genres = GenreAssignment::from_membership(
//!     vec!["A".into(), "B".into()],
//!     vec![vec![0], vec![1], vec![0, 1]],
//! )?;
//! let matrix = build_indicator_matrix(&events, r3);
//! let model = train_preference_model(&matrix, &genres, &[1, 2, 3], &TrainOptions::default())?;
//! let movie = FeatureVector::new(r3, vec![1], 3)?;
//! assert_eq!(model.predict(&movie)?, 0);
//! # Ok::<(), genre_nb::Error>(())
//! ```

pub mod correlation;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod model;

pub use error::{Error, Result};
