//! Brute-force reference for the Bernoulli genre model, written straight from
//! the definitions on dense tables. Shares no code with the library beyond
//! the input types used to build datasets.

#![allow(dead_code)]

use genre_nb::dataset::{Dataset, GenreAssignment, Rating, RatingEvents, RatingRecord};
use rand::Rng;

/// Small labeled dataset held densely.
#[derive(Debug, Clone)]
pub struct Micro {
    pub num_users: usize,
    pub genre_names: Vec<String>,
    /// `labels[m]`: genre indices of movie `m + 1` (never empty).
    pub labels: Vec<Vec<usize>>,
    /// `ratings[m][u]`: rating user `u + 1` gave movie `m + 1`, 0 if none.
    pub ratings: Vec<Vec<u8>>,
}

impl Micro {
    pub fn num_movies(&self) -> usize {
        self.labels.len()
    }

    pub fn num_genres(&self) -> usize {
        self.genre_names.len()
    }

    /// `v[m][u]` for one rating value.
    pub fn indicator(&self, r: u8) -> Vec<Vec<bool>> {
        self.ratings
            .iter()
            .map(|row| row.iter().map(|&x| x == r).collect())
            .collect()
    }

    pub fn to_dataset(&self) -> Dataset {
        let mut records = Vec::new();
        for (m, row) in self.ratings.iter().enumerate() {
            for (u, &x) in row.iter().enumerate() {
                if x > 0 {
                    records.push(RatingRecord {
                        user: u as u32 + 1,
                        movie: m as u32 + 1,
                        rating: Rating::new(x).unwrap(),
                        timestamp: 0,
                    });
                }
            }
        }
        let events = RatingEvents::with_counts(records, self.num_users, self.num_movies()).unwrap();
        let genres =
            GenreAssignment::from_membership(self.genre_names.clone(), self.labels.clone())
                .unwrap();
        Dataset::new(events, genres).unwrap()
    }
}

/// Three users, three movies, genres A and B:
/// m1 (A) rated by u1,u2; m2 (B) by u3; m3 (A,B) by u1, all with rating 3.
pub fn toy_t1() -> Micro {
    Micro {
        num_users: 3,
        genre_names: vec!["A".into(), "B".into()],
        labels: vec![vec![0], vec![1], vec![0, 1]],
        ratings: vec![vec![3, 3, 0], vec![0, 0, 3], vec![3, 0, 0]],
    }
}

/// 2..=5 users, 1..=6 movies, 1..=3 genres, ratings dense enough to matter.
pub fn random_micro<R: Rng>(rng: &mut R) -> Micro {
    let num_users = rng.gen_range(2..=5);
    let num_movies = rng.gen_range(1..=6);
    let num_genres = rng.gen_range(1..=3);
    let labels = (0..num_movies)
        .map(|_| {
            let mut set: Vec<usize> = (0..num_genres).filter(|_| rng.gen_bool(0.4)).collect();
            if set.is_empty() {
                set.push(rng.gen_range(0..num_genres));
            }
            set
        })
        .collect();
    let ratings = (0..num_movies)
        .map(|_| {
            (0..num_users)
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        rng.gen_range(1..=5)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    Micro {
        num_users,
        genre_names: (0..num_genres).map(|g| format!("g{g}")).collect(),
        labels,
        ratings,
    }
}

/// `w(g|m)`: 1/N if the movie carries genre g among its N genres.
pub fn weight(labels: &[usize], g: usize) -> f64 {
    if labels.contains(&g) {
        1.0 / labels.len() as f64
    } else {
        0.0
    }
}

/// `P(u|g,r)` table `[g][u]`; `textbook` swaps the |U| denominator term for 2.
pub fn user_prob(micro: &Micro, r: u8, train: &[usize], textbook: bool) -> Vec<Vec<f64>> {
    let v = micro.indicator(r);
    let extra = if textbook {
        2.0
    } else {
        micro.num_users as f64
    };
    (0..micro.num_genres())
        .map(|g| {
            (0..micro.num_users)
                .map(|u| {
                    let mut num = 1.0;
                    let mut den = extra;
                    for &m in train {
                        let w = weight(&micro.labels[m], g);
                        if v[m][u] {
                            num += w;
                        }
                        den += w;
                    }
                    num / den
                })
                .collect()
        })
        .collect()
}

pub fn priors(micro: &Micro, train: &[usize], uniform: bool) -> Vec<f64> {
    let n = micro.num_genres();
    if uniform {
        return vec![1.0 / n as f64; n];
    }
    (0..n)
        .map(|g| {
            let total: f64 = train.iter().map(|&m| weight(&micro.labels[m], g)).sum();
            total / train.len() as f64
        })
        .collect()
}

/// `P(m|g,r)` as a plain product over every user.
pub fn likelihood(prob: &[f64], present: &[bool]) -> f64 {
    let mut p = 1.0;
    for (u, &pu) in prob.iter().enumerate() {
        p *= if present[u] { pu } else { 1.0 - pu };
    }
    p
}

pub fn posterior(prob: &[Vec<f64>], priors: &[f64], present: &[bool]) -> Vec<f64> {
    let joint: Vec<f64> = prob
        .iter()
        .zip(priors)
        .map(|(row, prior)| likelihood(row, present) * prior)
        .collect();
    let evidence: f64 = joint.iter().sum();
    joint.iter().map(|j| j / evidence).collect()
}

/// Argmax with ties (within `tie`) resolved to the lowest index.
pub fn predict(posterior: &[f64], tie: f64) -> usize {
    let max = posterior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    posterior.iter().position(|&p| p >= max - tie).unwrap()
}

/// Pearson correlation of two columns, via centred sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}
