//! Small generated dataset so the page works without an upload.
//!
//! Every user has a favourite genre. Users rate movies of their favourite
//! genre more often and more highly, so each rating value carries some
//! genre signal.

use genre_nb::dataset::{Dataset, GenreAssignment, Rating, RatingEvents, RatingRecord};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GENRES: [&str; 5] = ["Action", "Comedy", "Drama", "Horror", "Romance"];
pub const USERS: u32 = 120;
pub const MOVIES: u32 = 300;

pub fn generate(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = GENRES.len();

    let membership: Vec<Vec<usize>> = (0..MOVIES)
        .map(|_| {
            let first = rng.gen_range(0..g);
            let mut labels = vec![first];
            if rng.gen_bool(0.3) {
                let second = rng.gen_range(0..g);
                if second != first {
                    labels.push(second);
                }
            }
            labels.sort_unstable();
            labels
        })
        .collect();
    let favourite: Vec<usize> = (0..USERS).map(|_| rng.gen_range(0..g)).collect();

    let mut records = Vec::new();
    for (m, labels) in membership.iter().enumerate() {
        for (u, fav) in favourite.iter().enumerate() {
            let likes = labels.contains(fav);
            if !rng.gen_bool(if likes { 0.3 } else { 0.08 }) {
                continue;
            }
            let value = if likes {
                rng.gen_range(3..=5)
            } else {
                rng.gen_range(1..=4)
            };
            records.push(RatingRecord {
                user: u as u32 + 1,
                movie: m as u32 + 1,
                rating: Rating::new(value).expect("value in 1..=5"),
                timestamp: 0,
            });
        }
    }
    let names = GENRES.iter().map(|s| s.to_string()).collect();
    let genres = GenreAssignment::from_membership(names, membership).expect("labels in range");
    let events =
        RatingEvents::with_counts(records, USERS as usize, MOVIES as usize).expect("ids in range");
    Dataset::new(events, genres).expect("consistent sizes")
}
