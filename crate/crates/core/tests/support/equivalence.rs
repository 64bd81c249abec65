//! Library-vs-oracle comparison over every rating value of a micro dataset.

#![allow(dead_code, clippy::needless_range_loop)]

use genre_nb::dataset::Rating;
use genre_nb::model::{
    estimate_priors, train_preference_model, FeatureVector, PriorMode, Smoothing, TrainOptions,
};

use super::oracle::{self, Micro};

/// Largest absolute deviations seen, per quantity.
#[derive(Debug, Default, Clone, Copy)]
pub struct Deviation {
    pub prob: f64,
    pub prior: f64,
    pub likelihood: f64,
    pub log_likelihood: f64,
    pub posterior: f64,
    pub prediction_mismatches: usize,
    pub predictions: usize,
}

impl Deviation {
    pub fn merge(&mut self, o: &Deviation) {
        self.prob = self.prob.max(o.prob);
        self.prior = self.prior.max(o.prior);
        self.likelihood = self.likelihood.max(o.likelihood);
        self.log_likelihood = self.log_likelihood.max(o.log_likelihood);
        self.posterior = self.posterior.max(o.posterior);
        self.prediction_mismatches += o.prediction_mismatches;
        self.predictions += o.predictions;
    }

    pub fn max_value_deviation(&self) -> f64 {
        [
            self.prob,
            self.prior,
            self.likelihood,
            self.log_likelihood,
            self.posterior,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Trains on movies `train` (0-based) for every rating and compares every
/// model quantity on every movie.
pub fn compare(micro: &Micro, train: &[usize], options: TrainOptions) -> Deviation {
    let dataset = micro.to_dataset();
    let train_ids: Vec<u32> = train.iter().map(|&m| m as u32 + 1).collect();
    let textbook = options.smoothing == Smoothing::Textbook;
    let uniform = options.prior_mode == PriorMode::Uniform;
    let mut dev = Deviation::default();

    for r in 1..=5u8 {
        let rating = Rating::new(r).unwrap();
        let matrix = dataset.indicator(rating);
        let model = train_preference_model(&matrix, &dataset.genres, &train_ids, &options).unwrap();
        let probs = oracle::user_prob(micro, r, train, textbook);
        let priors = oracle::priors(micro, train, uniform);
        let lib_priors = estimate_priors(&dataset.genres, &train_ids, options.prior_mode).unwrap();

        for g in 0..micro.num_genres() {
            for u in 0..micro.num_users {
                dev.prob = dev
                    .prob
                    .max((model.user_prob(g, u as u32 + 1) - probs[g][u]).abs());
            }
            dev.prior = dev.prior.max((model.priors()[g] - priors[g]).abs());
            dev.prior = dev.prior.max((lib_priors[g] - priors[g]).abs());
        }

        let v = micro.indicator(r);
        for m in 0..micro.num_movies() {
            let features = FeatureVector::from_matrix(&matrix, m as u32 + 1);
            for g in 0..micro.num_genres() {
                let expected = oracle::likelihood(&probs[g], &v[m]);
                let ll = model.log_likelihood(&features, g).unwrap();
                dev.likelihood = dev.likelihood.max((ll.exp() - expected).abs());
                dev.log_likelihood = dev.log_likelihood.max((ll - expected.ln()).abs());
            }
            let expected = oracle::posterior(&probs, &priors, &v[m]);
            let post = model.posterior(&features).unwrap();
            for g in 0..micro.num_genres() {
                dev.posterior = dev
                    .posterior
                    .max((post.probabilities[g] - expected[g]).abs());
            }
            dev.predictions += 1;
            if model.predict(&features).unwrap() != oracle::predict(&expected, 1e-12) {
                dev.prediction_mismatches += 1;
            }
        }
    }
    dev
}
