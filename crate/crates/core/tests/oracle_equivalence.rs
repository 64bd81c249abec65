#![allow(clippy::needless_range_loop)]

mod support {
    pub mod equivalence;
    pub mod oracle;
}

use genre_nb::correlation::{compute_correlation, CorrelationEstimator};
use genre_nb::dataset::Rating;
use genre_nb::evaluation::{EvalOptions, Evaluator, Split};
use genre_nb::model::{
    estimate_priors, train_preference_model, FeatureVector, PriorMode, Smoothing, TrainOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::equivalence::compare;
use support::oracle::{self, toy_t1};

const TOL: f64 = 1e-12;

fn r3() -> Rating {
    Rating::new(3).unwrap()
}

// Frozen from the oracle on T1: genre mass of A and B is 1.5 each, so every
// denominator is 3 + 1.5.
const T1_PROB_A: [f64; 3] = [2.5 / 4.5, 2.0 / 4.5, 1.0 / 4.5];
const T1_PROB_B: [f64; 3] = [1.5 / 4.5, 1.0 / 4.5, 2.0 / 4.5];
// Products for a movie rated 3 by u1 only.
const T1_LIK_A: f64 = (2.5 / 4.5) * (2.5 / 4.5) * (3.5 / 4.5);
const T1_LIK_B: f64 = (1.5 / 4.5) * (3.5 / 4.5) * (2.5 / 4.5);

#[test]
fn oracle_reproduces_frozen_t1_values() {
    let t1 = toy_t1();
    let probs = oracle::user_prob(&t1, 3, &[0, 1, 2], false);
    for u in 0..3 {
        assert!((probs[0][u] - T1_PROB_A[u]).abs() < TOL);
        assert!((probs[1][u] - T1_PROB_B[u]).abs() < TOL);
    }
    assert_eq!(oracle::priors(&t1, &[0, 1, 2], false), vec![0.5, 0.5]);
    let present = [true, false, false];
    assert!((oracle::likelihood(&probs[0], &present) - T1_LIK_A).abs() < TOL);
    assert!((oracle::likelihood(&probs[1], &present) - T1_LIK_B).abs() < TOL);
    // rounded values quoted for the toy example
    assert!((T1_LIK_A - 0.2401).abs() < 5e-5);
    assert!((T1_LIK_B - 0.1440).abs() < 5e-5);
    let post = oracle::posterior(&probs, &[0.5, 0.5], &present);
    assert!((post[0] - 0.625).abs() < TOL);
    assert!((post[1] - 0.375).abs() < TOL);
}

#[test]
fn library_matches_frozen_t1_values() {
    let ds = toy_t1().to_dataset();
    let matrix = ds.indicator(r3());
    let model =
        train_preference_model(&matrix, &ds.genres, &[1, 2, 3], &TrainOptions::default()).unwrap();
    for u in 0..3u32 {
        assert!((model.user_prob(0, u + 1) - T1_PROB_A[u as usize]).abs() < TOL);
        assert!((model.user_prob(1, u + 1) - T1_PROB_B[u as usize]).abs() < TOL);
    }
    assert_eq!(model.priors(), &[0.5, 0.5]);
    assert_eq!(
        estimate_priors(&ds.genres, &[1, 2, 3], PriorMode::Empirical).unwrap(),
        vec![0.5, 0.5]
    );

    let u1 = FeatureVector::new(r3(), vec![1], 3).unwrap();
    assert!((model.log_likelihood(&u1, 0).unwrap() - T1_LIK_A.ln()).abs() < TOL);
    assert!((model.log_likelihood(&u1, 1).unwrap() - T1_LIK_B.ln()).abs() < TOL);
    let post = model.posterior(&u1).unwrap();
    assert!((post.probabilities[0] - 0.625).abs() < TOL);
    assert!((post.probabilities[1] - 0.375).abs() < TOL);
    assert_eq!(model.predict(&u1).unwrap(), 0);
}

#[test]
fn t1_correlation_is_minus_half() {
    let t1 = toy_t1();
    let a = [1.0, 0.0, 1.0];
    let b = [0.0, 1.0, 1.0];
    assert!((oracle::pearson(&a, &b).unwrap() + 0.5).abs() < TOL);
    let ds = t1.to_dataset();
    let c = compute_correlation(&ds.genres, &[1, 2, 3], CorrelationEstimator::Membership).unwrap();
    assert!((c.get(0, 1).unwrap() + 0.5).abs() < TOL);
}

#[test]
fn t1_test_movie_is_exact_hit() {
    // T1 trains; a fourth movie labeled A, rated 3 by u1 only, is the test set.
    let mut t1 = toy_t1();
    t1.labels.push(vec![0]);
    t1.ratings.push(vec![3, 0, 0]);
    let ds = t1.to_dataset();
    let eval = Evaluator::new(&ds, EvalOptions::default()).unwrap();
    let split = Split {
        train: vec![1, 2, 3],
        test: vec![4],
    };
    let acc = eval.evaluate_split(r3(), &split).unwrap();
    assert_eq!((acc.num_exact, acc.num_similar, acc.num_wrong), (1, 0, 0));
    assert_eq!(acc.exact, 1.0);
}

#[test]
fn t1_matches_oracle_across_options() {
    for smoothing in [Smoothing::Users, Smoothing::Textbook] {
        for prior_mode in [PriorMode::Empirical, PriorMode::Uniform] {
            let dev = compare(
                &toy_t1(),
                &[0, 1, 2],
                TrainOptions {
                    smoothing,
                    prior_mode,
                },
            );
            assert!(
                dev.max_value_deviation() < TOL,
                "{smoothing}/{prior_mode}: {dev:?}"
            );
            assert_eq!(dev.prediction_mismatches, 0);
        }
    }
}

#[test]
fn random_micro_datasets_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let micro = oracle::random_micro(&mut rng);
        let n = micro.num_movies();
        let mut train: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
        if train.is_empty() {
            train.push(rng.gen_range(0..n));
        }
        let options = TrainOptions {
            smoothing: if rng.gen_bool(0.5) {
                Smoothing::Users
            } else {
                Smoothing::Textbook
            },
            prior_mode: if rng.gen_bool(0.5) {
                PriorMode::Empirical
            } else {
                PriorMode::Uniform
            },
        };
        let dev = compare(&micro, &train, options);
        assert!(dev.max_value_deviation() < TOL, "{micro:?}: {dev:?}");
        assert_eq!(dev.prediction_mismatches, 0, "{micro:?}");
    }
}

#[test]
fn determinism_is_bitwise() {
    let ds = toy_t1().to_dataset();
    let train = || {
        train_preference_model(
            &ds.indicator(r3()),
            &ds.genres,
            &[3, 1, 2],
            &TrainOptions::default(),
        )
        .unwrap()
    };
    let (a, b) = (train(), train());
    let mut fa = Vec::new();
    let mut fb = Vec::new();
    a.write(&mut fa).unwrap();
    b.write(&mut fb).unwrap();
    assert_eq!(fa, fb);
}

fn random_model_inputs() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>, Vec<f64>)> {
    (2usize..=30, 1usize..=4).prop_flat_map(|(users, genres)| {
        (
            proptest::collection::vec(proptest::collection::vec(0.001f64..0.999, users), genres),
            proptest::collection::vec(any::<bool>(), users),
            proptest::collection::vec(0.01f64..1.0, genres),
        )
    })
}

proptest! {
    // Log-space likelihood against the direct product on random tables
    // reached through real training data.
    #[test]
    fn log_space_matches_direct_product(seed in any::<u64>(), users in 2usize..=30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let movies = rng.gen_range(1..=12);
        let micro = oracle::Micro {
            num_users: users,
            genre_names: vec!["a".into(), "b".into(), "c".into()],
            labels: (0..movies).map(|m| vec![m % 3]).collect(),
            ratings: (0..movies)
                .map(|_| (0..users).map(|_| if rng.gen_bool(0.5) { 3 } else { 0 }).collect())
                .collect(),
        };
        let ds = micro.to_dataset();
        let ids: Vec<u32> = (1..=movies as u32).collect();
        let model = train_preference_model(&ds.indicator(r3()), &ds.genres, &ids, &TrainOptions::default()).unwrap();
        let probs = oracle::user_prob(&micro, 3, &(0..movies).collect::<Vec<_>>(), false);
        let present: Vec<bool> = (0..users).map(|_| rng.gen_bool(0.5)).collect();
        let rated: Vec<u32> = (0..users as u32).filter(|&u| present[u as usize]).map(|u| u + 1).collect();
        let f = FeatureVector::new(r3(), rated, users).unwrap();
        for g in 0..3 {
            if model.genre_mass()[g] == 0.0 { continue; }
            let direct = oracle::likelihood(&probs[g], &present);
            let via_log = model.log_likelihood(&f, g).unwrap().exp();
            prop_assert!(((via_log - direct) / direct).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_posterior_normalizes((probs, present, priors) in random_model_inputs()) {
        let total: f64 = priors.iter().sum();
        let priors: Vec<f64> = priors.iter().map(|p| p / total).collect();
        let post = oracle::posterior(&probs, &priors, &present);
        prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn micro_equivalence_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let micro = oracle::random_micro(&mut rng);
        let train: Vec<usize> = (0..micro.num_movies()).collect();
        let dev = compare(&micro, &train, TrainOptions::default());
        prop_assert!(dev.max_value_deviation() < TOL);
        prop_assert_eq!(dev.prediction_mismatches, 0);
    }
}
