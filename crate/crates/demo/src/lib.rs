//! wasm-bindgen bindings for the genre explorer page in `www/`.
//!
//! The bindings are thin: each returns a JSON string built from the
//! [`explorer`] types, which are plain Rust and tested natively.

pub mod explorer;
pub mod synthetic;

use genre_nb::dataset::Rating;
use genre_nb::evaluation::EvalOptions;
use genre_nb::model::TrainOptions;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use explorer::Explorer;

fn js(e: genre_nb::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view types serialize")
}

fn rating(r: u8) -> Result<Rating, JsError> {
    Rating::new(r).map_err(js)
}

fn train_options(prior: &str, smoothing: &str) -> Result<TrainOptions, JsError> {
    Ok(TrainOptions {
        prior_mode: prior.parse().map_err(js)?,
        smoothing: smoothing.parse().map_err(js)?,
    })
}

#[wasm_bindgen]
pub struct Demo {
    inner: Explorer,
}

#[wasm_bindgen]
impl Demo {
    /// Generated dataset; see [`synthetic`].
    pub fn synthetic(seed: u32) -> Demo {
        Demo {
            inner: Explorer::new(synthetic::generate(seed as u64))
                .expect("generated data is labeled"),
        }
    }

    #[wasm_bindgen(js_name = fromDatasetFile)]
    pub fn from_dataset_file(text: &str) -> Result<Demo, JsError> {
        Ok(Demo {
            inner: Explorer::from_dataset_file(text).map_err(js)?,
        })
    }

    #[wasm_bindgen(js_name = fromMovieLens)]
    pub fn from_movielens(data: &[u8], items: &[u8]) -> Result<Demo, JsError> {
        Ok(Demo {
            inner: Explorer::from_movielens(data, items).map_err(js)?,
        })
    }

    pub fn summary(&self) -> String {
        json(&self.inner.summary())
    }

    /// `estimator` is `membership` or `weights`.
    pub fn correlation(&self, estimator: &str) -> Result<String, JsError> {
        let estimator = estimator.parse().map_err(js)?;
        Ok(json(&self.inner.correlation(estimator).map_err(js)?))
    }

    /// `train_fraction` of `undefined` trains on every other labeled movie.
    #[allow(clippy::too_many_arguments)]
    pub fn posterior(
        &self,
        rating_value: u8,
        movie: u32,
        train_fraction: Option<f64>,
        seed: u32,
        prior: &str,
        smoothing: &str,
        threshold: f64,
    ) -> Result<String, JsError> {
        let view = self
            .inner
            .posterior(
                rating(rating_value)?,
                movie,
                train_fraction,
                seed as u64,
                &train_options(prior, smoothing)?,
                threshold,
            )
            .map_err(js)?;
        Ok(json(&view))
    }

    #[wasm_bindgen(js_name = learningCurve)]
    #[allow(clippy::too_many_arguments)]
    pub fn learning_curve(
        &self,
        rating_value: u8,
        fractions: Vec<f64>,
        repetitions: u32,
        seed: u32,
        prior: &str,
        smoothing: &str,
        threshold: f64,
    ) -> Result<String, JsError> {
        let options = EvalOptions {
            threshold,
            train: train_options(prior, smoothing)?,
            ..EvalOptions::default()
        };
        let view = self
            .inner
            .learning_curve(
                rating(rating_value)?,
                &fractions,
                repetitions as usize,
                seed as u64,
                options,
            )
            .map_err(js)?;
        Ok(json(&view))
    }
}
