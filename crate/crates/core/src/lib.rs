//! Naive Bayes for regression (NBR) trained on small artificial surrogate
//! datasets that are evolved with competitive swarm optimisation (CSO).
//!
//! The crate is organised bottom-up:
//!
//! - [`tabular`]: datasets, CSV/ARFF loading, imputation, splitting
//! - [`kde`]: Gaussian kernel density estimators and bandwidth selection
//! - [`nbr`]: the naive Bayes regression model and posterior-mode prediction
//! - [`linreg`]: ridge-stabilised least-squares baseline
//! - [`swarm`]: CSO and standard PSO minimisers
//! - [`surrogate`]: particle/dataset codec, fitness function, training pipeline
//! - [`stats`]: aggregation of repeated runs and one-sided t-tests
//! - [`peak`]: the synthetic 2D peak problem and contour grids
//! - [`harness`]: experiment orchestration and report files

pub mod error;
pub mod harness;
pub mod kde;
pub mod linreg;
pub mod nbr;
pub mod peak;
pub mod stats;
pub mod surrogate;
pub mod swarm;
pub mod tabular;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every seeded random stream in the crate.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Root mean squared error of paired predictions and targets.
pub fn rmse_of(predictions: &[f64], actual: &[f64]) -> f64 {
    debug_assert_eq!(predictions.len(), actual.len());
    let sse: f64 = predictions
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    (sse / actual.len() as f64).sqrt()
}
