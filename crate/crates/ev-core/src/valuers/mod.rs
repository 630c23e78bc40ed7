//! Baseline valuation methods and the shared softmax trainer.

mod knn;
mod oob;
mod softmax;

pub use knn::{knn_shapley, shapley_oracle, ShapleyConfig};
pub use oob::{bootstrap_indices, data_oob, data_oob_with, OobConfig};
pub use softmax::{cross_entropy_loss, evaluate, loss_gradient, train_softmax, SoftmaxModel};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ev::ValueVector;
use crate::scalar::{real, Real};

/// Uniform random scores in [0, 1); the weakest baseline.
pub fn random_valuer<T: Real>(n: usize, seed: u64) -> Result<ValueVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scores = (0..n).map(|_| real::<T>(rng.random::<f64>())).collect();
    Ok(ValueVector::new("random", scores)?.with_seed(seed))
}

/// Deterministic scores equal to the point index; useful as a fully stable
/// reference in ranking protocols.
pub fn index_valuer<T: Real>(n: usize) -> Result<ValueVector<T>> {
    ValueVector::new("index", (0..n).map(|i| real::<T>(i as f64)).collect())
}
