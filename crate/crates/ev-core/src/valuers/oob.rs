//! Out-of-bag valuation: bag a fleet of softmax models, score each point by
//! how often the models that never saw it still predict its label.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::EmbeddingDataset;
use crate::error::{EvError, Result};
use crate::ev::ValueVector;
use crate::scalar::{real, Real};

use super::softmax::train_softmax;

/// Bagging parameters.
///
/// The desk-scale default is 100 models with 10 training epochs each; the
/// reference configuration of 800 models stays reachable through the CLI.
#[derive(Debug, Clone, Copy)]
pub struct OobConfig {
    pub num_models: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for OobConfig {
    fn default() -> Self {
        OobConfig {
            num_models: 100,
            epochs: 10,
            lr: 0.01,
        }
    }
}

/// Bootstrap sample of size `n` for one model, from the generator seeded
/// with `seed + model_index`.
pub fn bootstrap_indices(seed: u64, model_index: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(model_index));
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Out-of-bag scores with the default configuration.
pub fn data_oob<T: Real>(
    train: &EmbeddingDataset<T>,
    num_models: usize,
    seed: u64,
) -> Result<ValueVector<T>> {
    let cfg = OobConfig {
        num_models,
        ..OobConfig::default()
    };
    Ok(data_oob_with(train, &cfg, seed)?.0)
}

/// Out-of-bag scores plus the indices that were never out of bag.
///
/// Per-model generators make the result independent of worker scheduling:
/// counts are integers, so the reduction is exact in any order.
pub fn data_oob_with<T: Real>(
    train: &EmbeddingDataset<T>,
    cfg: &OobConfig,
    seed: u64,
) -> Result<(ValueVector<T>, Vec<usize>)> {
    if cfg.num_models == 0 {
        return Err(EvError::invalid("num_models must be at least 1"));
    }
    let n = train.n();
    if n < 2 {
        return Err(EvError::invalid("out-of-bag valuation needs at least 2 points"));
    }

    let counts = (0..cfg.num_models)
        .into_par_iter()
        .map(|m| -> Result<(Vec<u32>, Vec<u32>)> {
            let indices = bootstrap_indices(seed, m as u64, n);
            let mut in_bag = vec![false; n];
            for &i in &indices {
                in_bag[i] = true;
            }
            let sample = train.subset(&indices)?;
            let model = train_softmax(&sample, cfg.epochs, cfg.lr).map_err(|e| {
                EvError::ModelTraining {
                    model: m,
                    source: Box::new(e),
                }
            })?;
            let mut oob = vec![0u32; n];
            let mut correct = vec![0u32; n];
            for i in 0..n {
                if in_bag[i] {
                    continue;
                }
                oob[i] = 1;
                if model.predict(train.row(i)) == train.label(i) as usize {
                    correct[i] = 1;
                }
            }
            Ok((oob, correct))
        })
        .try_reduce(
            || (vec![0u32; n], vec![0u32; n]),
            |(mut oob_a, mut cor_a), (oob_b, cor_b)| {
                for (a, b) in oob_a.iter_mut().zip(&oob_b) {
                    *a += b;
                }
                for (a, b) in cor_a.iter_mut().zip(&cor_b) {
                    *a += b;
                }
                Ok((oob_a, cor_a))
            },
        )?;

    let (oob_counts, correct_counts) = counts;
    let mut never_oob = Vec::new();
    let scores = (0..n)
        .map(|i| {
            if oob_counts[i] == 0 {
                never_oob.push(i);
                T::zero()
            } else {
                real::<T>(correct_counts[i] as f64) / real::<T>(oob_counts[i] as f64)
            }
        })
        .collect();
    let values = ValueVector::new("data-oob", scores)?.with_seed(seed);
    Ok((values, never_oob))
}
