//! Shapley values under a K-nearest-neighbor utility.
//!
//! [`knn_shapley`] is the exact closed-form recursion: per validation point,
//! training points sorted by distance get scores built from the farthest
//! inward, and the per-point score is the mean over validation points.
//! [`shapley_oracle`] evaluates the Shapley definition over all `2^n`
//! subsets and exists to validate the recursion; both use the utility
//! `U(S) = mean_val (matching labels among the min(K,|S|) nearest in S) / K`
//! with `U(empty) = 0`.

use rayon::prelude::*;

use crate::data::EmbeddingDataset;
use crate::error::{EvError, Result};
use crate::ev::ValueVector;
use crate::scalar::{real, Real};

/// Exhaustive-enumeration limit for the oracle.
const ORACLE_LIMIT: usize = 12;

/// Configuration of the KNN utility.
#[derive(Debug, Clone, Copy)]
pub struct ShapleyConfig {
    pub k_neighbors: usize,
    /// Utility assigned to the empty coalition; the recursion is exact for 0.
    pub empty_set_utility: f64,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        ShapleyConfig {
            k_neighbors: 1000,
            empty_set_utility: 0.0,
        }
    }
}

fn check_dims<T: Real>(train: &EmbeddingDataset<T>, val: &EmbeddingDataset<T>) -> Result<()> {
    if val.n() == 0 {
        return Err(EvError::EmptyValidation);
    }
    if train.d() != val.d() {
        return Err(EvError::DimensionMismatch {
            expected: train.d(),
            got: val.d(),
        });
    }
    Ok(())
}

/// Training indices sorted by ascending distance to `x`, distance ties
/// broken by ascending index.
fn neighbor_order<T: Real>(train: &EmbeddingDataset<T>, x: &[T]) -> Vec<usize> {
    let mut order: Vec<(T, usize)> = (0..train.n())
        .map(|i| {
            let dist_sq = train
                .row(i)
                .iter()
                .zip(x)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>();
            (dist_sq, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(&b.1)));
    order.into_iter().map(|(_, i)| i).collect()
}

/// Exact KNN-Shapley scores for every training point.
pub fn knn_shapley<T: Real>(
    train: &EmbeddingDataset<T>,
    val: &EmbeddingDataset<T>,
    cfg: &ShapleyConfig,
) -> Result<ValueVector<T>> {
    check_dims(train, val)?;
    let n = train.n();
    let k = cfg.k_neighbors;
    if k == 0 || k > n {
        return Err(EvError::invalid(format!(
            "k_neighbors must lie in [1, {n}], got {k}"
        )));
    }

    let per_val: Vec<Vec<T>> = (0..val.n())
        .into_par_iter()
        .map(|v| {
            let y_val = val.label(v);
            let order = neighbor_order(train, val.row(v));
            let mut scores = vec![T::zero(); n];
            // Farthest point first: s = match/N, then walk inward with
            // s_i = s_{i+1} + (match_i - match_{i+1}) * min(K,i)/(K*i).
            let matches = |t: usize| -> T {
                if train.label(t) == y_val {
                    T::one()
                } else {
                    T::zero()
                }
            };
            let mut running = matches(order[n - 1]) / real::<T>(n as f64);
            scores[order[n - 1]] = running;
            for i in (1..n).rev() {
                // order[i-1] has rank i (1-based) among neighbors.
                let rank = i;
                let coeff = real::<T>(k.min(rank) as f64) / real::<T>((k * rank) as f64);
                running = running + (matches(order[i - 1]) - matches(order[i])) * coeff;
                scores[order[i - 1]] = running;
            }
            scores
        })
        .collect();

    // Deterministic accumulation in validation order.
    let inv_v = T::one() / real::<T>(val.n() as f64);
    let mut totals = vec![T::zero(); n];
    for scores in &per_val {
        for (t, s) in totals.iter_mut().zip(scores) {
            *t = *t + *s;
        }
    }
    for t in totals.iter_mut() {
        *t = *t * inv_v;
    }
    ValueVector::new("knn-shapley", totals)
}

/// Utility of coalition `mask` under the KNN accuracy measure.
fn coalition_utility(
    orders: &[Vec<usize>],
    train_labels: &[u32],
    val_labels: &[u32],
    mask: u32,
    k: usize,
    empty_utility: f64,
) -> f64 {
    if mask == 0 {
        return empty_utility;
    }
    let size = mask.count_ones() as usize;
    let take = k.min(size);
    let mut total = 0.0;
    for (order, &y_val) in orders.iter().zip(val_labels) {
        let mut seen = 0;
        let mut matched = 0;
        for &t in order {
            if mask & (1 << t) == 0 {
                continue;
            }
            if train_labels[t] == y_val {
                matched += 1;
            }
            seen += 1;
            if seen == take {
                break;
            }
        }
        total += matched as f64 / k as f64;
    }
    total / val_labels.len() as f64
}

/// Exact Shapley values by enumerating all coalitions; `n <= 12`.
pub fn shapley_oracle<T: Real>(
    train: &EmbeddingDataset<T>,
    val: &EmbeddingDataset<T>,
    cfg: &ShapleyConfig,
) -> Result<ValueVector<T>> {
    check_dims(train, val)?;
    let n = train.n();
    if n > ORACLE_LIMIT {
        return Err(EvError::TooLarge {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    let k = cfg.k_neighbors;
    if k == 0 || k > n {
        return Err(EvError::invalid(format!(
            "k_neighbors must lie in [1, {n}], got {k}"
        )));
    }

    let orders: Vec<Vec<usize>> = (0..val.n())
        .map(|v| neighbor_order(train, val.row(v)))
        .collect();
    let utilities: Vec<f64> = (0..1u32 << n)
        .map(|mask| {
            coalition_utility(
                &orders,
                train.labels(),
                val.labels(),
                mask,
                k,
                cfg.empty_set_utility,
            )
        })
        .collect();

    // factorial[s] * factorial[n-s-1] / factorial[n] weights, exact in f64
    // up to 12!.
    let mut factorial = vec![1.0f64; n + 1];
    for i in 1..=n {
        factorial[i] = factorial[i - 1] * i as f64;
    }

    let mut phi = vec![0.0f64; n];
    for (point, phi_k) in phi.iter_mut().enumerate() {
        let bit = 1u32 << point;
        for mask in 0..1u32 << n {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = factorial[s] * factorial[n - s - 1] / factorial[n];
            *phi_k += weight * (utilities[(mask | bit) as usize] - utilities[mask as usize]);
        }
    }
    ValueVector::new("shapley-oracle", phi.into_iter().map(real::<T>).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(features: Vec<f64>, d: usize, labels: Vec<u32>, classes: usize) -> EmbeddingDataset<f64> {
        EmbeddingDataset::new(features, d, labels, classes, "t").unwrap()
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        n: usize,
        n_val: usize,
        classes: u32,
    ) -> (EmbeddingDataset<f64>, EmbeddingDataset<f64>) {
        let d = 2;
        let train = dataset(
            (0..n * d).map(|_| rng.random::<f64>()).collect(),
            d,
            (0..n).map(|_| rng.random_range(0..classes)).collect(),
            classes as usize,
        );
        let val = dataset(
            (0..n_val * d).map(|_| rng.random::<f64>()).collect(),
            d,
            (0..n_val).map(|_| rng.random_range(0..classes)).collect(),
            classes as usize,
        );
        (train, val)
    }

    #[test]
    fn two_point_hand_case() {
        let train = dataset(vec![0.0, 1.0], 1, vec![0, 1], 2);
        let val = dataset(vec![0.1], 1, vec![0], 2);
        let cfg = ShapleyConfig {
            k_neighbors: 1,
            empty_set_utility: 0.0,
        };
        let scores = knn_shapley(&train, &val, &cfg).unwrap().scores;
        assert!((scores[0] - 1.0).abs() < 1e-12);
        assert!(scores[1].abs() < 1e-12);
        // Brute force agrees.
        let oracle = shapley_oracle(&train, &val, &cfg).unwrap().scores;
        assert!((oracle[0] - 1.0).abs() < 1e-12);
        assert!(oracle[1].abs() < 1e-12);
    }

    #[test]
    fn equidistant_matching_labels_share_value() {
        // Four points on a circle around the validation point, all with the
        // validation label: symmetry forces 1/n each.
        let n = 4;
        let features: Vec<f64> = (0..n)
            .flat_map(|i| {
                let a = i as f64 * std::f64::consts::FRAC_PI_2;
                [a.cos(), a.sin()]
            })
            .collect();
        let train = dataset(features, 2, vec![1; n], 2);
        let val = dataset(vec![0.0, 0.0], 2, vec![1], 2);
        let cfg = ShapleyConfig {
            k_neighbors: n,
            empty_set_utility: 0.0,
        };
        for s in knn_shapley(&train, &val, &cfg).unwrap().scores {
            assert!((s - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn recursion_matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let n = rng.random_range(3..=8);
            let (train, val) = random_instance(&mut rng, n, 3, 2);
            for k in 1..=3usize.min(n) {
                let cfg = ShapleyConfig {
                    k_neighbors: k,
                    empty_set_utility: 0.0,
                };
                let fast = knn_shapley(&train, &val, &cfg).unwrap().scores;
                let slow = shapley_oracle(&train, &val, &cfg).unwrap().scores;
                for (f, s) in fast.iter().zip(&slow) {
                    assert!((f - s).abs() <= 1e-9, "k={k}: {f} vs {s}");
                }
            }
        }
    }

    #[test]
    fn efficiency_scores_sum_to_full_utility() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (train, val) = random_instance(&mut rng, 7, 4, 3);
        let cfg = ShapleyConfig {
            k_neighbors: 3,
            empty_set_utility: 0.0,
        };
        let total: f64 = knn_shapley(&train, &val, &cfg).unwrap().scores.iter().sum();
        // U(N) computed directly via the oracle's utility helper.
        let orders: Vec<Vec<usize>> = (0..val.n())
            .map(|v| neighbor_order(&train, val.row(v)))
            .collect();
        let full = coalition_utility(
            &orders,
            train.labels(),
            val.labels(),
            (1u32 << train.n()) - 1,
            cfg.k_neighbors,
            0.0,
        );
        assert!((total - full).abs() <= 1e-9);
    }

    #[test]
    fn oracle_efficiency_and_symmetry() {
        // Single matching training point gets the whole utility.
        let train = dataset(vec![0.4], 1, vec![1], 2);
        let val = dataset(vec![0.5], 1, vec![1], 2);
        let cfg = ShapleyConfig {
            k_neighbors: 1,
            empty_set_utility: 0.0,
        };
        let phi = shapley_oracle(&train, &val, &cfg).unwrap().scores;
        assert!((phi[0] - 1.0).abs() < 1e-12);

        // Duplicate training points share value (symmetry axiom).
        let train = dataset(vec![0.4, 0.4, 0.9], 1, vec![1, 1, 0], 2);
        let val = dataset(vec![0.5, 0.2], 1, vec![1, 0], 2);
        let phi = shapley_oracle(&train, &val, &cfg).unwrap().scores;
        assert!((phi[0] - phi[1]).abs() < 1e-12);

        // Efficiency: sum phi = U(N).
        let orders: Vec<Vec<usize>> = (0..val.n())
            .map(|v| neighbor_order(&train, val.row(v)))
            .collect();
        let full = coalition_utility(&orders, train.labels(), val.labels(), 0b111, 1, 0.0);
        let total: f64 = phi.iter().sum();
        assert!((total - full).abs() <= 1e-12);
    }

    #[test]
    fn rejects_empty_validation_and_bad_k() {
        let train = dataset(vec![0.0, 1.0], 1, vec![0, 1], 2);
        let cfg = ShapleyConfig {
            k_neighbors: 5,
            empty_set_utility: 0.0,
        };
        let val = dataset(vec![0.1], 1, vec![0], 2);
        assert!(matches!(
            knn_shapley(&train, &val, &cfg),
            Err(EvError::Invalid(_))
        ));
        let oracle_big = dataset((0..13).map(|i| i as f64).collect(), 1, vec![0; 13], 2);
        assert!(matches!(
            shapley_oracle(&oracle_big, &val, &ShapleyConfig { k_neighbors: 1, empty_set_utility: 0.0 }),
            Err(EvError::TooLarge { .. })
        ));
    }
}
