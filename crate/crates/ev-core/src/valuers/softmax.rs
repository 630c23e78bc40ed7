//! Softmax (multinomial logistic) regression trained by full-batch
//! gradient descent. This one trainer backs every evaluation protocol and
//! the bagged valuer.

use crate::data::EmbeddingDataset;
use crate::error::{EvError, Result};
use crate::scalar::{real, Real};

/// Linear classifier with a softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel<T> {
    /// `C x d`, row-major.
    weights: Vec<T>,
    bias: Vec<T>,
    classes: usize,
    dim: usize,
}

impl<T: Real> SoftmaxModel<T> {
    /// Zero-initialized model: predicts the uniform distribution.
    pub fn zeros(classes: usize, dim: usize) -> Self {
        SoftmaxModel {
            weights: vec![T::zero(); classes * dim],
            bias: vec![T::zero(); classes],
            classes,
            dim,
        }
    }

    /// Builds a model from explicit parameters.
    pub fn from_weights(weights: Vec<T>, bias: Vec<T>, classes: usize, dim: usize) -> Result<Self> {
        if weights.len() != classes * dim || bias.len() != classes {
            return Err(EvError::DimensionMismatch {
                expected: classes * dim,
                got: weights.len(),
            });
        }
        Ok(SoftmaxModel {
            weights,
            bias,
            classes,
            dim,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn logits(&self, x: &[T]) -> Vec<T> {
        (0..self.classes)
            .map(|c| {
                let row = &self.weights[c * self.dim..(c + 1) * self.dim];
                row.iter().zip(x).map(|(&w, &xi)| w * xi).sum::<T>() + self.bias[c]
            })
            .collect()
    }

    /// Class probabilities; numerically stabilized softmax.
    pub fn predict_proba(&self, x: &[T]) -> Vec<T> {
        let logits = self.logits(x);
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    /// Argmax class; ties resolve to the lowest class index.
    pub fn predict(&self, x: &[T]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (c, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = c;
            }
        }
        best
    }
}

/// Mean softmax cross-entropy loss of `model` on `data`.
pub fn cross_entropy_loss<T: Real>(model: &SoftmaxModel<T>, data: &EmbeddingDataset<T>) -> T {
    let n = real::<T>(data.n() as f64);
    let mut total = T::zero();
    for i in 0..data.n() {
        let p = model.predict_proba(data.row(i));
        total = total - p[data.label(i) as usize].ln();
    }
    total / n
}

/// Analytic gradient of the mean cross-entropy: `(grad_weights, grad_bias)`.
pub fn loss_gradient<T: Real>(
    model: &SoftmaxModel<T>,
    data: &EmbeddingDataset<T>,
) -> (Vec<T>, Vec<T>) {
    let (classes, d) = (model.classes(), model.dim());
    let mut gw = vec![T::zero(); classes * d];
    let mut gb = vec![T::zero(); classes];
    for i in 0..data.n() {
        let x = data.row(i);
        let p = model.predict_proba(x);
        let y = data.label(i) as usize;
        for c in 0..classes {
            let coeff = if c == y { p[c] - T::one() } else { p[c] };
            gb[c] = gb[c] + coeff;
            let row = &mut gw[c * d..(c + 1) * d];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g = *g + coeff * xi;
            }
        }
    }
    let inv_n = T::one() / real::<T>(data.n() as f64);
    for g in gw.iter_mut() {
        *g = *g * inv_n;
    }
    for g in gb.iter_mut() {
        *g = *g * inv_n;
    }
    (gw, gb)
}

/// Trains a zero-initialized model with exactly `epochs` full-batch steps.
pub fn train_softmax<T: Real>(
    train: &EmbeddingDataset<T>,
    epochs: usize,
    lr: f64,
) -> Result<SoftmaxModel<T>> {
    let lr = real::<T>(lr);
    let mut model = SoftmaxModel::zeros(train.num_classes(), train.d());
    for _ in 0..epochs {
        let (gw, gb) = loss_gradient(&model, train);
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w = *w - lr * *g;
        }
        for (b, g) in model.bias.iter_mut().zip(&gb) {
            *b = *b - lr * *g;
        }
    }
    let loss = cross_entropy_loss(&model, train);
    if !loss.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(EvError::NonFinite {
            context: "softmax training loss (learning rate too large?)".to_string(),
        });
    }
    Ok(model)
}

/// Fraction of argmax-correct predictions on `test`.
pub fn evaluate<T: Real>(model: &SoftmaxModel<T>, test: &EmbeddingDataset<T>) -> Result<T> {
    if test.d() != model.dim() {
        return Err(EvError::DimensionMismatch {
            expected: model.dim(),
            got: test.d(),
        });
    }
    let correct = (0..test.n())
        .filter(|&i| model.predict(test.row(i)) == test.label(i) as usize)
        .count();
    Ok(real::<T>(correct as f64) / real::<T>(test.n() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(features: Vec<f64>, d: usize, labels: Vec<u32>, classes: usize) -> EmbeddingDataset<f64> {
        EmbeddingDataset::new(features, d, labels, classes, "t").unwrap()
    }

    #[test]
    fn two_separable_points_reach_full_accuracy() {
        let ds = dataset(vec![1.0, 0.0, -1.0, 0.0], 2, vec![0, 1], 2);
        let model = train_softmax(&ds, 30, 0.01).unwrap();
        assert_eq!(evaluate(&model, &ds).unwrap(), 1.0);
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let ds = dataset(vec![0.5, 0.25, -0.75, 1.0], 2, vec![0, 2], 3);
        let model = train_softmax(&ds, 0, 0.01).unwrap();
        let p = model.predict_proba(ds.row(0));
        for &pi in &p {
            assert!((pi - 1.0 / 3.0).abs() < 1e-12);
        }
        // Argmax ties resolve to class 0.
        assert_eq!(model.predict(ds.row(0)), 0);
    }

    #[test]
    fn identical_features_with_conflicting_labels_stay_at_half() {
        let ds = dataset(vec![0.3, 0.3, 0.3, 0.3], 2, vec![0, 1], 2);
        let model = train_softmax(&ds, 200, 0.01).unwrap();
        assert_eq!(evaluate(&model, &ds).unwrap(), 0.5);
    }

    #[test]
    fn training_reduces_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (n, d) = (50, 4);
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = (i % 2) as u32;
            let center = if class == 0 { 1.0 } else { -1.0 };
            for _ in 0..d {
                features.push(center + 0.3 * (rng.random::<f64>() - 0.5));
            }
            labels.push(class);
        }
        let ds = dataset(features, d, labels, 2);
        let initial = cross_entropy_loss(&SoftmaxModel::zeros(2, d), &ds);
        let model = train_softmax(&ds, 30, 0.01).unwrap();
        assert!(cross_entropy_loss(&model, &ds) <= initial);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..5 {
            let (n, d, classes) = (6, 3, 3);
            let features: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..classes as u32)).collect();
            let ds = dataset(features, d, labels, classes);
            let weights: Vec<f64> = (0..classes * d).map(|_| rng.random::<f64>() - 0.5).collect();
            let bias: Vec<f64> = (0..classes).map(|_| rng.random::<f64>() - 0.5).collect();
            let model = SoftmaxModel::from_weights(weights.clone(), bias.clone(), classes, d).unwrap();
            let (gw, gb) = loss_gradient(&model, &ds);

            let h = 1e-5;
            for p in 0..classes * d {
                let mut up = weights.clone();
                let mut down = weights.clone();
                up[p] += h;
                down[p] -= h;
                let lu = cross_entropy_loss(
                    &SoftmaxModel::from_weights(up, bias.clone(), classes, d).unwrap(),
                    &ds,
                );
                let ld = cross_entropy_loss(
                    &SoftmaxModel::from_weights(down, bias.clone(), classes, d).unwrap(),
                    &ds,
                );
                let numeric = (lu - ld) / (2.0 * h);
                let denom = gw[p].abs().max(1e-8);
                assert!(
                    (gw[p] - numeric).abs() / denom <= 1e-6,
                    "trial {trial} weight {p}: analytic {} vs numeric {numeric}",
                    gw[p]
                );
            }
            for c in 0..classes {
                let mut up = bias.clone();
                let mut down = bias.clone();
                up[c] += h;
                down[c] -= h;
                let lu = cross_entropy_loss(
                    &SoftmaxModel::from_weights(weights.clone(), up, classes, d).unwrap(),
                    &ds,
                );
                let ld = cross_entropy_loss(
                    &SoftmaxModel::from_weights(weights.clone(), down, classes, d).unwrap(),
                    &ds,
                );
                let numeric = (lu - ld) / (2.0 * h);
                let denom = gb[c].abs().max(1e-8);
                assert!((gb[c] - numeric).abs() / denom <= 1e-6);
            }
        }
    }

    #[test]
    fn evaluate_rejects_dimension_mismatch() {
        let model = SoftmaxModel::<f64>::zeros(2, 3);
        let ds = dataset(vec![1.0, 2.0], 2, vec![0], 2);
        assert!(matches!(
            evaluate(&model, &ds),
            Err(EvError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_model_on_all_zero_labels_scores_one() {
        // Tie-break to class 0 makes the uniform model "perfect" here.
        let ds = dataset(vec![0.1, 0.2, 0.3, 0.4], 2, vec![0, 0], 2);
        let model = SoftmaxModel::zeros(2, 2);
        assert_eq!(evaluate(&model, &ds).unwrap(), 1.0);
    }
}
