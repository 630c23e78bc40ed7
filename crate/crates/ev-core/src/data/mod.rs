//! Dataset representation, the normalization pipeline, file formats, the
//! synthetic covariate-shift generator, and the PCA variance-gap report.

mod io;
mod pca;
mod synth;

pub use io::{load_csv, load_evds, save_csv, save_evds};
pub use pca::{pca_variance_gap, VarianceGap};
pub use synth::{sample_gaussian, synth_shift_pair, ShiftSpec, SynthPair};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{EvError, Result};
use crate::scalar::{real, spec_tol, to_f64, Real};

/// An `n x d` feature matrix with integer class labels and a domain tag.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset<T> {
    n: usize,
    d: usize,
    features: Vec<T>,
    labels: Vec<u32>,
    num_classes: usize,
    domain_tag: String,
}

impl<T: Real> EmbeddingDataset<T> {
    /// Builds a dataset, validating finiteness and label range.
    pub fn new(
        features: Vec<T>,
        d: usize,
        labels: Vec<u32>,
        num_classes: usize,
        domain_tag: impl Into<String>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(EvError::invalid("dimension must be positive"));
        }
        if labels.is_empty() {
            return Err(EvError::invalid("dataset must contain at least one point"));
        }
        if features.len() != labels.len() * d {
            return Err(EvError::DimensionMismatch {
                expected: labels.len() * d,
                got: features.len(),
            });
        }
        if num_classes == 0 {
            return Err(EvError::invalid("num_classes must be positive"));
        }
        for (idx, &x) in features.iter().enumerate() {
            if !x.is_finite() {
                return Err(EvError::NonFinite {
                    context: format!("feature ({},{})", idx / d, idx % d),
                });
            }
        }
        for (index, &label) in labels.iter().enumerate() {
            if label as usize >= num_classes {
                return Err(EvError::LabelOutOfRange {
                    index,
                    label,
                    classes: num_classes,
                });
            }
        }
        Ok(EmbeddingDataset {
            n: labels.len(),
            d,
            features,
            labels,
            num_classes,
            domain_tag: domain_tag.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(EvError::invalid(format!(
                    "subset index {i} out of bounds for {} points",
                    self.n
                )));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        EmbeddingDataset::new(features, self.d, labels, self.num_classes, self.domain_tag.clone())
    }

    /// Concatenation of two datasets over the same feature/label space.
    pub fn concat(a: &Self, b: &Self) -> Result<Self> {
        if a.d != b.d {
            return Err(EvError::DimensionMismatch {
                expected: a.d,
                got: b.d,
            });
        }
        if a.num_classes != b.num_classes {
            return Err(EvError::invalid("datasets disagree on num_classes"));
        }
        let mut features = a.features.clone();
        features.extend_from_slice(&b.features);
        let mut labels = a.labels.clone();
        labels.extend_from_slice(&b.labels);
        EmbeddingDataset::new(features, a.d, labels, a.num_classes, a.domain_tag.clone())
    }

    pub fn column_means(&self) -> Vec<T> {
        let inv_n = T::one() / real::<T>(self.n as f64);
        (0..self.d)
            .map(|c| (0..self.n).map(|r| self.features[r * self.d + c]).sum::<T>() * inv_n)
            .collect()
    }

    /// Features with column means subtracted.
    ///
    /// Subsets of a normalized dataset lose exact zero means, so valuation
    /// paths re-center with this before building a covariance.
    pub fn centered_features(&self) -> Vec<T> {
        let means = self.column_means();
        let mut out = self.features.clone();
        for r in 0..self.n {
            for c in 0..self.d {
                out[r * self.d + c] = out[r * self.d + c] - means[c];
            }
        }
        out
    }
}

/// Record of the transformations applied by [`normalize`].
#[derive(Debug, Clone)]
pub struct NormalizationRecord<T> {
    /// Column means subtracted in the centering step.
    pub column_means: Vec<T>,
    pub row_norm_applied: bool,
    /// Ridge added downstream, zero if none.
    pub ridge_applied: T,
}

/// Two-step normalization: scale each row to unit L2 norm, then subtract
/// column means.
///
/// Row normalization first aligns the covariance diagonals across domains;
/// centering last satisfies the zero-mean precondition of the covariance
/// builder.
pub fn normalize<T: Real>(
    raw: &EmbeddingDataset<T>,
) -> Result<(EmbeddingDataset<T>, NormalizationRecord<T>)> {
    if raw.n() < 2 {
        return Err(EvError::invalid("normalization needs at least 2 rows"));
    }
    let (n, d) = (raw.n(), raw.d());
    let mut features = raw.features().to_vec();
    let floor = spec_tol::<T>(1e-12);
    for r in 0..n {
        let row = &mut features[r * d..(r + 1) * d];
        let norm = row.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm < floor {
            return Err(EvError::ZeroRow { row: r });
        }
        for x in row.iter_mut() {
            *x = *x / norm;
        }
    }
    let inv_n = T::one() / real::<T>(n as f64);
    let mut column_means = vec![T::zero(); d];
    for (c, mean) in column_means.iter_mut().enumerate() {
        *mean = (0..n).map(|r| features[r * d + c]).sum::<T>() * inv_n;
    }
    for r in 0..n {
        for c in 0..d {
            features[r * d + c] = features[r * d + c] - column_means[c];
        }
    }
    let out = EmbeddingDataset::new(
        features,
        d,
        raw.labels().to_vec(),
        raw.num_classes(),
        raw.domain_tag(),
    )?;
    debug_assert!(out
        .column_means()
        .iter()
        .all(|m| m.abs() <= spec_tol(1e-10)));
    Ok((
        out,
        NormalizationRecord {
            column_means,
            row_norm_applied: true,
            ridge_applied: T::zero(),
        },
    ))
}

/// Deterministic shuffled index vector for seeded splits and subsamples.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    indices
}

/// Checks that column means are within the covariance centering tolerance.
pub fn is_centered<T: Real>(dataset: &EmbeddingDataset<T>) -> bool {
    let tol = spec_tol::<T>(1e-8);
    dataset.column_means().iter().all(|m| m.abs() <= tol)
}

/// Largest absolute column mean, for diagnostics.
pub fn max_column_mean<T: Real>(dataset: &EmbeddingDataset<T>) -> f64 {
    dataset
        .column_means()
        .iter()
        .map(|&m| to_f64(m.abs()))
        .fold(0.0, f64::max)
}
