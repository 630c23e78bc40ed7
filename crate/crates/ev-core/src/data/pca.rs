//! Variance-gap report: how dispersed the top-valued and bottom-valued
//! groups are in the leading principal subspace.

use crate::error::{EvError, Result};
use crate::ev::ValueVector;
use crate::linalg::{covariance, eig_full, dot};
use crate::scalar::{real, spec_tol, to_f64, Real};

use super::EmbeddingDataset;

/// Number of principal components the projection uses (capped by `d`).
const COMPONENTS: usize = 3;

/// Total projected variance of the two value-ranked groups.
#[derive(Debug, Clone, Copy)]
pub struct VarianceGap {
    pub var_top: f64,
    pub var_bottom: f64,
    pub group_size: usize,
    pub components: usize,
}

/// Projects the dataset onto its top principal components and compares the
/// within-group variance of the highest- and lowest-valued fractions.
///
/// Groups are ranked by score, ties broken by ascending index; each group
/// variance is the per-coordinate population variance about the group mean,
/// summed over the projected coordinates.
pub fn pca_variance_gap<T: Real>(
    dataset: &EmbeddingDataset<T>,
    values: &ValueVector<T>,
    top_fraction: f64,
) -> Result<VarianceGap> {
    if !(top_fraction > 0.0 && top_fraction <= 0.5) {
        return Err(EvError::invalid(format!(
            "top_fraction must lie in (0, 0.5], got {top_fraction}"
        )));
    }
    if values.len() != dataset.n() {
        return Err(EvError::DimensionMismatch {
            expected: dataset.n(),
            got: values.len(),
        });
    }
    if dataset.n() < 2 {
        return Err(EvError::invalid("variance gap needs at least 2 points"));
    }

    let (n, d) = (dataset.n(), dataset.d());
    let centered = dataset.centered_features();
    let cov = covariance(&centered, d)?;
    let pairs = eig_full(&cov)?;
    if pairs[0].value <= spec_tol::<T>(1e-12) * T::one().max(cov.trace()) {
        return Err(EvError::SingularCovariance {
            lambda_min: to_f64(pairs[0].value),
            suggested_ridge: 1e-8 * to_f64(cov.trace()) / d as f64,
            point: None,
        });
    }
    let components = COMPONENTS.min(d);
    let basis: Vec<&[T]> = pairs[..components].iter().map(|p| p.vector.as_slice()).collect();

    // Rank descending by score, ties by ascending index.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values.scores[b]
            .partial_cmp(&values.scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    let group_size = ((n as f64 * top_fraction).floor() as usize).max(1);
    let top = &order[..group_size];
    let bottom = &order[n - group_size..];

    let group_variance = |members: &[usize]| -> f64 {
        let m = real::<T>(members.len() as f64);
        let mut total = T::zero();
        for axis in &basis {
            let coords: Vec<T> = members
                .iter()
                .map(|&i| dot(&centered[i * d..(i + 1) * d], axis))
                .collect();
            let mean = coords.iter().copied().sum::<T>() / m;
            total = total + coords.iter().map(|&c| (c - mean) * (c - mean)).sum::<T>() / m;
        }
        to_f64(total)
    };

    Ok(VarianceGap {
        var_top: group_variance(top),
        var_bottom: group_variance(bottom),
        group_size,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{normalize, synth_shift_pair, ShiftSpec};
    use crate::linalg::norm2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn isotropic(n: usize, d: usize, seed: u64) -> EmbeddingDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let ds = EmbeddingDataset::new(features, d, vec![0; n], 2, "iso").unwrap();
        normalize(&ds).unwrap().0
    }

    #[test]
    fn constant_values_split_into_similar_halves() {
        // With index tie-breaking, constant scores split the data into two
        // arbitrary halves of the same distribution.
        for seed in 0..5 {
            let ds = isotropic(400, 6, seed);
            let values = ValueVector::new("const", vec![1.0; 400]).unwrap();
            let gap = pca_variance_gap(&ds, &values, 0.5).unwrap();
            let rel = (gap.var_top - gap.var_bottom).abs() / gap.var_top.max(gap.var_bottom);
            assert!(rel < 0.2, "seed {seed}: relative gap {rel}");
        }
    }

    #[test]
    fn centroid_distance_values_rank_dispersed_points_on_top() {
        let ds = isotropic(300, 5, 9);
        let scores: Vec<f64> = (0..ds.n()).map(|i| norm2(ds.row(i))).collect();
        let values = ValueVector::new("dist", scores).unwrap();
        let gap = pca_variance_gap(&ds, &values, 0.25).unwrap();
        assert!(gap.var_top > gap.var_bottom);
    }

    #[test]
    fn report_shape_matches_reference_format() {
        // Reference magnitudes from the original analysis (1.09 / 0.67 and
        // 0.38 / 0.60) are not reproducible without those embeddings; this
        // pins the report fields instead.
        let pair = synth_shift_pair::<f64>(&ShiftSpec {
            n_id: 120,
            n_ood: 2,
            d: 8,
            num_classes: 2,
            shift_strength: 0.0,
            seed: 5,
        })
        .unwrap();
        let scores = crate::valuers::random_valuer(120, 0).unwrap();
        let gap = pca_variance_gap(&pair.id_set, &scores, 0.5).unwrap();
        assert_eq!(gap.components, 3);
        assert_eq!(gap.group_size, 60);
        assert!(gap.var_top.is_finite() && gap.var_bottom.is_finite());
        assert!(gap.var_top > 0.0 && gap.var_bottom > 0.0);
    }

    #[test]
    fn rejects_bad_fraction_and_singular_data() {
        let ds = isotropic(20, 4, 1);
        let values = ValueVector::new("const", vec![0.0; 20]).unwrap();
        assert!(pca_variance_gap(&ds, &values, 0.0).is_err());
        assert!(pca_variance_gap(&ds, &values, 0.6).is_err());

        let flat = EmbeddingDataset::new(vec![0.0; 40], 2, vec![0; 20], 2, "flat").unwrap();
        assert!(matches!(
            pca_variance_gap(&flat, &values, 0.5),
            Err(EvError::SingularCovariance { .. })
        ));
    }
}
