//! Synthetic covariate-shift generator.
//!
//! Produces an in-distribution / shifted pair whose population covariances
//! share identical diagonals (the matching-marginal condition) while the
//! off-diagonal correlations differ, plus one fixed labeling teacher shared
//! by both domains so the conditional P(y|x) is literally the same function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{EvError, Result};
use crate::linalg::{eig_full, SymMatrix};
use crate::scalar::{real, to_f64, Real};
use crate::valuers::SoftmaxModel;

use super::{normalize, EmbeddingDataset, NormalizationRecord};

/// Eigenvalue floor enforced on the shifted covariance.
const LAMBDA_FLOOR: f64 = 1e-3;

/// Parameters of one generated pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub n_id: usize,
    pub n_ood: usize,
    pub d: usize,
    pub num_classes: usize,
    /// Half-width of the uniform off-diagonal perturbation; zero means no
    /// shift.
    pub shift_strength: f64,
    pub seed: u64,
}

impl ShiftSpec {
    fn validate(&self) -> Result<()> {
        if self.n_id < 2 || self.n_ood < 2 {
            return Err(EvError::invalid("need at least 2 points per domain"));
        }
        if self.d < 2 {
            return Err(EvError::invalid("shift generator needs dimension >= 2"));
        }
        if self.num_classes < 2 {
            return Err(EvError::invalid("need at least 2 classes"));
        }
        if !(self.shift_strength >= 0.0 && self.shift_strength.is_finite()) {
            return Err(EvError::invalid("shift strength must be finite and >= 0"));
        }
        Ok(())
    }
}

/// A generated domain pair with its population covariances and the shared
/// teacher.
#[derive(Debug, Clone)]
pub struct SynthPair<T> {
    pub id_set: EmbeddingDataset<T>,
    pub ood_set: EmbeddingDataset<T>,
    /// The one labeling model applied to both domains.
    pub teacher: SoftmaxModel<T>,
    pub sigma_id: SymMatrix<T>,
    pub sigma_ood: SymMatrix<T>,
    pub id_record: NormalizationRecord<T>,
    pub ood_record: NormalizationRecord<T>,
    /// Frobenius norm of the drawn perturbation, before PSD repair.
    pub shift_norm_requested: f64,
    /// Frobenius norm of `sigma_ood - sigma_id` actually realized.
    pub shift_norm_applied: f64,
}

/// Rescales to unit diagonal: `D^{-1/2} M D^{-1/2}`, diagonal set to exactly
/// one.
fn correlation_normalize<T: Real>(m: &SymMatrix<T>) -> SymMatrix<T> {
    let d = m.dim();
    let scale: Vec<T> = (0..d).map(|i| m.get(i, i).sqrt()).collect();
    SymMatrix::from_fn(d, |i, j| {
        if i == j {
            T::one()
        } else {
            m.get(i, j) / (scale[i] * scale[j])
        }
    })
}

/// Reconstructs `Q diag(clipped) Q^T` with eigenvalues floored at `floor`.
fn clip_eigenvalues<T: Real>(m: &SymMatrix<T>, floor: T) -> Result<(SymMatrix<T>, bool)> {
    let pairs = eig_full(m)?;
    if pairs.last().expect("non-empty spectrum").value >= floor {
        return Ok((m.clone(), false));
    }
    let d = m.dim();
    let clipped = SymMatrix::from_fn(d, |i, j| {
        let mut acc = T::zero();
        for pair in &pairs {
            acc = acc + pair.value.max(floor) * pair.vector[i] * pair.vector[j];
        }
        acc
    });
    Ok((clipped, true))
}

fn min_eigenvalue<T: Real>(m: &SymMatrix<T>) -> Result<T> {
    Ok(eig_full(m)?.last().expect("non-empty spectrum").value)
}

/// Draws `n` rows from a zero-mean Gaussian with covariance `sigma`.
///
/// The factor is `Q diag(sqrt(lambda))` from the full eigendecomposition;
/// tiny negative eigenvalues are treated as zero.
pub fn sample_gaussian<T: Real>(
    sigma: &SymMatrix<T>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<T>> {
    let d = sigma.dim();
    let pairs = eig_full(sigma)?;
    let factor: Vec<Vec<T>> = pairs
        .iter()
        .map(|p| {
            let s = p.value.max(T::zero()).sqrt();
            p.vector.iter().map(|&q| q * s).collect()
        })
        .collect();
    let mut rows = vec![T::zero(); n * d];
    for r in 0..n {
        for col in &factor {
            let z: f64 = StandardNormal.sample(rng);
            let z = real::<T>(z);
            for (i, &f) in col.iter().enumerate() {
                rows[r * d + i] = rows[r * d + i] + f * z;
            }
        }
    }
    Ok(rows)
}

/// Generates the ID/OOD pair described by `spec`.
///
/// Construction: the ID covariance is the correlation normalization of
/// `A A^T / d + 0.1 I`; the shifted covariance adds a zero-diagonal
/// symmetric perturbation with entries uniform in `[-s, s]`, floors its
/// eigenvalues at `1e-3`, and rescales back to unit diagonal so the
/// matching-marginal condition holds exactly. Labels for both domains come
/// from one seeded argmax teacher, and both sets pass through
/// [`normalize`].
pub fn synth_shift_pair<T: Real>(spec: &ShiftSpec) -> Result<SynthPair<T>> {
    spec.validate()?;
    let d = spec.d;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // (a) ID covariance with unit diagonal.
    let a: Vec<T> = (0..d * d)
        .map(|_| real::<T>(StandardNormal.sample(&mut rng)))
        .collect();
    let gram = SymMatrix::from_fn(d, |i, j| {
        let mut acc = T::zero();
        for k in 0..d {
            acc = acc + a[i * d + k] * a[j * d + k];
        }
        acc / real::<T>(d as f64) + if i == j { real::<T>(0.1) } else { T::zero() }
    });
    let sigma_id = correlation_normalize(&gram);

    // (b) Zero-diagonal symmetric perturbation.
    let s = spec.shift_strength;
    let mut perturbation = SymMatrix::zeros(d);
    for i in 0..d {
        for j in (i + 1)..d {
            let e = rng.random::<f64>() * 2.0 * s - s;
            perturbation.set_sym(i, j, real::<T>(e));
        }
    }
    let requested_norm = to_f64(perturbation.frobenius_norm());

    // (c) Shifted covariance: floor the spectrum, restore the unit diagonal,
    // and iterate since the rescale can nudge the minimum eigenvalue back
    // under the floor.
    let floor = real::<T>(LAMBDA_FLOOR);
    let mut sigma_ood = SymMatrix::from_fn(d, |i, j| sigma_id.get(i, j) + perturbation.get(i, j));
    let mut clipped_any = false;
    for _ in 0..50 {
        let (clipped, changed) = clip_eigenvalues(&sigma_ood, floor)?;
        clipped_any |= changed;
        sigma_ood = correlation_normalize(&clipped);
        if min_eigenvalue(&sigma_ood)? >= floor * real(1.0 - 1e-9) {
            break;
        }
    }
    if min_eigenvalue(&sigma_ood)? < floor * real(0.5) {
        return Err(EvError::InfeasibleShift {
            requested: requested_norm,
            applied: to_f64(min_eigenvalue(&sigma_ood)?),
        });
    }
    let applied_norm = to_f64(sigma_ood.sub(&sigma_id).frobenius_norm());
    if clipped_any && requested_norm > 0.0 {
        let drift = (applied_norm - requested_norm).abs();
        if drift > 0.5 * requested_norm {
            return Err(EvError::InfeasibleShift {
                requested: requested_norm,
                applied: applied_norm,
            });
        }
    }

    // (e) One teacher for both domains; drawn before the samples so its
    // weights depend only on (seed, d, C).
    let teacher = SoftmaxModel::from_weights(
        (0..spec.num_classes * d)
            .map(|_| real::<T>(StandardNormal.sample(&mut rng)))
            .collect(),
        vec![T::zero(); spec.num_classes],
        spec.num_classes,
        d,
    )?;

    // (d) Raw features per domain.
    let id_raw = sample_gaussian(&sigma_id, spec.n_id, &mut rng)?;
    let ood_raw = sample_gaussian(&sigma_ood, spec.n_ood, &mut rng)?;
    let id_labels = teacher_labels(&teacher, &id_raw, d);
    let ood_labels = teacher_labels(&teacher, &ood_raw, d);

    // (f) Normalize both domains.
    let id_set = EmbeddingDataset::new(id_raw, d, id_labels, spec.num_classes, "synthetic-id")?;
    let ood_set = EmbeddingDataset::new(ood_raw, d, ood_labels, spec.num_classes, "synthetic-ood")?;
    let (id_set, id_record) = normalize(&id_set)?;
    let (ood_set, ood_record) = normalize(&ood_set)?;

    Ok(SynthPair {
        id_set,
        ood_set,
        teacher,
        sigma_id,
        sigma_ood,
        id_record,
        ood_record,
        shift_norm_requested: requested_norm,
        shift_norm_applied: applied_norm,
    })
}

/// Labels rows by the teacher's argmax decision.
pub fn teacher_labels<T: Real>(teacher: &SoftmaxModel<T>, rows: &[T], d: usize) -> Vec<u32> {
    rows.chunks(d)
        .map(|x| teacher.predict(x) as u32)
        .collect()
}
