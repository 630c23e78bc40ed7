//! Full eigendecomposition by cyclic Jacobi rotations.

use super::{canonicalize_sign, record_eig_call, SymMatrix};
use crate::error::{EvError, Result};
use crate::scalar::{real, spec_tol, Real};

/// One eigenvalue with its unit eigenvector.
#[derive(Debug, Clone)]
pub struct EigenPair<T> {
    pub value: T,
    pub vector: Vec<T>,
}

/// Full eigendecomposition of a symmetric matrix, descending by eigenvalue.
///
/// Cyclic Jacobi sweeps run until the largest off-diagonal magnitude drops
/// below `1e-12 * ||m||_F`. Eigenvectors are pairwise orthogonal and have
/// their sign canonicalized (largest-magnitude entry non-negative).
pub fn eig_full<T: Real>(m: &SymMatrix<T>) -> Result<Vec<EigenPair<T>>> {
    record_eig_call();
    let d = m.dim();
    let mut a = m.as_slice().to_vec();
    // Eigenvector accumulator, starts as identity; column k ends up as the
    // eigenvector of a[k][k].
    let mut q = vec![T::zero(); d * d];
    for i in 0..d {
        q[i * d + i] = T::one();
    }

    let threshold = spec_tol::<T>(1e-12) * m.frobenius_norm();
    let max_sweeps = 100 * d * d;

    let mut converged = d < 2;
    for _ in 0..max_sweeps {
        if converged {
            break;
        }
        let mut max_off = T::zero();
        for p in 0..d {
            for r in (p + 1)..d {
                let apq = a[p * d + r];
                max_off = max_off.max(apq.abs());
                if apq.abs() <= threshold {
                    continue;
                }
                rotate(&mut a, &mut q, d, p, r);
            }
        }
        converged = max_off <= threshold;
    }
    if !converged {
        return Err(EvError::NoConvergence { iters: max_sweeps });
    }

    let mut pairs: Vec<EigenPair<T>> = (0..d)
        .map(|k| {
            let mut vector: Vec<T> = (0..d).map(|i| q[i * d + k]).collect();
            canonicalize_sign(&mut vector);
            EigenPair {
                value: a[k * d + k],
                vector,
            }
        })
        .collect();
    pairs.sort_by(|x, y| y.value.partial_cmp(&x.value).expect("finite eigenvalues"));
    Ok(pairs)
}

/// Single Jacobi rotation annihilating a[p][r], updating a and q.
fn rotate<T: Real>(a: &mut [T], q: &mut [T], d: usize, p: usize, r: usize) {
    let apq = a[p * d + r];
    let app = a[p * d + p];
    let aqq = a[r * d + r];

    let theta = (aqq - app) / (real::<T>(2.0) * apq);
    // tan of the rotation angle, the root of t^2 + 2*theta*t - 1 = 0 with
    // smaller magnitude; keeps rotations well-conditioned.
    let t = if theta.abs() > T::max_value().sqrt() / real(4.0) {
        // theta^2 would overflow; the small root degenerates to 1/(2 theta).
        (real::<T>(2.0) * theta).recip()
    } else {
        let abs_t = T::one() / (theta.abs() + (T::one() + theta * theta).sqrt());
        if theta < T::zero() {
            -abs_t
        } else {
            abs_t
        }
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    let tau = s / (T::one() + c);

    a[p * d + p] = app - t * apq;
    a[r * d + r] = aqq + t * apq;
    a[p * d + r] = T::zero();
    a[r * d + p] = T::zero();

    for j in 0..d {
        if j == p || j == r {
            continue;
        }
        let ajp = a[j * d + p];
        let ajq = a[j * d + r];
        let new_jp = ajp - s * (ajq + tau * ajp);
        let new_jq = ajq + s * (ajp - tau * ajq);
        a[j * d + p] = new_jp;
        a[p * d + j] = new_jp;
        a[j * d + r] = new_jq;
        a[r * d + j] = new_jq;
    }
    for j in 0..d {
        let qjp = q[j * d + p];
        let qjq = q[j * d + r];
        q[j * d + p] = qjp - s * (qjq + tau * qjp);
        q[j * d + r] = qjq + s * (qjp - tau * qjq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(d: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>() - 0.5).collect();
        // A A^T / d + 0.1 I is symmetric positive definite.
        SymMatrix::from_fn(d, |i, j| {
            let mut acc = 0.0;
            for k in 0..d {
                acc += a[i * d + k] * a[j * d + k];
            }
            acc / d as f64 + if i == j { 0.1 } else { 0.0 }
        })
    }

    #[test]
    fn diagonal_matrix_spectrum() {
        let m = SymMatrix::from_diagonal(&[3.0f64, 1.0, 0.5]);
        let pairs = eig_full(&m).unwrap();
        let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        assert_eq!(values, vec![3.0, 1.0, 0.5]);
        // Eigenvectors of a diagonal matrix are the standard basis, sign
        // canonicalized to +e_k.
        for (k, pair) in pairs.iter().enumerate() {
            for (i, &x) in pair.vector.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((x - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_two_by_two() {
        let m = SymMatrix::from_entries(2, vec![2.0f64, 1.0, 1.0, 2.0]).unwrap();
        let pairs = eig_full(&m).unwrap();
        assert!((pairs[0].value - 3.0).abs() < 1e-12);
        assert!((pairs[1].value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_and_frobenius_identities() {
        // trace(m) = sum of eigenvalues and ||m||_F^2 = sum of squared
        // eigenvalues.
        for seed in 0..10 {
            let m = random_spd(8, seed);
            let pairs = eig_full(&m).unwrap();
            let sum: f64 = pairs.iter().map(|p| p.value).sum();
            let sum_sq: f64 = pairs.iter().map(|p| p.value * p.value).sum();
            assert!((sum - m.trace()).abs() <= 1e-10 * m.trace().abs().max(1.0));
            let fro_sq = m.frobenius_norm().powi(2);
            assert!((sum_sq - fro_sq).abs() <= 1e-9 * fro_sq.max(1.0));
        }
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let m = random_spd(8, 42);
        let pairs = eig_full(&m).unwrap();
        let d = m.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                assert!(dot(&pairs[i].vector, &pairs[j].vector).abs() < 1e-9);
            }
        }
        // ||Q L Q^T - m||_F <= 1e-9 ||m||_F
        let mut err_sq = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for pair in &pairs {
                    acc += pair.value * pair.vector[i] * pair.vector[j];
                }
                err_sq += (acc - m.get(i, j)).powi(2);
            }
        }
        assert!(err_sq.sqrt() <= 1e-9 * m.frobenius_norm());
    }

    #[test]
    fn residuals_are_small() {
        let m = random_spd(12, 3);
        for pair in eig_full(&m).unwrap() {
            let mv = m.matvec(&pair.vector);
            let res: f64 = mv
                .iter()
                .zip(&pair.vector)
                .map(|(&a, &b)| (a - pair.value * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-8 * pair.value.abs().max(1.0));
        }
    }

    #[test]
    fn one_by_one_matrix() {
        let m = SymMatrix::from_diagonal(&[2.5f64]);
        let pairs = eig_full(&m).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].value, 2.5);
        assert_eq!(pairs[0].vector, vec![1.0]);
    }
}
