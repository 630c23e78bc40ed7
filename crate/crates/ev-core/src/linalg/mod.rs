//! Dense symmetric linear algebra: covariance construction, eigensolvers,
//! and the spectral quantities the valuation formulas consume.
//!
//! Two eigensolvers are provided. [`eig_full`] is a cyclic Jacobi rotation
//! method, slow but provably convergent for symmetric matrices; it is the
//! in-repo oracle. [`eig_extreme`] computes only the extreme eigenpairs via
//! power iteration with a spectral shift and is the fast path used for
//! scoring.

mod jacobi;
mod power;

use std::sync::atomic::{AtomicU64, Ordering};

pub use jacobi::{eig_full, EigenPair};
pub use power::{eig_extreme, SpectralSummary};

use crate::error::{EvError, Result};
use crate::scalar::{real, spec_tol, to_f64, Real};

/// Counts eigen-decompositions (both solvers) for complexity assertions.
static EIG_CALLS: AtomicU64 = AtomicU64::new(0);

pub(crate) fn record_eig_call() {
    EIG_CALLS.fetch_add(1, Ordering::Relaxed);
}

/// Total number of eigen-extractions performed by this process so far.
pub fn eig_call_count() -> u64 {
    EIG_CALLS.load(Ordering::Relaxed)
}

/// Dense symmetric matrix, row-major.
///
/// Symmetry is an invariant: checked constructors reject asymmetric or
/// non-finite input, and the mutating helpers preserve it.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    /// Builds from row-major entries, validating symmetry and finiteness.
    ///
    /// Entries (i, j) and (j, i) may differ by at most
    /// `1e-12 * max(1, |entry|)`; they are averaged so the stored matrix is
    /// exactly symmetric.
    pub fn from_entries(dim: usize, entries: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(EvError::invalid("matrix dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(EvError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        for (idx, &e) in entries.iter().enumerate() {
            if !e.is_finite() {
                return Err(EvError::NonFinite {
                    context: format!("matrix entry ({},{})", idx / dim, idx % dim),
                });
            }
        }
        let tol = spec_tol::<T>(1e-12);
        let mut m = SymMatrix { dim, entries };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = m.entries[i * dim + j];
                let b = m.entries[j * dim + i];
                let scale = T::one().max(a.abs());
                if (a - b).abs() > tol * scale {
                    return Err(EvError::NotSymmetric {
                        row: i,
                        col: j,
                        left: to_f64(a),
                        right: to_f64(b),
                    });
                }
                let avg = (a + b) * real(0.5);
                m.entries[i * dim + j] = avg;
                m.entries[j * dim + i] = avg;
            }
        }
        Ok(m)
    }

    /// Builds a symmetric matrix by evaluating `f` on the upper triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
        SymMatrix { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            entries: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { T::zero() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    /// Sets entries (i, j) and (j, i) together.
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.dim + j] = v;
        self.entries[j * self.dim + i] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries
            .iter()
            .map(|&e| e * e)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_offdiag(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Adds `eps` to the diagonal in place.
    pub fn add_ridge(&mut self, eps: T) {
        for i in 0..self.dim {
            self.entries[i * self.dim + i] = self.entries[i * self.dim + i] + eps;
        }
    }

    /// Entrywise difference, `self - other`.
    pub fn sub(&self, other: &SymMatrix<T>) -> SymMatrix<T> {
        debug_assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm2<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

pub(crate) fn normalize_in_place<T: Real>(v: &mut [T]) -> T {
    let n = norm2(v);
    if n > T::zero() {
        for x in v.iter_mut() {
            *x = *x / n;
        }
    }
    n
}

/// Flips eigenvector sign so its largest-magnitude entry is non-negative.
///
/// The quadratic forms downstream are sign-insensitive; canonicalizing makes
/// output deterministic.
pub(crate) fn canonicalize_sign<T: Real>(v: &mut [T]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Covariance of pre-centered rows: `(1/n) * rows^T * rows`.
///
/// `rows` is an `n x d` row-major matrix whose columns must already have
/// (near-)zero means; the column-mean tolerance is `1e-8`.
pub fn covariance<T: Real>(rows: &[T], d: usize) -> Result<SymMatrix<T>> {
    if d == 0 || rows.len() % d != 0 {
        return Err(EvError::invalid(format!(
            "row buffer of length {} is not a multiple of dimension {d}",
            rows.len()
        )));
    }
    let n = rows.len() / d;
    if n < 2 {
        return Err(EvError::invalid("covariance needs at least 2 rows"));
    }
    for (idx, &x) in rows.iter().enumerate() {
        if !x.is_finite() {
            return Err(EvError::NonFinite {
                context: format!("row {} column {}", idx / d, idx % d),
            });
        }
    }
    let tol = spec_tol::<T>(1e-8);
    let inv_n = T::one() / real::<T>(n as f64);
    for c in 0..d {
        let mean = (0..n).map(|r| rows[r * d + c]).sum::<T>() * inv_n;
        if mean.abs() > tol {
            return Err(EvError::NotCentered {
                col: c,
                mean: to_f64(mean),
                tol: to_f64(tol),
            });
        }
    }
    // Upper triangle once, mirrored, so the result is symmetric by
    // construction.
    Ok(SymMatrix::from_fn(d, |i, j| {
        let mut acc = T::zero();
        for r in 0..n {
            acc = acc + rows[r * d + i] * rows[r * d + j];
        }
        acc * inv_n
    }))
}

/// Rayleigh quotient `v^T M v / v^T v`.
///
/// For PSD `m` the value lies in `[lambda_min, lambda_max]`.
pub fn rayleigh<T: Real>(m: &SymMatrix<T>, v: &[T]) -> Result<T> {
    if v.len() != m.dim() {
        return Err(EvError::DimensionMismatch {
            expected: m.dim(),
            got: v.len(),
        });
    }
    let denom = dot(v, v);
    if denom <= T::zero() {
        return Err(EvError::ZeroVector);
    }
    Ok(dot(v, &m.matvec(v)) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_centered_rows(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() - 0.5).collect();
        for c in 0..d {
            let mean = (0..n).map(|r| rows[r * d + c]).sum::<f64>() / n as f64;
            for r in 0..n {
                rows[r * d + c] -= mean;
            }
        }
        rows
    }

    #[test]
    fn covariance_of_antipodal_unit_vectors() {
        let rows = vec![1.0, 0.0, -1.0, 0.0];
        let cov = covariance(&rows, 2).unwrap();
        assert_eq!(cov.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn covariance_rank_one_case() {
        let s = 1.0 / 2f64.sqrt();
        let rows = vec![s, s, -s, -s];
        let cov = covariance(&rows, 2).unwrap();
        for (got, want) in cov.as_slice().iter().zip([0.5, 0.5, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn covariance_matches_naive_summation_oracle() {
        let (n, d) = (50, 4);
        let rows = random_centered_rows(n, d, 7);
        let cov = covariance(&rows, d).unwrap();
        // Independent oracle: re-sum (1/n) sum_i x_i x_i^T with naive loops.
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += rows[r * d + i] * rows[r * d + j];
                }
                acc /= n as f64;
                assert!((cov.get(i, j) - acc).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn covariance_rejects_uncentered_rows() {
        let rows = vec![1.0, 0.0, 1.0, 0.0];
        match covariance(&rows, 2) {
            Err(EvError::NotCentered { col: 0, .. }) => {}
            other => panic!("expected NotCentered, got {other:?}"),
        }
    }

    #[test]
    fn covariance_rejects_non_finite() {
        let rows = vec![f64::NAN, 0.0, 1.0, 0.0];
        assert!(matches!(
            covariance(&rows, 2),
            Err(EvError::NonFinite { .. })
        ));
    }

    #[test]
    fn symmetry_validation() {
        let err = SymMatrix::from_entries(2, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(err, Err(EvError::NotSymmetric { .. })));
        let ok = SymMatrix::from_entries(2, vec![1.0, 2.0, 2.0 + 1e-14, 4.0]).unwrap();
        assert_eq!(ok.get(0, 1), ok.get(1, 0));
    }

    #[test]
    fn rayleigh_identity_is_one() {
        let m = SymMatrix::<f64>::identity(3);
        let v = vec![0.3, -2.0, 0.7];
        assert!((rayleigh(&m, &v).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rayleigh_picks_out_diagonal_entry() {
        let m = SymMatrix::from_diagonal(&[4.0f64, 1.0]);
        assert!((rayleigh(&m, &[1.0, 0.0]).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn rayleigh_zero_vector_errors() {
        let m = SymMatrix::<f64>::identity(2);
        assert!(matches!(
            rayleigh(&m, &[0.0, 0.0]),
            Err(EvError::ZeroVector)
        ));
    }
}
