//! Extreme eigenpairs by power iteration with a spectral shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, normalize_in_place, record_eig_call, canonicalize_sign, SymMatrix};
use crate::error::{EvError, Result};
use crate::scalar::{real, Real};

/// Extreme spectral data of one covariance matrix.
///
/// `discrepancy` is left unset by the eigensolver and populated by the
/// scoring layer once the bound is evaluated.
#[derive(Debug, Clone)]
pub struct SpectralSummary<T> {
    pub dim: usize,
    pub lambda_max: T,
    pub lambda_min: T,
    pub u_max: Vec<T>,
    pub u_min: Vec<T>,
    pub discrepancy: Option<T>,
    /// Set when `lambda_max - lambda_min <= tol`: the spectrum is nearly
    /// spherical and the extreme eigenvectors are ill-determined. Values
    /// derived from the eigenvalues remain valid.
    pub degenerate: bool,
}

/// Extreme eigenpairs of a symmetric PSD matrix.
///
/// `lambda_max` comes from power iteration on `m`, run until successive
/// Rayleigh quotients differ by at most `tol`; `lambda_min` from power
/// iteration on the shifted operator `lambda_max * I - m`, recovering
/// `lambda_min = lambda_max - lambda_top(shifted)`. Agreement with
/// [`super::eig_full`] is within `10 * tol` for non-degenerate spectra.
pub fn eig_extreme<T: Real>(m: &SymMatrix<T>, tol: T, max_iter: usize) -> Result<SpectralSummary<T>> {
    if tol <= T::zero() {
        return Err(EvError::invalid("power iteration tolerance must be positive"));
    }
    record_eig_call();
    let d = m.dim();

    // Deterministic start vector; a fixed-seed Gaussian draw is effectively
    // never orthogonal to the dominant eigenvector.
    let mut rng = ChaCha8Rng::seed_from_u64(0x00C0_FFEE);
    let mut start = vec![T::zero(); d];
    for x in start.iter_mut() {
        *x = real::<T>(rng.random::<f64>() * 2.0 - 1.0);
    }
    if normalize_in_place(&mut start) == T::zero() {
        start[0] = T::one();
    }

    let (lambda_max, mut u_max) = power_iterate(|v| m.matvec(v), &start, tol, max_iter)?;
    // Shifted operator: eigenvalues become lambda_max - lambda_i >= 0, so its
    // dominant pair is the minimum pair of m.
    let shifted = |v: &[T]| {
        let mv = m.matvec(v);
        v.iter()
            .zip(&mv)
            .map(|(&vi, &mvi)| lambda_max * vi - mvi)
            .collect::<Vec<T>>()
    };
    let (top_shifted, mut u_min) = power_iterate(shifted, &start, tol, max_iter)?;
    let lambda_min = (lambda_max - top_shifted).min(lambda_max);

    canonicalize_sign(&mut u_max);
    canonicalize_sign(&mut u_min);
    let degenerate = lambda_max - lambda_min <= tol;

    Ok(SpectralSummary {
        dim: d,
        lambda_max,
        lambda_min,
        u_max,
        u_min,
        discrepancy: None,
        degenerate,
    })
}

/// Power iteration on an abstract symmetric operator.
///
/// Returns the dominant Rayleigh quotient and the final unit iterate. An
/// operator that annihilates the iterate reports eigenvalue zero.
fn power_iterate<T: Real>(
    apply: impl Fn(&[T]) -> Vec<T>,
    start: &[T],
    tol: T,
    max_iter: usize,
) -> Result<(T, Vec<T>)> {
    let mut v = start.to_vec();
    let mut mv = apply(&v);
    let mut rho = dot(&v, &mv);
    for _ in 0..max_iter {
        let mut w = mv;
        let norm = normalize_in_place(&mut w);
        if norm <= T::min_positive_value() {
            // v is (numerically) in the kernel of the operator.
            return Ok((T::zero(), v));
        }
        mv = apply(&w);
        let rho_next = dot(&w, &mv);
        v = w;
        let done = (rho_next - rho).abs() <= tol;
        rho = rho_next;
        if done {
            return Ok((rho, v));
        }
    }
    Err(EvError::NoConvergence { iters: max_iter })
}
