//! Spectral valuation scores.
//!
//! The discrepancy bound of a covariance matrix is
//! `f(S) = (lambda_max * sqrt(d) + sqrt(d^2 - d)) / lambda_min`. Removing
//! point `x_k` perturbs the covariance by `-(1/n) x_k x_k^T`; a first-order
//! expansion turns that into per-point eigenvalue shifts and finally into a
//! marginal change of `f`, giving every training point a score without
//! re-decomposing the matrix n times.

use rayon::prelude::*;

use crate::error::{EvError, Result};
use crate::linalg::{covariance, dot, eig_full, eig_extreme, SpectralSummary, SymMatrix};
use crate::scalar::{real, spec_tol, to_f64, Real};

/// First-order eigenvalue shifts caused by removing one point.
///
/// Both deltas are non-positive: the removal perturbation is negative
/// semidefinite, so it can only lower an eigenvalue to first order.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationDelta<T> {
    pub index: usize,
    pub delta_max: T,
    pub delta_min: T,
}

/// Per-point scores from one valuation method.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector<T> {
    pub method: String,
    pub scores: Vec<T>,
    /// Combination weight; zero when no combination was applied.
    pub weight_w: T,
    pub seed: Option<u64>,
}

impl<T: Real> ValueVector<T> {
    /// Builds a vector, rejecting non-finite scores.
    pub fn new(method: impl Into<String>, scores: Vec<T>) -> Result<Self> {
        let method = method.into();
        if let Some(k) = scores.iter().position(|s| !s.is_finite()) {
            return Err(EvError::NonFinite {
                context: format!("score {k} of method {method}"),
            });
        }
        Ok(ValueVector {
            method,
            scores,
            weight_w: T::zero(),
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn check_invertible<T: Real>(s: &SpectralSummary<T>) -> Result<()> {
    let floor = spec_tol::<T>(1e-12) * T::one().max(s.lambda_max);
    if s.lambda_min > floor {
        Ok(())
    } else {
        Err(EvError::SingularCovariance {
            lambda_min: to_f64(s.lambda_min),
            // Order-of-magnitude suggestion; the scoring entry point computes
            // the exact trace-based ridge.
            suggested_ridge: 1e-8 * to_f64(T::one().max(s.lambda_max)),
            point: None,
        })
    }
}

/// The discrepancy bound `f(S)` evaluated from extreme eigenvalues.
///
/// Strictly increasing in `lambda_max` and strictly decreasing in
/// `lambda_min`; fails with `SingularCovariance` when `lambda_min` is
/// numerically zero.
pub fn discrepancy_bound<T: Real>(s: &SpectralSummary<T>) -> Result<T> {
    check_invertible(s)?;
    let d = real::<T>(s.dim as f64);
    Ok((s.lambda_max * d.sqrt() + (d * d - d).sqrt()) / s.lambda_min)
}

/// Per-point first-order eigenvalue shifts for every row.
///
/// `rows` must be the same centered `n x d` matrix the covariance behind `s`
/// was built from. Cost is `O(n * d)`.
pub fn perturbation_deltas<T: Real>(
    rows: &[T],
    s: &SpectralSummary<T>,
) -> Result<Vec<PerturbationDelta<T>>> {
    let d = s.dim;
    if d == 0 || rows.len() % d != 0 {
        return Err(EvError::DimensionMismatch {
            expected: d,
            got: rows.len(),
        });
    }
    let n = rows.len() / d;
    if n < 2 {
        return Err(EvError::invalid("perturbation deltas need at least 2 rows"));
    }
    let inv_n = T::one() / real::<T>(n as f64);
    Ok((0..n)
        .into_par_iter()
        .map(|k| {
            let x = &rows[k * d..(k + 1) * d];
            let pmax = dot(&s.u_max, x);
            let pmin = dot(&s.u_min, x);
            PerturbationDelta {
                index: k,
                delta_max: -(pmax * pmax) * inv_n,
                delta_min: -(pmin * pmin) * inv_n,
            }
        })
        .collect())
}

/// First-order estimate of `f(S_without_k) - f(S)`.
///
/// With `A = lambda_max * sqrt(d) + sqrt(d^2 - d)` and `B = lambda_min`,
/// the estimate is `sqrt(d) * delta_max / B - A * delta_min / B^2`.
pub fn ev_marginal<T: Real>(s: &SpectralSummary<T>, delta: &PerturbationDelta<T>) -> Result<T> {
    check_invertible(s)?;
    let d = real::<T>(s.dim as f64);
    let a = s.lambda_max * d.sqrt() + (d * d - d).sqrt();
    let b = s.lambda_min;
    Ok(d.sqrt() * delta.delta_max / b - a * delta.delta_min / (b * b))
}

/// Options for the approximate scoring path.
#[derive(Debug, Clone)]
pub struct EvOptions<T> {
    /// Regularize a singular covariance with `eps = 1e-8 * trace / d`
    /// instead of failing.
    pub ridge: bool,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for EvOptions<T> {
    fn default() -> Self {
        EvOptions {
            ridge: false,
            tol: real(1e-10),
            max_iter: 100_000,
        }
    }
}

/// Result of one approximate scoring run.
#[derive(Debug, Clone)]
pub struct EvOutcome<T> {
    pub values: ValueVector<T>,
    pub summary: SpectralSummary<T>,
    /// Ridge added to the spectrum, zero if none.
    pub ridge_applied: T,
}

/// Approximate per-point scores: one covariance, one extreme
/// eigendecomposition, then `n` first-order marginals.
///
/// Higher score means removing the point raises the discrepancy bound more,
/// i.e. the point is more valuable for shift robustness.
pub fn ev_scores<T: Real>(rows: &[T], d: usize) -> Result<ValueVector<T>> {
    Ok(ev_scores_with(rows, d, &EvOptions::default())?.values)
}

/// [`ev_scores`] with explicit options, also exposing the spectral summary.
pub fn ev_scores_with<T: Real>(rows: &[T], d: usize, opts: &EvOptions<T>) -> Result<EvOutcome<T>> {
    let cov = covariance(rows, d)?;
    let mut summary = eig_extreme(&cov, opts.tol, opts.max_iter)?;
    let mut ridge_applied = T::zero();
    if check_invertible(&summary).is_err() && opts.ridge {
        // Adding eps*I shifts every eigenvalue by eps and leaves the
        // eigenvectors untouched, so the summary can be adjusted directly.
        let eps = spec_tol::<T>(1e-8) * cov.trace() / real::<T>(d as f64);
        summary.lambda_max = summary.lambda_max + eps;
        summary.lambda_min = summary.lambda_min + eps;
        ridge_applied = eps;
    }
    summary.discrepancy = Some(discrepancy_bound(&summary)?);

    let deltas = perturbation_deltas(rows, &summary)?;
    let scores = deltas
        .par_iter()
        .map(|delta| ev_marginal(&summary, delta))
        .collect::<Result<Vec<T>>>()?;
    let values = ValueVector::new("ev-approx", scores)?;
    Ok(EvOutcome {
        values,
        summary,
        ridge_applied,
    })
}

/// Brute-force scores: rebuilds each leave-one-out covariance with its
/// `1/(n-1)` normalization and runs the full eigensolver on it.
///
/// Validation and timing use only; `O(n)` full eigendecompositions.
pub fn ev_scores_exact<T: Real>(rows: &[T], d: usize) -> Result<ValueVector<T>> {
    if d == 0 || rows.len() % d != 0 {
        return Err(EvError::DimensionMismatch {
            expected: d,
            got: rows.len(),
        });
    }
    let n = rows.len() / d;
    if n < 3 {
        return Err(EvError::invalid("exact scores need at least 3 rows"));
    }

    let full = covariance(rows, d)?;
    let f_full = bound_from_matrix(&full, None)?;

    // One shared Gram accumulator; each leave-one-out matrix is the
    // downdate (sum - x_k x_k^T) / (n - 1).
    let n_t = real::<T>(n as f64);
    let gram = SymMatrix::from_fn(d, |i, j| full.get(i, j) * n_t);
    let inv_nm1 = T::one() / real::<T>((n - 1) as f64);

    let scores = (0..n)
        .into_par_iter()
        .map(|k| {
            let x = &rows[k * d..(k + 1) * d];
            let loo = SymMatrix::from_fn(d, |i, j| (gram.get(i, j) - x[i] * x[j]) * inv_nm1);
            Ok(bound_from_matrix(&loo, Some(k))? - f_full)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(ValueVector::new("ev-exact", scores)?)
}

/// Evaluates the bound from a full decomposition of `m`.
fn bound_from_matrix<T: Real>(m: &SymMatrix<T>, point: Option<usize>) -> Result<T> {
    let pairs = eig_full(m)?;
    let summary = SpectralSummary {
        dim: m.dim(),
        lambda_max: pairs.first().expect("non-empty spectrum").value,
        lambda_min: pairs.last().expect("non-empty spectrum").value,
        u_max: pairs.first().expect("non-empty spectrum").vector.clone(),
        u_min: pairs.last().expect("non-empty spectrum").vector.clone(),
        discrepancy: None,
        degenerate: false,
    };
    discrepancy_bound(&summary).map_err(|e| match e {
        EvError::SingularCovariance {
            lambda_min,
            suggested_ridge,
            ..
        } => EvError::SingularCovariance {
            lambda_min,
            suggested_ridge,
            point,
        },
        other => other,
    })
}

/// Extreme eigenpairs via the full solver, as a `SpectralSummary`.
///
/// Oracle-side counterpart of [`eig_extreme`]: same output contract, exact
/// path underneath.
pub fn spectral_summary_exact<T: Real>(m: &SymMatrix<T>) -> Result<SpectralSummary<T>> {
    let pairs = eig_full(m)?;
    let first = pairs.first().ok_or_else(|| EvError::invalid("empty matrix"))?;
    let last = pairs.last().expect("non-empty spectrum");
    Ok(SpectralSummary {
        dim: m.dim(),
        lambda_max: first.value,
        lambda_min: last.value,
        u_max: first.vector.clone(),
        u_min: last.vector.clone(),
        discrepancy: None,
        degenerate: first.value - last.value <= spec_tol(1e-10),
    })
}

/// Standardized combination `base + w * (ev - mean(base)) / std(base)`.
///
/// The standard deviation uses the population convention (divisor `n`).
pub fn combine<T: Real>(base: &ValueVector<T>, ev: &ValueVector<T>, w: T) -> Result<ValueVector<T>> {
    if base.len() != ev.len() {
        return Err(EvError::DimensionMismatch {
            expected: base.len(),
            got: ev.len(),
        });
    }
    if base.is_empty() {
        return Err(EvError::invalid("cannot combine empty score vectors"));
    }
    if w < T::zero() || w > T::one() {
        return Err(EvError::invalid(format!(
            "combination weight must lie in [0, 1], got {w}"
        )));
    }
    let n = real::<T>(base.len() as f64);
    let mean = base.scores.iter().copied().sum::<T>() / n;
    let var = base
        .scores
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .sum::<T>()
        / n;
    let std = var.sqrt();
    if std <= spec_tol::<T>(1e-12) {
        return Err(EvError::DegenerateBase { std: to_f64(std) });
    }
    let scores = base
        .scores
        .iter()
        .zip(&ev.scores)
        .map(|(&b, &e)| b + w * (e - mean) / std)
        .collect();
    let mut out = ValueVector::new(format!("{}+ev", base.method), scores)?;
    out.weight_w = w;
    out.seed = base.seed;
    Ok(out)
}
