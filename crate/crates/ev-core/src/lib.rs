//! Data valuation with a spectral out-of-distribution term.
//!
//! The toolkit scores each training point by its first-order effect on a
//! covariance-spectrum bound of the loss under covariate shift, combines
//! that score with in-distribution baseline valuers (KNN-Shapley,
//! out-of-bag, random), and ships the evaluation protocols (removal,
//! addition, ranking stability, timing) plus a matching-marginal synthetic
//! shift generator and dataset file formats.
//!
//! All numeric code is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix the common `f64` instantiation.

pub mod bench;
pub mod data;
pub mod error;
pub mod ev;
pub mod linalg;
pub mod scalar;
pub mod valuers;

pub use error::{EvError, Result};
pub use scalar::{real, Real};

/// `f64` symmetric matrix.
pub type SymMatrix64 = linalg::SymMatrix<f64>;
/// `f32` symmetric matrix.
pub type SymMatrix32 = linalg::SymMatrix<f32>;
/// `f64` extreme-spectrum summary.
pub type SpectralSummary64 = linalg::SpectralSummary<f64>;
/// `f64` score vector.
pub type ValueVector64 = ev::ValueVector<f64>;
/// `f64` per-point eigenvalue shifts.
pub type PerturbationDelta64 = ev::PerturbationDelta<f64>;
/// `f64` dataset.
pub type Dataset64 = data::EmbeddingDataset<f64>;
/// `f32` dataset.
pub type Dataset32 = data::EmbeddingDataset<f32>;
/// `f64` softmax classifier.
pub type SoftmaxModel64 = valuers::SoftmaxModel<f64>;
/// `f64` synthetic domain pair.
pub type SynthPair64 = data::SynthPair<f64>;
