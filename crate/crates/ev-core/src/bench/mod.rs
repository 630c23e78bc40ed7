//! Experiment protocols over pluggable valuers, with persisted reports.

mod config;
mod protocols;
mod report;

pub use config::{ClassifierConfig, ProtocolConfig, StabilityConfig, ValuerKind, ValuerSpec};
pub use protocols::{run_addition, run_removal, run_stability, run_timing};
pub use report::{Aggregate, ExperimentReport, MetricPoint, SeedEntry};

use crate::data::EmbeddingDataset;
use crate::error::Result;
use crate::ev::{combine, ev_scores_with, EvOptions, ValueVector};
use crate::scalar::{real, to_f64, Real};
use crate::valuers::{
    data_oob_with, index_valuer, knn_shapley, random_valuer, OobConfig, ShapleyConfig,
};

/// Scores plus any advisory notes produced along the way (ridge applied,
/// never-out-of-bag points, clamped parameters).
#[derive(Debug, Clone)]
pub struct ScoredValues<T> {
    pub values: ValueVector<T>,
    pub notes: Vec<String>,
}

impl ValuerSpec {
    /// Scores `train` with the configured method, combining with the
    /// spectral term when `weight_w > 0`.
    ///
    /// Subsets of normalized data lose exact zero column means, so the
    /// spectral paths re-center before building the covariance.
    pub fn score<T: Real>(
        &self,
        train: &EmbeddingDataset<T>,
        val: Option<&EmbeddingDataset<T>>,
        seed: u64,
    ) -> Result<ScoredValues<T>> {
        let mut notes = Vec::new();
        let n = train.n();
        let ev_opts = EvOptions {
            ridge: self.ridge,
            ..EvOptions::default()
        };

        let base = match self.kind {
            ValuerKind::Random => random_valuer(n, seed)?,
            ValuerKind::Index => index_valuer(n)?,
            ValuerKind::KnnShapley => {
                let val = val.ok_or(crate::error::EvError::EmptyValidation)?;
                let k = self.k_neighbors.min(n).max(1);
                if k != self.k_neighbors {
                    notes.push(format!("k clamped from {} to {k}", self.k_neighbors));
                }
                knn_shapley(
                    train,
                    val,
                    &ShapleyConfig {
                        k_neighbors: k,
                        empty_set_utility: 0.0,
                    },
                )?
            }
            ValuerKind::DataOob => {
                let cfg = OobConfig {
                    num_models: self.num_models,
                    epochs: self.oob_epochs,
                    lr: self.oob_lr,
                };
                let (values, never_oob) = data_oob_with(train, &cfg, seed)?;
                if !never_oob.is_empty() {
                    notes.push(format!("never out-of-bag: {never_oob:?}"));
                }
                values
            }
            ValuerKind::EvApprox | ValuerKind::EvExact => {
                let mut values = self.spectral_scores(train, &ev_opts, &mut notes)?;
                values.seed = Some(seed);
                return Ok(ScoredValues { values, notes });
            }
        };

        if self.weight_w > 0.0 {
            let ev = self.spectral_scores_approx(train, &ev_opts, &mut notes)?;
            let combined = combine(&base, &ev, real::<T>(self.weight_w))?;
            return Ok(ScoredValues {
                values: combined,
                notes,
            });
        }
        Ok(ScoredValues {
            values: base,
            notes,
        })
    }

    fn spectral_scores<T: Real>(
        &self,
        train: &EmbeddingDataset<T>,
        opts: &EvOptions<T>,
        notes: &mut Vec<String>,
    ) -> Result<ValueVector<T>> {
        match self.kind {
            ValuerKind::EvExact => {
                crate::ev::ev_scores_exact(&train.centered_features(), train.d())
            }
            _ => self.spectral_scores_approx(train, opts, notes),
        }
    }

    fn spectral_scores_approx<T: Real>(
        &self,
        train: &EmbeddingDataset<T>,
        opts: &EvOptions<T>,
        notes: &mut Vec<String>,
    ) -> Result<ValueVector<T>> {
        let outcome = ev_scores_with(&train.centered_features(), train.d(), opts)?;
        if outcome.ridge_applied > T::zero() {
            notes.push(format!(
                "ridge applied: {:e}",
                to_f64(outcome.ridge_applied)
            ));
        }
        Ok(outcome.values)
    }
}
