//! Protocol and valuer configuration.

use serde::{Deserialize, Serialize};

use crate::error::{EvError, Result};

/// Classifier settings used by every protocol that trains a model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epochs: 30,
            lr: 0.01,
        }
    }
}

/// Ranking-stability protocol sizes: value `pool` points per repeat, keeping
/// `fixed` of them pinned while the remainder is freshly drawn.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub pool: usize,
    pub fixed: usize,
    pub repeats: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            pool: 300,
            fixed: 290,
            repeats: 5,
        }
    }
}

/// Which valuation method scores the training points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValuerKind {
    Random,
    Index,
    KnnShapley,
    DataOob,
    EvApprox,
    EvExact,
}

impl ValuerKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "random" => Ok(ValuerKind::Random),
            "index" => Ok(ValuerKind::Index),
            "knn-shapley" => Ok(ValuerKind::KnnShapley),
            "data-oob" => Ok(ValuerKind::DataOob),
            "ev-approx" => Ok(ValuerKind::EvApprox),
            "ev-exact" => Ok(ValuerKind::EvExact),
            other => Err(EvError::invalid(format!(
                "unknown valuer {other:?}; expected one of random, index, knn-shapley, data-oob, ev-approx, ev-exact"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ValuerKind::Random => "random",
            ValuerKind::Index => "index",
            ValuerKind::KnnShapley => "knn-shapley",
            ValuerKind::DataOob => "data-oob",
            ValuerKind::EvApprox => "ev-approx",
            ValuerKind::EvExact => "ev-exact",
        }
    }
}

/// Full description of one valuer instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuerSpec {
    pub kind: ValuerKind,
    /// Combination weight for the spectral term; 0 disables combination.
    pub weight_w: f64,
    pub k_neighbors: usize,
    pub num_models: usize,
    pub oob_epochs: usize,
    pub oob_lr: f64,
    /// Regularize singular covariances instead of failing.
    pub ridge: bool,
}

impl Default for ValuerSpec {
    fn default() -> Self {
        ValuerSpec {
            kind: ValuerKind::Random,
            weight_w: 0.0,
            k_neighbors: 1000,
            num_models: 100,
            oob_epochs: 10,
            oob_lr: 0.01,
            ridge: false,
        }
    }
}

impl ValuerSpec {
    pub fn of_kind(kind: ValuerKind) -> Self {
        ValuerSpec {
            kind,
            ..ValuerSpec::default()
        }
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.weight_w = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.weight_w) {
            return Err(EvError::invalid(format!(
                "weight_w must lie in [0, 1], got {}",
                self.weight_w
            )));
        }
        if self.k_neighbors == 0 {
            return Err(EvError::invalid("k_neighbors must be positive"));
        }
        if self.num_models == 0 {
            return Err(EvError::invalid("num_models must be positive"));
        }
        Ok(())
    }

    /// Method label including the combination suffix.
    pub fn label(&self) -> String {
        if self.weight_w > 0.0 && !matches!(self.kind, ValuerKind::EvApprox | ValuerKind::EvExact)
        {
            format!("{}+ev", self.kind.name())
        } else {
            self.kind.name().to_string()
        }
    }
}

/// Configuration shared by the experiment protocols.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub valuer: ValuerSpec,
    /// Fraction of highest-valued points dropped by the removal protocol.
    pub removal_fraction: f64,
    /// When set, each seed first subsamples this many training points.
    pub sample_train: Option<usize>,
    pub addition_steps: Vec<usize>,
    pub stability: StabilityConfig,
    pub seeds: Vec<u64>,
    pub classifier: ClassifierConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            valuer: ValuerSpec::default(),
            removal_fraction: 0.5,
            sample_train: None,
            addition_steps: Vec::new(),
            stability: StabilityConfig::default(),
            seeds: vec![0],
            classifier: ClassifierConfig::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.valuer.validate()?;
        if !(self.removal_fraction > 0.0 && self.removal_fraction < 1.0) {
            return Err(EvError::invalid(format!(
                "removal_fraction must lie in (0, 1), got {}",
                self.removal_fraction
            )));
        }
        if self.stability.fixed >= self.stability.pool {
            return Err(EvError::invalid(
                "stability.fixed must be smaller than stability.pool",
            ));
        }
        if self.stability.repeats < 2 {
            return Err(EvError::invalid("stability.repeats must be at least 2"));
        }
        if self.seeds.is_empty() {
            return Err(EvError::invalid("at least one seed is required"));
        }
        Ok(())
    }
}
