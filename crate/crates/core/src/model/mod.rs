//! Datasets, hyperparameters, model specification and particle state.

mod data;
mod detrend;
mod hyper;
mod state;

use serde::{Deserialize, Serialize};

pub use data::{fmt_f64, FunctionalDataset, Layout, SparseCurve};
pub use detrend::{detrend, local_linear, silverman_bandwidth, MeanEstimate};
pub use hyper::{default_h_r, derive_hyperparameters, GroupHyper, Hyperparameters};
pub use state::{ComponentKind, ComponentState, MixtureState, ParticleState};

use crate::asmc::AsmcConfig;
use crate::basis::PriorCovSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    SN,
    ST,
    MM,
}

impl Variant {
    pub fn components(self) -> Vec<ComponentKind> {
        match self {
            Variant::SN => vec![ComponentKind::SkewNormal],
            Variant::ST => vec![ComponentKind::SkewT],
            Variant::MM => vec![ComponentKind::SkewNormal, ComponentKind::SkewT],
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SN" => Ok(Variant::SN),
            "ST" => Ok(Variant::ST),
            "MM" => Ok(Variant::MM),
            _ => Err(Error::Validation(format!("unknown variant '{s}' (expected SN, ST or MM)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Optional overrides of the data-derived hyperparameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperOverrides {
    pub nu: Option<f64>,
    pub gamma_diag: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Coordinate sweeps per truncated-normal z update.
    pub z_sweeps: usize,
    /// Random-walk step on log(ν_w − 2).
    pub nu_w_step: f64,
    /// Check particle invariants after every sweep.
    pub validate: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { z_sweeps: 5, nu_w_step: 2.0, validate: cfg!(debug_assertions) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub p: usize,
    pub k: usize,
    pub prior_cov: PriorCovSpec,
    /// Support grid size for sparse data.
    pub support_points: usize,
    pub hyper: HyperOverrides,
    pub asmc: AsmcConfig,
    pub sampler: SamplerConfig,
}

impl ModelSpec {
    pub fn new(variant: Variant, p: usize, k: usize, prior_cov: PriorCovSpec) -> Self {
        Self {
            variant,
            p,
            k,
            prior_cov,
            support_points: 51,
            hyper: HyperOverrides::default(),
            asmc: AsmcConfig::default(),
            sampler: SamplerConfig::default(),
        }
    }

    pub fn validate(&self, data: &FunctionalDataset) -> Result<()> {
        if self.k == 0 || self.k > self.p {
            return Err(Error::Validation(format!("K ≤ P violated: K = {}, P = {}", self.k, self.p)));
        }
        let limit = data.min_obs();
        if self.p > limit {
            let what = if data.is_sparse() { "min n_i" } else { "m" };
            return Err(Error::Validation(format!("P ≤ {what} violated: P = {}, {what} = {limit}", self.p)));
        }
        if data.is_sparse() && self.support_points < self.p {
            return Err(Error::Validation("support grid must have at least P points".into()));
        }
        if self.sampler.z_sweeps == 0 {
            return Err(Error::Validation("z_sweeps must be at least 1".into()));
        }
        self.asmc.validate()
    }
}
