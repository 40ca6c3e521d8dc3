//! Robust Bayesian functional principal component analysis.
//!
//! Curves are modeled as `Y_i ~ MVN(H U_K β_i + D z_i, Σ / w_i)` with skew-normal,
//! skew-t or two-component mixture errors. Posteriors are sampled with an adaptive
//! annealed SMC sampler whose moves are Gibbs sweeps, which also yields the log
//! marginal likelihood used to choose between variants.
//!
//! Numerical building blocks are generic over [`Real`]; the sampler works in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asmc;
pub mod basis;
pub mod dist;
pub mod error;
pub mod fpca;
pub mod gibbs;
pub mod linalg;
pub mod model;
pub mod outlier;
pub mod pipeline;
pub mod rng;
mod scalar;
pub mod sim;

pub use asmc::{run_asmc, AnnealedModel, AsmcConfig, AsmcRun, IterationRecord, Propagation};
pub use basis::{BasisSystem, PriorCovSpec};
pub use error::{Error, Result};
pub use fpca::{EigenFpca, FpcaResult};
pub use gibbs::FpcaModel;
pub use model::{FunctionalDataset, ModelSpec, ParticleState, Variant};
pub use outlier::{OutlierReport, RobustEstimate};
pub use pipeline::{fit, FitOutput};
pub use scalar::Real;

pub type Basis = BasisSystem<f64>;
pub type Basis32 = BasisSystem<f32>;
pub type Eigen = EigenFpca<f64>;
pub type Eigen32 = EigenFpca<f32>;
pub type Robust = RobustEstimate<f64>;
pub type Robust32 = RobustEstimate<f32>;
