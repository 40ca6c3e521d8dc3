use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{sample_chi2, std_normal};

/// Additive measurement-noise families, parameterized by (location, scale, shape, df).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    /// N(0, var).
    Normal { var: f64 },
    StudentT { df: f64 },
    SkewNormal { loc: f64, scale: f64, shape: f64 },
    SkewT { loc: f64, scale: f64, shape: f64, df: f64 },
}

pub fn sample_skew_normal<R: Rng + ?Sized>(loc: f64, scale: f64, shape: f64, rng: &mut R) -> f64 {
    let delta = shape / (1.0 + shape * shape).sqrt();
    let z0 = std_normal(rng).abs();
    let z1 = std_normal(rng);
    loc + scale * (delta * z0 + (1.0 - delta * delta).sqrt() * z1)
}

impl NoiseSpec {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Normal { var } => var.sqrt() * std_normal(rng),
            NoiseSpec::StudentT { df } => std_normal(rng) / (sample_chi2(df, rng) / df).sqrt(),
            NoiseSpec::SkewNormal { loc, scale, shape } => sample_skew_normal(loc, scale, shape, rng),
            NoiseSpec::SkewT { loc, scale, shape, df } => {
                let x = sample_skew_normal(0.0, 1.0, shape, rng);
                loc + scale * x / (sample_chi2(df, rng) / df).sqrt()
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            NoiseSpec::None => "none".into(),
            NoiseSpec::Normal { var } => format!("N(0,{var})"),
            NoiseSpec::StudentT { df } => format!("t{df}"),
            NoiseSpec::SkewNormal { loc, scale, shape } => format!("SN({loc},{scale},{shape})"),
            NoiseSpec::SkewT { loc, scale, shape, df } => format!("ST({loc},{scale},{shape},{df})"),
        }
    }
}
