use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rbfpca::model::{HyperOverrides, SamplerConfig};
use rbfpca::sim::{SimDesign, Study};
use rbfpca::{AsmcConfig, ModelSpec, PriorCovSpec, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Usage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub variant: Variant,
    pub p: usize,
    pub k: usize,
    pub prior_cov: PriorCovSpec,
    pub support_points: usize,
    pub hyper: HyperOverrides,
}

impl ModelSection {
    pub fn from_spec(s: &ModelSpec) -> Self {
        Self {
            variant: s.variant,
            p: s.p,
            k: s.k,
            prior_cov: s.prior_cov.clone(),
            support_points: s.support_points,
            hyper: s.hyper.clone(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self::from_spec(&ModelSpec::new(Variant::SN, 15, 5, PriorCovSpec::Gauss3))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectSection {
    pub level: Option<f64>,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub study: Study,
    pub seed: u64,
    /// Full design; replaces the study preset when given.
    pub design: Option<SimDesign>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { study: Study::II, seed: 1, design: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub study: Study,
    pub replicates: usize,
    pub level: f64,
    /// Full design; replaces the study preset when given.
    pub design: Option<SimDesign>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { study: Study::II, replicates: 10, level: 0.99, design: None }
    }
}

/// Everything a command reads, merged from the config file and flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Model settings; `bench` falls back to the study preset when absent.
    pub model: Option<ModelSection>,
    pub asmc: AsmcConfig,
    pub sampler: SamplerConfig,
    pub detect: DetectSection,
    pub compare: CompareSection,
    pub simulate: SimulateSection,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())).into())
    }

    pub fn spec(&self) -> ModelSpec {
        let m = self.model.clone().unwrap_or_default();
        let mut spec = ModelSpec::new(m.variant, m.p, m.k, m.prior_cov);
        spec.support_points = m.support_points;
        spec.hyper = m.hyper;
        spec.asmc = self.asmc.clone();
        spec.sampler = self.sampler.clone();
        spec
    }

    /// SHA-256 of the canonical JSON form of the merged configuration, leaving out
    /// settings that do not change results (output location, parallel execution).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.asmc.parallel = true;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Named kernels accepted by `--prior`.
pub fn parse_prior(name: &str) -> Result<PriorCovSpec> {
    Ok(match name {
        "gauss3" => PriorCovSpec::Gauss3,
        "gauss1" => PriorCovSpec::Gauss1,
        "brownian_shift" => PriorCovSpec::BrownianShift,
        "product_shift" => PriorCovSpec::ProductShift,
        other => {
            return Err(Usage(format!(
                "unknown prior '{other}' (expected gauss3, gauss1, brownian_shift or product_shift; use --prior-file for a CSV surface)"
            ))
            .into())
        }
    })
}

pub fn parse_study(name: &str) -> Result<Study> {
    Ok(match name.to_ascii_uppercase().as_str() {
        "I" | "1" => Study::I,
        "II" | "2" => Study::II,
        "III" | "3" => Study::III,
        "IV" | "4" => Study::IV,
        "V" | "5" => Study::V,
        _ => return Err(Usage(format!("unknown study '{name}' (expected I to V)")).into()),
    })
}
