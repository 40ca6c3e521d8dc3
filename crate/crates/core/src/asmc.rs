//! Adaptive annealed sequential Monte Carlo with evidence estimation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{site, RngStream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsmcConfig {
    pub n_particles: usize,
    /// ι, target relative conditional ESS between successive temperatures.
    pub rcess_threshold: f64,
    /// ς, resampling threshold on the relative ESS.
    pub resample_threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Propagate particles on the rayon pool; results are identical either way.
    pub parallel: bool,
}

impl Default for AsmcConfig {
    fn default() -> Self {
        Self {
            n_particles: 200,
            rcess_threshold: 0.9,
            resample_threshold: 0.5,
            max_iterations: 10_000,
            seed: 1,
            parallel: true,
        }
    }
}

impl AsmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::Validation("n_particles must be at least 2".into()));
        }
        if !(self.rcess_threshold > 0.0 && self.rcess_threshold < 1.0) {
            return Err(Error::Validation("rcess_threshold must lie in (0, 1)".into()));
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return Err(Error::Validation("resample_threshold must lie in (0, 1]".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Propagation {
    pub log_likelihood: f64,
    pub mh_accepted: usize,
    pub mh_proposed: usize,
}

/// A model that can be annealed from its prior (α = 0) to its posterior (α = 1).
pub trait AnnealedModel: Sync {
    type State: Clone + Send + Sync;

    fn init(&self, rng: &mut StreamRng) -> Result<Self::State>;

    fn log_likelihood(&self, state: &Self::State) -> f64;

    /// One move leaving p(y|θ)^α π₀(θ) invariant; returns the new log-likelihood.
    fn propagate(&self, state: &mut Self::State, alpha: f64, rng: &mut StreamRng) -> Result<Propagation>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub alpha: f64,
    pub ress: f64,
    pub resampled: bool,
    pub mh_acceptance: Option<f64>,
    pub log_evidence: f64,
}

#[derive(Debug, Clone)]
pub struct AsmcRun<S> {
    pub particles: Vec<S>,
    /// Normalized weights.
    pub weights: Vec<f64>,
    pub log_likelihoods: Vec<f64>,
    pub schedule: Vec<f64>,
    pub log_evidence: f64,
    pub diagnostics: Vec<IterationRecord>,
}

/// (Σ W u)² / Σ W u².
pub fn rcess(w: &[f64], u: &[f64]) -> Result<f64> {
    let (mut s1, mut s2) = (0.0, 0.0);
    for (&wk, &uk) in w.iter().zip(u) {
        s1 += wk * uk;
        s2 += wk * uk * uk;
    }
    if !(s2 > 0.0) {
        return Err(Error::AllZeroIncrements);
    }
    Ok(s1 * s1 / s2)
}

/// rCESS of the increments exp(δ·ℓ_k), evaluated after centering by the weighted max.
fn rcess_step(w: &[f64], log_lik: &[f64], max_ll: f64, delta: f64) -> f64 {
    let (mut s1, mut s2) = (0.0, 0.0);
    for (&wk, &l) in w.iter().zip(log_lik) {
        if wk > 0.0 {
            let u = (delta * (l - max_ll)).exp();
            s1 += wk * u;
            s2 += wk * u * u;
        }
    }
    s1 * s1 / s2
}

fn weighted_max(w: &[f64], log_lik: &[f64]) -> f64 {
    w.iter()
        .zip(log_lik)
        .filter(|(&wk, _)| wk > 0.0)
        .map(|(_, &l)| l)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn relative_ess(w: &[f64]) -> f64 {
    1.0 / (w.len() as f64 * w.iter().map(|x| x * x).sum::<f64>())
}

/// Next annealing exponent: 1 if the full step keeps rCESS ≥ ι, otherwise the
/// bisection root of rCESS = ι.
pub fn find_next_alpha(w: &[f64], log_lik: &[f64], alpha_prev: f64, iota: f64) -> f64 {
    let max_ll = weighted_max(w, log_lik);
    let span = 1.0 - alpha_prev;
    if rcess_step(w, log_lik, max_ll, span) >= iota {
        return 1.0;
    }
    let tol = 1e-10;
    if rcess_step(w, log_lik, max_ll, tol) < iota {
        log::warn!("rCESS falls below {iota} within {tol:e} of alpha = {alpha_prev}");
        return alpha_prev + tol;
    }
    let (mut lo, mut hi) = (0.0, span);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if rcess_step(w, log_lik, max_ll, mid) >= iota {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (alpha_prev + 0.5 * (lo + hi)).min(1.0)
}

/// Multiply weights by exp(δ·ℓ_k), renormalize, and return log Σ W_prev exp(δ·ℓ_k).
pub fn reweight_and_accumulate(weights: &mut [f64], log_lik: &[f64], delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let max = weights
        .iter()
        .zip(log_lik)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &l)| delta * l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (w, &l) in weights.iter_mut().zip(log_lik) {
        if *w > 0.0 {
            *w *= (delta * l - max).exp();
        }
        sum += *w;
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    max + sum.ln()
}

/// Systematic resampling with a single offset `u ∈ (0, 1]`; returns ancestor indices.
pub fn systematic_indices(weights: &[f64], u: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut j = 0;
    for i in 0..n {
        let point = (i as f64 + u) / n as f64;
        while point > cum && j + 1 < n {
            j += 1;
            cum += weights[j];
        }
        out.push(j);
    }
    out
}

pub fn resample_systematic<S: Clone, R: Rng + ?Sized>(particles: &[S], weights: &[f64], rng: &mut R) -> (Vec<S>, Vec<usize>) {
    let u: f64 = 1.0 - rng.random::<f64>();
    let idx = systematic_indices(weights, u);
    (idx.iter().map(|&i| particles[i].clone()).collect(), idx)
}

fn propagate_all<M: AnnealedModel>(
    model: &M,
    particles: &mut [M::State],
    log_lik: &mut [f64],
    alpha: f64,
    config: &AsmcConfig,
    iteration: usize,
) -> Result<(usize, usize)> {
    let step = |(k, (state, ll)): (usize, (&mut M::State, &mut f64))| -> Result<Propagation> {
        let mut rng = RngStream::new(config.seed, k as u64, iteration as u64, site::PROPAGATE).rng();
        let p = model.propagate(state, alpha, &mut rng)?;
        *ll = p.log_likelihood;
        Ok(p)
    };
    let results: Vec<Result<Propagation>> = if config.parallel {
        particles.par_iter_mut().zip(log_lik.par_iter_mut()).enumerate().map(step).collect()
    } else {
        particles.iter_mut().zip(log_lik.iter_mut()).enumerate().map(step).collect()
    };
    let (mut acc, mut prop) = (0, 0);
    for r in results {
        let p = r?;
        acc += p.mh_accepted;
        prop += p.mh_proposed;
    }
    Ok((acc, prop))
}

pub fn run_asmc<M: AnnealedModel>(model: &M, config: &AsmcConfig) -> Result<AsmcRun<M::State>> {
    config.validate()?;
    let n = config.n_particles;
    let init = |k: usize| -> Result<(M::State, f64)> {
        let mut rng = RngStream::new(config.seed, k as u64, 0, site::INIT).rng();
        let s = model.init(&mut rng)?;
        let ll = model.log_likelihood(&s);
        Ok((s, ll))
    };
    let pairs: Vec<Result<(M::State, f64)>> = if config.parallel {
        (0..n).into_par_iter().map(init).collect()
    } else {
        (0..n).map(init).collect()
    };
    let mut particles = Vec::with_capacity(n);
    let mut log_lik = Vec::with_capacity(n);
    for p in pairs {
        let (s, l) = p?;
        particles.push(s);
        log_lik.push(l);
    }
    if log_lik.iter().any(|l| l.is_nan()) {
        return Err(Error::Invariant("NaN log-likelihood at initialization".into()));
    }
    let mut weights = vec![1.0 / n as f64; n];
    let mut alpha = 0.0;
    let mut schedule = vec![0.0];
    let mut log_evidence = 0.0;
    let mut diagnostics = Vec::new();
    for iteration in 1..=config.max_iterations {
        let mut next = find_next_alpha(&weights, &log_lik, alpha, config.rcess_threshold);
        if next > 1.0 - 1e-12 {
            next = 1.0;
        }
        log_evidence += reweight_and_accumulate(&mut weights, &log_lik, next - alpha);
        alpha = next;
        schedule.push(alpha);
        let (acc, prop) = propagate_all(model, &mut particles, &mut log_lik, alpha, config, iteration)?;
        if log_lik.iter().any(|l| l.is_nan()) {
            return Err(Error::Invariant(format!("NaN log-likelihood at iteration {iteration}")));
        }
        let ress = relative_ess(&weights);
        let mut resampled = false;
        if alpha < 1.0 && ress < config.resample_threshold {
            let mut rng = RngStream::new(config.seed, 0, iteration as u64, site::RESAMPLE).rng();
            let (p, idx) = resample_systematic(&particles, &weights, &mut rng);
            particles = p;
            log_lik = idx.iter().map(|&i| log_lik[i]).collect();
            weights = vec![1.0 / n as f64; n];
            resampled = true;
        }
        let record = IterationRecord {
            iteration,
            alpha,
            ress,
            resampled,
            mh_acceptance: (prop > 0).then(|| acc as f64 / prop as f64),
            log_evidence,
        };
        log::debug!("asmc {record:?}");
        diagnostics.push(record);
        if alpha >= 1.0 {
            return Ok(AsmcRun { particles, weights, log_likelihoods: log_lik, schedule, log_evidence, diagnostics });
        }
    }
    Err(Error::IterationCap(config.max_iterations))
}
