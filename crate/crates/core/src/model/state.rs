use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentKind {
    SkewNormal,
    SkewT,
}

/// Parameters of one skew-elliptical component. Curve-indexed fields cover every
/// curve; curves not assigned to the component carry draws from their prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentState {
    pub kind: ComponentKind,
    pub beta: Vec<DVector<f64>>,
    pub omega_inv: DMatrix<f64>,
    pub z: Vec<DVector<f64>>,
    /// Skewness diagonal D, one vector per Σ group.
    pub d: Vec<DVector<f64>>,
    /// Σ⁻¹ per group.
    pub sigma_inv: Vec<DMatrix<f64>>,
    /// log det Σ⁻¹ per group.
    pub sigma_inv_logdet: Vec<f64>,
    /// Mixing weights w_i; identically 1 for a skew-normal component.
    pub w: Vec<f64>,
    /// ν_w per curve; empty for a skew-normal component.
    pub nu_w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    pub pi1: f64,
    /// Component index (0 or 1) of each curve.
    pub tau: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub components: Vec<ComponentState>,
    pub mixture: Option<MixtureState>,
}

impl ComponentState {
    pub fn omega(&self) -> Result<DMatrix<f64>> {
        crate::linalg::spd_inverse(&self.omega_inv)
    }
}

fn finite(v: impl IntoIterator<Item = f64>) -> bool {
    v.into_iter().all(f64::is_finite)
}

impl ParticleState {
    /// Checks positivity, truncation, SPD and canonical-label invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        for (c, comp) in self.components.iter().enumerate() {
            if comp.z.iter().any(|z| z.iter().any(|&v| !(v > 0.0) || !v.is_finite())) {
                return fail(format!("component {c}: z must be strictly positive"));
            }
            if comp.w.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                return fail(format!("component {c}: w must be positive"));
            }
            if comp.kind == ComponentKind::SkewNormal && comp.w.iter().any(|&w| w != 1.0) {
                return fail(format!("component {c}: skew-normal weights must equal 1"));
            }
            if comp.nu_w.iter().any(|&v| !(v > 2.0) || !v.is_finite()) {
                return fail(format!("component {c}: nu_w must exceed 2"));
            }
            if !comp.beta.iter().all(|b| finite(b.iter().copied())) || !comp.d.iter().all(|d| finite(d.iter().copied())) {
                return fail(format!("component {c}: non-finite beta or D"));
            }
            if Cholesky::new(comp.omega_inv.clone()).is_none() {
                return fail(format!("component {c}: Omega is not SPD"));
            }
            for s in &comp.sigma_inv {
                if Cholesky::new(s.clone()).is_none() {
                    return fail(format!("component {c}: Sigma is not SPD"));
                }
            }
        }
        if let Some(mix) = &self.mixture {
            if !(0.0..=1.0).contains(&mix.pi1) {
                return fail("pi1 outside [0, 1]".into());
            }
            if mix.tau.iter().any(|&t| t > 1) {
                return fail("tau labels must be 0 or 1".into());
            }
            if self.components.len() != 2 || self.components[0].kind != ComponentKind::SkewNormal {
                return fail("mixture is not in canonical form".into());
            }
        }
        Ok(())
    }

    /// Swap the two mixture labels together with their parameters.
    pub fn permute_labels(&mut self) {
        if let Some(mix) = &mut self.mixture {
            self.components.swap(0, 1);
            mix.pi1 = 1.0 - mix.pi1;
            for t in mix.tau.iter_mut() {
                *t = 1 - *t;
            }
        }
    }

    /// Relabel so that component 0 is the skew-normal component.
    pub fn canonicalize(&mut self) {
        if self.mixture.is_some() && self.components[0].kind != ComponentKind::SkewNormal {
            self.permute_labels();
        }
    }
}
