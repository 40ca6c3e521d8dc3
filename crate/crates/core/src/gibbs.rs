//! Tempered full-conditional updates for the skew-normal, skew-t and mixture models.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::asmc::{AnnealedModel, Propagation};
use crate::basis::BasisSystem;
use crate::dist::{
    gamma_ln_pdf, sample_gamma, sample_gamma_truncated, sample_mvn_canonical, sample_truncated_normal_positive,
    sample_wishart_inv_scale, std_normal,
};
use crate::error::{Error, Result};
use crate::linalg::{log_det_chol, spd_inverse, symmetrize};
use crate::model::{
    derive_hyperparameters, ComponentKind, ComponentState, FunctionalDataset, Hyperparameters, Layout, MixtureState,
    ModelSpec, ParticleState, SamplerConfig, Variant,
};
use crate::rng::StreamRng;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone)]
pub struct CurveData {
    pub y: DVector<f64>,
    pub group: usize,
    /// Sample variance of the centered measurements.
    pub s2: f64,
}

/// Curves sharing one Σ and one D: the whole dataset on a common grid, or a
/// single curve in the sparse model.
#[derive(Debug, Clone)]
pub struct GroupDesign {
    /// H U_K evaluated at the group's times.
    pub g: DMatrix<f64>,
    pub curves: Vec<usize>,
    pub two_r: f64,
    pub inv_scale_diag: DVector<f64>,
}

impl GroupDesign {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }
}

/// The annealed target for one dataset and model specification.
#[derive(Debug, Clone)]
pub struct FpcaModel {
    pub variant: Variant,
    pub curves: Vec<CurveData>,
    pub groups: Vec<GroupDesign>,
    pub hyper: Hyperparameters,
    pub sampler: SamplerConfig,
    pub basis: BasisSystem<f64>,
    /// Grid on which posterior covariance surfaces are reported.
    pub eval_grid: Vec<f64>,
    pub eval_h: DMatrix<f64>,
}

fn sample_variance(y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    if y.len() < 2 {
        return 0.0;
    }
    let mean = y.sum() / n;
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn support_grid(domain: (f64, f64), points: usize) -> Vec<f64> {
    (0..points)
        .map(|j| domain.0 + (domain.1 - domain.0) * j as f64 / (points - 1) as f64)
        .collect()
}

impl FpcaModel {
    /// Build the target for centered data with hyperparameters derived from it.
    pub fn new(spec: &ModelSpec, data: &FunctionalDataset) -> Result<Self> {
        spec.validate(data)?;
        let mut hyper = derive_hyperparameters(data, spec.k)?;
        if let Some(nu) = spec.hyper.nu {
            hyper.nu = nu;
        }
        if let Some(g) = spec.hyper.gamma_diag {
            hyper.gamma_diag = g;
        }
        Self::with_hyper(spec, data, hyper)
    }

    pub fn with_hyper(spec: &ModelSpec, data: &FunctionalDataset, hyper: Hyperparameters) -> Result<Self> {
        spec.validate(data)?;
        hyper.validate(spec.k)?;
        let (basis_grid, curves_raw): (Vec<f64>, Vec<(Vec<f64>, Vec<f64>)>) = match &data.layout {
            Layout::Dense { grid, .. } => (grid.clone(), (0..data.n()).map(|i| data.curve(i)).collect()),
            Layout::Sparse { curves } => (
                support_grid(data.domain, spec.support_points),
                curves.iter().map(|c| (c.times.clone(), c.values.clone())).collect(),
            ),
        };
        let omega_star = spec.prior_cov.evaluate(&basis_grid)?;
        let basis = BasisSystem::new(&basis_grid, spec.p, &omega_star, spec.k)?;
        let mut groups = Vec::new();
        let mut curves = Vec::with_capacity(curves_raw.len());
        if data.is_sparse() {
            if hyper.groups.len() != curves_raw.len() {
                return Err(Error::DimensionMismatch("one Σ prior per sparse curve required".into()));
            }
            for (i, (times, values)) in curves_raw.iter().enumerate() {
                let gh = &hyper.groups[i];
                if gh.r_diag.len() != times.len() {
                    return Err(Error::DimensionMismatch(format!("range prior of curve {i}")));
                }
                groups.push(GroupDesign {
                    g: basis.design(times),
                    curves: vec![i],
                    two_r: gh.two_r,
                    inv_scale_diag: DVector::from_vec(gh.inv_scale_diag()),
                });
                let y = DVector::from_vec(values.clone());
                curves.push(CurveData { s2: sample_variance(&y), y, group: i });
            }
        } else {
            if hyper.groups.len() != 1 || hyper.groups[0].r_diag.len() != basis_grid.len() {
                return Err(Error::DimensionMismatch("dense data needs one Σ prior over the grid".into()));
            }
            let gh = &hyper.groups[0];
            groups.push(GroupDesign {
                g: &basis.h * &basis.u_k,
                curves: (0..curves_raw.len()).collect(),
                two_r: gh.two_r,
                inv_scale_diag: DVector::from_vec(gh.inv_scale_diag()),
            });
            for (_, values) in &curves_raw {
                let y = DVector::from_vec(values.clone());
                curves.push(CurveData { s2: sample_variance(&y), y, group: 0 });
            }
        }
        let eval_h = basis.h.clone();
        Ok(Self {
            variant: spec.variant,
            curves,
            groups,
            hyper,
            sampler: spec.sampler.clone(),
            eval_grid: basis_grid,
            eval_h,
            basis,
        })
    }

    pub fn k(&self) -> usize {
        self.basis.k()
    }

    pub fn n(&self) -> usize {
        self.curves.len()
    }

    fn dim(&self, i: usize) -> usize {
        self.curves[i].y.len()
    }

    pub fn init_component<R: Rng + ?Sized>(&self, kind: ComponentKind, rng: &mut R) -> Result<ComponentState> {
        let k = self.k();
        let n = self.n();
        let omega_inv = sample_wishart_inv_scale(
            self.hyper.omega_prior_df(),
            &DMatrix::from_diagonal(&self.basis.l_k),
            rng,
        )?;
        let zero = DVector::zeros(k);
        let mut beta = Vec::with_capacity(n);
        for _ in 0..n {
            beta.push(sample_mvn_canonical(&omega_inv, &zero, rng)?);
        }
        let z = (0..n)
            .map(|i| DVector::from_fn(self.dim(i), |_, _| sample_truncated_normal_positive(0.0, 1.0, rng)))
            .collect();
        let sd = self.hyper.gamma_diag.sqrt();
        let mut d = Vec::with_capacity(self.groups.len());
        let mut sigma_inv = Vec::with_capacity(self.groups.len());
        let mut logdet = Vec::with_capacity(self.groups.len());
        for grp in &self.groups {
            d.push(DVector::from_fn(grp.dim(), |_, _| sd * std_normal(rng)));
            let lam = sample_wishart_inv_scale(grp.two_r, &DMatrix::from_diagonal(&grp.inv_scale_diag), rng)?;
            logdet.push(chol_logdet(&lam)?);
            sigma_inv.push(lam);
        }
        let (w, nu_w) = match kind {
            ComponentKind::SkewNormal => (vec![1.0; n], vec![]),
            ComponentKind::SkewT => {
                let nu_w: Vec<f64> = (0..n).map(|_| sample_gamma_truncated(1.0, 0.1, 2.0, rng)).collect();
                let w = nu_w.iter().map(|&nu| sample_gamma(0.5 * nu, 0.5 * nu, rng)).collect();
                (w, nu_w)
            }
        };
        Ok(ComponentState { kind, beta, omega_inv, z, d, sigma_inv, sigma_inv_logdet: logdet, w, nu_w })
    }

    /// Independent draw of every parameter from its prior.
    pub fn init_particle<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParticleState> {
        let mut components = Vec::new();
        for kind in self.variant.components() {
            components.push(self.init_component(kind, rng)?);
        }
        let mixture = if self.variant == Variant::MM {
            let pi1: f64 = rng.random();
            let tau = (0..self.n()).map(|_| if rng.random::<f64>() < pi1 { 0 } else { 1 }).collect();
            Some(MixtureState { pi1, tau })
        } else {
            None
        };
        Ok(ParticleState { components, mixture })
    }

    /// Per-curve tempering exponents for component `c`: α on assigned curves, 0 elsewhere.
    pub fn exponents(&self, state: &ParticleState, c: usize, alpha: f64) -> Vec<f64> {
        match &state.mixture {
            None => vec![alpha; self.n()],
            Some(m) => m.tau.iter().map(|&t| if t as usize == c { alpha } else { 0.0 }).collect(),
        }
    }

    fn residual(&self, comp: &ComponentState, i: usize) -> DVector<f64> {
        let grp = &self.groups[self.curves[i].group];
        &self.curves[i].y - &grp.g * &comp.beta[i]
    }

    /// β_i ~ N(P⁻¹b, P⁻¹), P = a_i w_i G'Σ⁻¹G + Ω⁻¹, b = a_i w_i G'Σ⁻¹(y_i − D z_i).
    pub fn update_beta<R: Rng + ?Sized>(&self, comp: &mut ComponentState, a: &[f64], rng: &mut R) -> Result<()> {
        let mut cache: Vec<Option<(DMatrix<f64>, DMatrix<f64>)>> = vec![None; self.groups.len()];
        for i in 0..self.n() {
            let gi = self.curves[i].group;
            let c = a[i] * comp.w[i];
            let mut prec = comp.omega_inv.clone();
            let mut lin = DVector::zeros(self.k());
            if c > 0.0 {
                let (lg, gtlg) = cache[gi].get_or_insert_with(|| {
                    let g = &self.groups[gi].g;
                    let lg = &comp.sigma_inv[gi] * g;
                    let gtlg = symmetrize(&g.tr_mul(&lg));
                    (lg, gtlg)
                });
                prec += &*gtlg * c;
                let r = &self.curves[i].y - comp.d[gi].component_mul(&comp.z[i]);
                lin = lg.tr_mul(&r) * c;
            }
            comp.beta[i] = sample_mvn_canonical(&prec, &lin, rng)?;
        }
        Ok(())
    }

    /// Ω⁻¹ ~ Wishart(ν + n + 1, (L_K + Σ β_i β_i')⁻¹); β's prior layer is not tempered.
    pub fn update_omega<R: Rng + ?Sized>(&self, comp: &mut ComponentState, rng: &mut R) -> Result<()> {
        let mut s = DMatrix::from_diagonal(&self.basis.l_k);
        for b in &comp.beta {
            s.ger(1.0, b, b, 1.0);
        }
        let df = self.hyper.nu + comp.beta.len() as f64 + 1.0;
        comp.omega_inv = sample_wishart_inv_scale(df, &s, rng)?;
        Ok(())
    }

    /// Coordinate-wise Gibbs for z_i on the positive orthant with precision
    /// I + a_i w_i DΣ⁻¹D and linear term a_i w_i DΣ⁻¹(y_i − Gβ_i).
    pub fn update_z<R: Rng + ?Sized>(&self, comp: &mut ComponentState, a: &[f64], rng: &mut R) -> Result<()> {
        for (gi, grp) in self.groups.iter().enumerate() {
            let dim = grp.dim();
            let lam = &comp.sigma_inv[gi];
            let d = &comp.d[gi];
            let sweeps = if dim == 1 { 1 } else { self.sampler.z_sweeps };
            let active: Vec<usize> = grp.curves.iter().copied().filter(|&i| a[i] * comp.w[i] > 0.0).collect();
            for &i in &grp.curves {
                if a[i] * comp.w[i] <= 0.0 {
                    for zj in comp.z[i].iter_mut() {
                        *zj = sample_truncated_normal_positive(0.0, 1.0, rng);
                    }
                }
            }
            if active.is_empty() {
                continue;
            }
            let mut resid = DMatrix::zeros(dim, active.len());
            let mut dz = DMatrix::zeros(dim, active.len());
            for (col, &i) in active.iter().enumerate() {
                resid.set_column(col, &self.residual(comp, i));
                dz.set_column(col, &d.component_mul(&comp.z[i]));
            }
            let u = lam * resid;
            let mut v = lam * dz;
            let lam_diag: Vec<f64> = (0..dim).map(|j| lam[(j, j)]).collect();
            let lam_s = lam.as_slice();
            for (col, &i) in active.iter().enumerate() {
                let c = a[i] * comp.w[i];
                let z = comp.z[i].as_mut_slice();
                let vcol = &mut v.as_mut_slice()[col * dim..(col + 1) * dim];
                let ucol = &u.as_slice()[col * dim..(col + 1) * dim];
                for _ in 0..sweeps {
                    for j in 0..dim {
                        let dj = d[j];
                        let ljj = lam_diag[j];
                        let prec = 1.0 + c * dj * dj * ljj;
                        let off = vcol[j] - ljj * dj * z[j];
                        let mean = c * dj * (ucol[j] - off) / prec;
                        let znew = sample_truncated_normal_positive(mean, 1.0 / prec.sqrt(), rng);
                        let delta = dj * (znew - z[j]);
                        z[j] = znew;
                        if delta != 0.0 {
                            let lc = &lam_s[j * dim..(j + 1) * dim];
                            for (vl, &ll) in vcol.iter_mut().zip(lc) {
                                *vl += ll * delta;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// vec(D) ~ N(B⁻¹b, B⁻¹), B = Γ⁻¹ + Σ a_i w_i diag(z_i)Σ⁻¹diag(z_i),
    /// b = Σ a_i w_i diag(z_i)Σ⁻¹(y_i − Gβ_i).
    pub fn update_d<R: Rng + ?Sized>(&self, comp: &mut ComponentState, a: &[f64], rng: &mut R) -> Result<()> {
        let gamma_inv = 1.0 / self.hyper.gamma_diag;
        for (gi, grp) in self.groups.iter().enumerate() {
            let dim = grp.dim();
            let active: Vec<usize> = grp.curves.iter().copied().filter(|&i| a[i] * comp.w[i] > 0.0).collect();
            let mut bmat = DMatrix::zeros(dim, dim);
            let mut bvec = DVector::zeros(dim);
            if !active.is_empty() {
                let lam = &comp.sigma_inv[gi];
                let mut resid = DMatrix::zeros(dim, active.len());
                let mut zs = DMatrix::zeros(dim, active.len());
                for (col, &i) in active.iter().enumerate() {
                    resid.set_column(col, &self.residual(comp, i));
                    zs.set_column(col, &(&comp.z[i] * (a[i] * comp.w[i]).sqrt()));
                }
                let u = lam * resid;
                for (col, &i) in active.iter().enumerate() {
                    let c = a[i] * comp.w[i];
                    bvec += comp.z[i].component_mul(&u.column(col)) * c;
                }
                bmat = (&zs * zs.transpose()).component_mul(lam);
            }
            for j in 0..dim {
                bmat[(j, j)] += gamma_inv;
            }
            comp.d[gi] = sample_mvn_canonical(&bmat, &bvec, rng)?;
        }
        Ok(())
    }

    /// Σ⁻¹ ~ Wishart(2r + Σa_i, [(2κ)⁻¹ + Σ a_i w_i e_i e_i']⁻¹).
    pub fn update_sigma<R: Rng + ?Sized>(&self, comp: &mut ComponentState, a: &[f64], rng: &mut R) -> Result<()> {
        for (gi, grp) in self.groups.iter().enumerate() {
            let dim = grp.dim();
            let mut df = grp.two_r;
            let mut es = DMatrix::zeros(dim, grp.curves.len());
            for (col, &i) in grp.curves.iter().enumerate() {
                let c = a[i] * comp.w[i];
                df += a[i];
                if c > 0.0 {
                    let e = self.residual(comp, i) - comp.d[gi].component_mul(&comp.z[i]);
                    es.set_column(col, &(e * c.sqrt()));
                }
            }
            let mut inv_scale = &es * es.transpose();
            for j in 0..dim {
                inv_scale[(j, j)] += grp.inv_scale_diag[j];
            }
            let floor = dim as f64 - 1.0 + 1e-6;
            if df <= dim as f64 - 1.0 {
                log::warn!("Sigma degrees of freedom {df} raised to {floor}");
                df = floor;
            }
            let lam = sample_wishart_inv_scale(df, &inv_scale, rng)?;
            comp.sigma_inv_logdet[gi] = chol_logdet(&lam)?;
            comp.sigma_inv[gi] = lam;
        }
        Ok(())
    }

    /// w_i ~ Gamma(ν_i/2 + a_i m_i/2, ν_i/2 + a_i m_i s_i/2).
    pub fn update_w<R: Rng + ?Sized>(&self, comp: &mut ComponentState, a: &[f64], rng: &mut R) {
        if comp.kind != ComponentKind::SkewT {
            return;
        }
        for i in 0..self.n() {
            let m = self.dim(i) as f64;
            let nu = comp.nu_w[i];
            let shape = 0.5 * nu + 0.5 * a[i] * m;
            let rate = 0.5 * nu + 0.5 * a[i] * m * self.curves[i].s2;
            comp.w[i] = sample_gamma(shape, rate, rng);
        }
    }

    /// One random-walk MH step on log(ν_w − 2) per curve; returns accepted count.
    pub fn update_nu_w<R: Rng + ?Sized>(&self, comp: &mut ComponentState, rng: &mut R) -> usize {
        if comp.kind != ComponentKind::SkewT {
            return 0;
        }
        let mut accepted = 0;
        for i in 0..self.n() {
            let (nu, acc) = nu_w_mh_step(comp.nu_w[i], comp.w[i], self.sampler.nu_w_step, rng);
            comp.nu_w[i] = nu;
            accepted += acc as usize;
        }
        accepted
    }

    /// One tempered sweep over a component in the fixed order β, Ω, z, D, Σ, w, ν_w.
    pub fn sweep_component<R: Rng + ?Sized>(&self, comp: &mut ComponentState, a: &[f64], rng: &mut R) -> Result<(usize, usize)> {
        self.update_beta(comp, a, rng)?;
        self.update_omega(comp, rng)?;
        self.update_z(comp, a, rng)?;
        self.update_d(comp, a, rng)?;
        self.update_sigma(comp, a, rng)?;
        self.update_w(comp, a, rng);
        let acc = self.update_nu_w(comp, rng);
        let prop = if comp.kind == ComponentKind::SkewT { self.n() } else { 0 };
        Ok((acc, prop))
    }

    /// Complete-data Gaussian log density of every curve under one component.
    pub fn component_curve_loglik(&self, comp: &ComponentState) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (gi, grp) in self.groups.iter().enumerate() {
            let dim = grp.dim();
            let mut e = DMatrix::zeros(dim, grp.curves.len());
            for (col, &i) in grp.curves.iter().enumerate() {
                e.set_column(col, &(self.residual(comp, i) - comp.d[gi].component_mul(&comp.z[i])));
            }
            let le = &comp.sigma_inv[gi] * &e;
            for (col, &i) in grp.curves.iter().enumerate() {
                let q = e.column(col).dot(&le.column(col));
                let w = comp.w[i];
                out[i] = 0.5 * (dim as f64) * (w.ln() - LN_2PI) + 0.5 * comp.sigma_inv_logdet[gi] - 0.5 * w * q;
            }
        }
        out
    }

    /// π₁ ~ Beta(1 + n₁, 1 + n₂), then τ_i from the α-tempered component densities,
    /// then canonical relabeling. Returns the per-curve log densities of both components.
    pub fn update_mixture<R: Rng + ?Sized>(&self, state: &mut ParticleState, alpha: f64, rng: &mut R) -> Result<[Vec<f64>; 2]> {
        let l0 = self.component_curve_loglik(&state.components[0]);
        let l1 = self.component_curve_loglik(&state.components[1]);
        let mix = state.mixture.as_mut().ok_or_else(|| Error::Validation("not a mixture state".into()))?;
        let n1 = mix.tau.iter().filter(|&&t| t == 0).count() as f64;
        let n2 = mix.tau.len() as f64 - n1;
        let beta = Beta::new(1.0 + n1, 1.0 + n2).map_err(|e| Error::Domain(e.to_string()))?;
        mix.pi1 = beta.sample(rng);
        let (lp1, lp2) = (mix.pi1.ln(), (1.0 - mix.pi1).ln());
        for i in 0..mix.tau.len() {
            let la = lp1 + alpha * l0[i];
            let lb = lp2 + alpha * l1[i];
            let p = if la == f64::NEG_INFINITY { 0.0 } else { 1.0 / (1.0 + (lb - la).exp()) };
            mix.tau[i] = if rng.random::<f64>() < p { 0 } else { 1 };
        }
        state.canonicalize();
        Ok([l0, l1])
    }

    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut ParticleState, alpha: f64, rng: &mut R) -> Result<Propagation> {
        let mut acc = 0;
        let mut prop = 0;
        for c in 0..state.components.len() {
            let a = self.exponents(state, c, alpha);
            let (ac, pr) = self.sweep_component(&mut state.components[c], &a, rng)?;
            acc += ac;
            prop += pr;
        }
        let log_likelihood = if state.mixture.is_some() {
            let l = self.update_mixture(state, alpha, rng)?;
            let tau = &state.mixture.as_ref().unwrap().tau;
            tau.iter().enumerate().map(|(i, &t)| l[t as usize][i]).sum()
        } else {
            self.component_curve_loglik(&state.components[0]).iter().sum()
        };
        if self.sampler.validate {
            state.validate()?;
        }
        Ok(Propagation { log_likelihood, mh_accepted: acc, mh_proposed: prop })
    }

    pub fn particle_loglik(&self, state: &ParticleState) -> f64 {
        match &state.mixture {
            None => self.component_curve_loglik(&state.components[0]).iter().sum(),
            Some(m) => {
                let l0 = self.component_curve_loglik(&state.components[0]);
                let l1 = self.component_curve_loglik(&state.components[1]);
                m.tau.iter().enumerate().map(|(i, &t)| if t == 0 { l0[i] } else { l1[i] }).sum()
            }
        }
    }

    /// Ω of a particle; for the mixture, π₁Ω₁ + (1 − π₁)Ω₂, the covariance of the
    /// mixed process.
    pub fn omega_effective(&self, state: &ParticleState) -> Result<DMatrix<f64>> {
        match &state.mixture {
            None => state.components[0].omega(),
            Some(m) => Ok(state.components[0].omega()? * m.pi1 + state.components[1].omega()? * (1.0 - m.pi1)),
        }
    }

    /// Measurement covariance Σ/w_i of curve `i` under its assigned component.
    pub fn noise_cov(&self, state: &ParticleState, i: usize) -> Result<DMatrix<f64>> {
        let c = state.mixture.as_ref().map(|m| m.tau[i] as usize).unwrap_or(0);
        let comp = &state.components[c];
        let sigma = spd_inverse(&comp.sigma_inv[self.curves[i].group])?;
        Ok(sigma / comp.w[i])
    }
}

fn chol_logdet(m: &DMatrix<f64>) -> Result<f64> {
    let c = Cholesky::new(m.clone()).ok_or_else(|| Error::NonSpdMatrix("Sigma precision draw".into()))?;
    Ok(log_det_chol(&c))
}

/// log of Gamma(1, 0.1) prior × Gamma(w; ν/2, ν/2), up to a constant, for ν > 2.
pub fn nu_w_log_target(nu: f64, w: f64) -> f64 {
    -0.1 * nu + gamma_ln_pdf(w, 0.5 * nu, 0.5 * nu)
}

pub fn nu_w_mh_step<R: Rng + ?Sized>(nu: f64, w: f64, step: f64, rng: &mut R) -> (f64, bool) {
    let eta = (nu - 2.0).ln();
    let eta_new = eta + step * std_normal(rng);
    let nu_new = 2.0 + eta_new.exp();
    if !(nu_new > 2.0) || !nu_new.is_finite() {
        return (nu, false);
    }
    let log_ratio = nu_w_log_target(nu_new, w) - nu_w_log_target(nu, w) + (eta_new - eta);
    let u: f64 = rng.random();
    if u.ln() < log_ratio || step == 0.0 {
        (nu_new, true)
    } else {
        (nu, false)
    }
}

impl AnnealedModel for FpcaModel {
    type State = ParticleState;

    fn init(&self, rng: &mut StreamRng) -> Result<ParticleState> {
        self.init_particle(rng)
    }

    fn log_likelihood(&self, state: &ParticleState) -> f64 {
        self.particle_loglik(state)
    }

    fn propagate(&self, state: &mut ParticleState, alpha: f64, rng: &mut StreamRng) -> Result<Propagation> {
        self.sweep(state, alpha, rng)
    }
}
