#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rbfpca::basis::BasisSystem;
use rbfpca::gibbs::{CurveData, FpcaModel, GroupDesign};
use rbfpca::model::{ComponentKind, ComponentState, GroupHyper, Hyperparameters, SamplerConfig, Variant};

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Hand-built dense target: every curve shares the design `g` (dim × K).
pub struct Toy {
    pub g: DMatrix<f64>,
    pub nu: f64,
    pub gamma: f64,
    pub two_r: f64,
    pub inv_scale: f64,
    pub l_k: DVector<f64>,
}

impl Toy {
    pub fn scalar() -> Self {
        Toy { g: DMatrix::identity(1, 1), nu: 2.0, gamma: 10.0, two_r: 4.0, inv_scale: 2.0, l_k: DVector::from_element(1, 1.0) }
    }

    pub fn model(&self, variant: Variant, ys: &[Vec<f64>]) -> FpcaModel {
        let (dim, k) = self.g.shape();
        let curves: Vec<CurveData> = ys
            .iter()
            .map(|y| {
                let y = DVector::from_vec(y.clone());
                let n = y.len() as f64;
                let mu = y.sum() / n;
                let s2 = if y.len() > 1 { y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                CurveData { y, group: 0, s2 }
            })
            .collect();
        let r = 200.0 * self.inv_scale / self.two_r;
        let hyper = Hyperparameters {
            nu: self.nu,
            gamma_diag: self.gamma,
            h_r: None,
            groups: vec![GroupHyper { two_r: self.two_r, r_diag: vec![r; dim] }],
        };
        let grid: Vec<f64> = (0..dim).map(|j| j as f64).collect();
        let basis = BasisSystem {
            grid: grid.clone(),
            lo: 0.0,
            hi: dim as f64,
            norms: vec![1.0; k],
            h: self.g.clone(),
            u_k: DMatrix::identity(k, k),
            l_k: self.l_k.clone(),
        };
        FpcaModel {
            variant,
            groups: vec![GroupDesign {
                g: self.g.clone(),
                curves: (0..curves.len()).collect(),
                two_r: self.two_r,
                inv_scale_diag: DVector::from_element(dim, self.inv_scale),
            }],
            curves,
            hyper,
            sampler: SamplerConfig { validate: true, ..SamplerConfig::default() },
            eval_h: self.g.clone(),
            eval_grid: grid,
            basis,
        }
    }
}

/// Component with fixed values: β = 0, Ω = I, z = 1, D = d, Σ⁻¹ = λI, w = 1.
pub fn fixed_component(kind: ComponentKind, n: usize, dim: usize, k: usize, d: f64, lambda: f64) -> ComponentState {
    let sigma_inv = DMatrix::identity(dim, dim) * lambda;
    ComponentState {
        kind,
        beta: vec![DVector::zeros(k); n],
        omega_inv: DMatrix::identity(k, k),
        z: vec![DVector::from_element(dim, 1.0); n],
        d: vec![DVector::from_element(dim, d)],
        sigma_inv_logdet: vec![dim as f64 * lambda.ln()],
        sigma_inv: vec![sigma_inv],
        w: vec![1.0; n],
        nu_w: if kind == ComponentKind::SkewT { vec![5.0; n] } else { vec![] },
    }
}

/// Mean and batch-means standard error of an autocorrelated series.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let b = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|j| xs[j * b..(j + 1) * b].iter().sum::<f64>() / b as f64).collect();
    let (m, v) = mean_var(&means);
    (m, (v / batches as f64).sqrt())
}

use rbfpca::dist::sample_mvn;
use rbfpca::model::ParticleState;
use rbfpca::rng::{site, stream, StreamRng};

pub struct GewekeStat {
    pub name: &'static str,
    pub joint: (f64, f64),
    pub chain: (f64, f64),
}

impl GewekeStat {
    pub fn z(&self) -> f64 {
        (self.joint.0 - self.chain.0) / (self.joint.1.powi(2) + self.chain.1.powi(2)).sqrt()
    }
}

const GEWEKE_NAMES: [&str; 10] =
    ["beta", "beta^2", "omega_inv_11", "omega_inv_22", "d", "d^2", "sigma_inv_11", "sigma_inv_13", "z", "y^2"];

fn geweke_stats(state: &ParticleState, ys: &[DVector<f64>]) -> [f64; 10] {
    let c = &state.components[0];
    [
        c.beta[0][0],
        c.beta[0][0].powi(2),
        c.omega_inv[(0, 0)],
        c.omega_inv[(1, 1)],
        c.d[0][0],
        c.d[0][0].powi(2),
        c.sigma_inv[0][(0, 0)],
        c.sigma_inv[0][(0, 2)],
        c.z[1][2],
        ys[1][1].powi(2),
    ]
}

fn draw_data(model: &FpcaModel, state: &ParticleState, rng: &mut StreamRng) -> Vec<DVector<f64>> {
    let c = &state.components[0];
    let g = &model.groups[0].g;
    let sigma = c.sigma_inv[0].clone().try_inverse().unwrap();
    (0..model.n())
        .map(|i| {
            let mean = g * &c.beta[i] + c.d[0].component_mul(&c.z[i]);
            sample_mvn(&mean, &(&sigma / c.w[i]), rng).unwrap()
        })
        .collect()
}

fn set_data(model: &mut FpcaModel, ys: &[DVector<f64>]) {
    for (c, y) in model.curves.iter_mut().zip(ys) {
        c.y = y.clone();
    }
}

/// Geweke's marginal-conditional versus successive-conditional comparison for the
/// skew-normal model with 2 curves, m = 3 and K = P = 2.
pub fn geweke_sn(n_joint: usize, n_chain: usize, seed: u64) -> Vec<GewekeStat> {
    let toy = Toy {
        g: DMatrix::from_row_slice(3, 2, &[0.577, -0.707, 0.577, 0.0, 0.577, 0.707]),
        nu: 8.0,
        gamma: 1.0,
        two_r: 8.0,
        inv_scale: 1.0,
        l_k: DVector::from_row_slice(&[1.0, 0.5]),
    };
    let mut model = toy.model(Variant::SN, &[vec![0.0; 3], vec![0.0; 3]]);
    model.sampler.validate = false;
    let mut rng = stream(seed, site::TEST);
    let mut joint: Vec<Vec<f64>> = vec![Vec::with_capacity(n_joint); GEWEKE_NAMES.len()];
    for _ in 0..n_joint {
        let s = model.init_particle(&mut rng).unwrap();
        let ys = draw_data(&model, &s, &mut rng);
        for (j, v) in geweke_stats(&s, &ys).into_iter().enumerate() {
            joint[j].push(v);
        }
    }
    let mut chain: Vec<Vec<f64>> = vec![Vec::with_capacity(n_chain); GEWEKE_NAMES.len()];
    let mut state = model.init_particle(&mut rng).unwrap();
    let mut ys = draw_data(&model, &state, &mut rng);
    for _ in 0..n_chain {
        set_data(&mut model, &ys);
        model.sweep(&mut state, 1.0, &mut rng).unwrap();
        ys = draw_data(&model, &state, &mut rng);
        for (j, v) in geweke_stats(&state, &ys).into_iter().enumerate() {
            chain[j].push(v);
        }
    }
    GEWEKE_NAMES
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let (jm, jv) = mean_var(&joint[j]);
            GewekeStat { name, joint: (jm, (jv / n_joint as f64).sqrt()), chain: batch_mean_se(&chain[j], 200) }
        })
        .collect()
}
