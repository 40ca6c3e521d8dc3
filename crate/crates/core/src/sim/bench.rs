use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    correlation, generate, metric_l2_cov, metric_pc_error, naive_dense_covariance, naive_sparse_covariance,
    resample_surface, Generator, NoiseSpec, PcErrorKind, SimDesign, Study,
};
use crate::basis::PriorCovSpec;
use crate::error::Result;
use crate::fpca::{eigen_fpca, interp_linear, EigenFpca};
use crate::model::{ModelSpec, Variant};
use crate::outlier::detect;
use crate::pipeline::fit;
use nalgebra::DVector;

/// One cell of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub study: String,
    pub replicate: usize,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

/// Default design and model for each study.
pub fn preset(study: Study, seed: u64) -> (SimDesign, ModelSpec) {
    let normal = NoiseSpec::Normal { var: 0.3 };
    let (design, p, k, prior) = match study {
        Study::I => (SimDesign::study_i(Generator::SkewNormal, normal, seed), 15, 5, PriorCovSpec::BrownianShift),
        Study::II => (SimDesign::study_ii(PriorCovSpec::Gauss3, normal, seed), 15, 5, PriorCovSpec::Gauss3),
        Study::III => (SimDesign::study_iii(0.15, seed), 15, 4, PriorCovSpec::Gauss3),
        Study::IV => (
            SimDesign::study_iv(0.10, NoiseSpec::SkewNormal { loc: 0.0, scale: 1.0, shape: 5.0 }, seed),
            15,
            4,
            PriorCovSpec::Gauss3,
        ),
        Study::V => (SimDesign::study_v(PriorCovSpec::Gauss3, NoiseSpec::Normal { var: 3.0 }, seed), 5, 5, PriorCovSpec::Gauss3),
    };
    let mut spec = ModelSpec::new(Variant::SN, p, k, prior);
    spec.asmc.seed = seed;
    (design, spec)
}

fn study_name(s: Study) -> String {
    format!("{s:?}")
}

fn eigen_on(e: &EigenFpca<f64>, from: &[f64], to: &[f64], c: usize) -> DVector<f64> {
    let col: Vec<f64> = e.functions.column(c).iter().copied().collect();
    DVector::from_iterator(to.len(), to.iter().map(|&t| interp_linear(from, &col, t)))
}

/// Generate, fit and score one replicate. The design and sampler seeds are offset by `replicate`;
/// study V redraws its outlier share from the offset seed.
pub fn run_replicate(design: &SimDesign, spec: &ModelSpec, replicate: usize, level: f64) -> Result<Vec<BenchRow>> {
    let mut design = design.clone();
    design.seed = design.seed.wrapping_add(replicate as u64);
    if design.study == Study::V {
        design.contamination_p = SimDesign::study_v(design.true_cov.clone(), NoiseSpec::None, design.seed).contamination_p;
    }
    let mut spec = spec.clone();
    spec.asmc.seed = spec.asmc.seed.wrapping_add(replicate as u64);
    let (data, truth) = generate(&design)?;
    let out = fit(&spec, &data)?;

    let study = study_name(design.study);
    let mut rows = Vec::new();
    let mut push = |method: &str, metric: &str, value: f64| {
        rows.push(BenchRow { study: study.clone(), replicate, method: method.into(), metric: metric.into(), value })
    };
    push("rbfpca", "log_evidence", out.result.log_evidence);

    let tc = truth.covariance_matrix();
    let est = resample_surface(&out.result.covariance_matrix(), &out.result.grid, &truth.grid);
    let naive = if data.is_sparse() {
        naive_sparse_covariance(&out.centered, &truth.grid)?
    } else {
        naive_dense_covariance(&out.centered)?
    };
    if data.is_sparse() {
        push("rbfpca", "corr_l2", metric_l2_cov(&correlation(&est), &correlation(&tc), None)?);
        push("naive", "corr_l2", metric_l2_cov(&correlation(&naive), &correlation(&tc), None)?);
    } else {
        push("rbfpca", "l2_cov", metric_l2_cov(&est, &tc, None)?);
        push("naive", "l2_cov", metric_l2_cov(&naive, &tc, None)?);
    }

    let te = truth.eigen();
    let rb_e = out.result.eigen();
    let k = spec.k.min(3).min(te.functions.ncols());
    let naive_e = eigen_fpca(&naive, &truth.grid, k)?;
    for c in 0..k {
        let t = te.functions.column(c).into_owned();
        let rb = eigen_on(&rb_e, &out.result.grid, &truth.grid, c);
        let nv = naive_e.functions.column(c).into_owned();
        push("rbfpca", &format!("pc{}_angle", c + 1), metric_pc_error(&rb, &t, PcErrorKind::Angle)?);
        push("naive", &format!("pc{}_angle", c + 1), metric_pc_error(&nv, &t, PcErrorKind::Angle)?);
        if !data.is_sparse() {
            push("rbfpca", &format!("pc{}_mse", c + 1), metric_pc_error(&rb, &t, PcErrorKind::Mse)?);
            push("naive", &format!("pc{}_mse", c + 1), metric_pc_error(&nv, &t, PcErrorKind::Mse)?);
        }
    }

    let n_out = truth.labels.iter().filter(|&&l| l).count();
    if n_out > 0 {
        let report = detect(&out.result.ids, &out.result.scores_matrix(), level)?;
        let tp = report.flags.iter().zip(&truth.labels).filter(|(&f, &l)| f && l).count();
        let fp = report.flags.iter().zip(&truth.labels).filter(|(&f, &l)| f && !l).count();
        let n_clean = truth.labels.len() - n_out;
        push("rbfpca", "recall", tp as f64 / n_out as f64);
        push("rbfpca", "fpr", if n_clean > 0 { fp as f64 / n_clean as f64 } else { 0.0 });
    }
    Ok(rows)
}

/// All replicates of one design, in replicate order. Parallel over replicates when the
/// sampler is; the rows do not depend on the thread count.
pub fn run_bench(design: &SimDesign, spec: &ModelSpec, replicates: usize, level: f64) -> Result<Vec<BenchRow>> {
    let per: Vec<Result<Vec<BenchRow>>> = if spec.asmc.parallel {
        (0..replicates).into_par_iter().map(|r| run_replicate(design, spec, r, level)).collect()
    } else {
        (0..replicates).map(|r| run_replicate(design, spec, r, level)).collect()
    };
    let mut rows = Vec::new();
    for r in per {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Mean of `metric` for `method` over replicates.
pub fn mean_metric(rows: &[BenchRow], method: &str, metric: &str) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter(|r| r.method == method && r.metric == metric).map(|r| r.value).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
