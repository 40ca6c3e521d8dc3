//! Detrend, fit and summarize in one call.

use crate::asmc::{run_asmc, AsmcRun};
use crate::error::Result;
use crate::fpca::{summarize_run, FpcaResult};
use crate::gibbs::FpcaModel;
use crate::model::{detrend, FunctionalDataset, MeanEstimate, ModelSpec, ParticleState};

pub struct FitOutput {
    pub model: FpcaModel,
    pub run: AsmcRun<ParticleState>,
    pub centered: FunctionalDataset,
    pub mean: MeanEstimate,
    pub result: FpcaResult,
}

pub fn fit(spec: &ModelSpec, data: &FunctionalDataset) -> Result<FitOutput> {
    spec.validate(data)?;
    let (centered, mean) = detrend(data)?;
    let model = FpcaModel::new(spec, &centered)?;
    log::info!(
        "fitting {} with P = {}, K = {}, {} particles",
        spec.variant,
        spec.p,
        spec.k,
        spec.asmc.n_particles
    );
    let run = run_asmc(&model, &spec.asmc)?;
    log::info!("log evidence {:.4} after {} iterations", run.log_evidence, run.schedule.len() - 1);
    let result = summarize_run(&run, &model, &centered, mean.clone(), spec.asmc.seed)?;
    Ok(FitOutput { model, run, centered, mean, result })
}
