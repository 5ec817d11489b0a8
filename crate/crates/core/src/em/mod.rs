//! ECM machinery.

pub mod convergence;
pub mod estep;
pub mod init;
pub mod mstep;
pub mod alt_forms;

pub use convergence::{aitken_check, AitkenCheck, ConvergenceState};
pub use estep::{
    assemble, cross_moments, e_step, observed_loglik, responsibilities, t_moments, Assembled, CrossMoments,
    EStepCache, PatternCache, RowMoments, TMoments,
};
pub use init::{initialize, initialize_trimmed};
pub use mstep::{accumulate, cm_step1, cm_step2, BetaObjective, ClusterStats, StepOptions};

use crate::data::DataMatrix;
use crate::error::Result;
use crate::model::MixtureModel;

/// One ECM run from a fixed starting model.
#[derive(Debug, Clone)]
pub struct EcmRun {
    pub model: MixtureModel,
    /// E-step at the final parameters.
    pub estep: EStepCache,
    pub convergence: ConvergenceState,
    /// Number of completed CM cycles.
    pub iterations: usize,
}

/// Iterates E-step, CM-step 1, CM-step 2 until the Aitken rule fires or
/// `max_iter` cycles have run. The trace holds the observed log-likelihood
/// at every visited parameter value, starting with `start`.
pub fn run_ecm(data: &DataMatrix, start: MixtureModel, opts: &StepOptions, tol: f64, max_iter: usize) -> Result<EcmRun> {
    let mut patterns = PatternCache::new(data)?;
    let mut model = start;
    let mut state = ConvergenceState::new(tol, max_iter);
    let mut iterations = 0;
    loop {
        patterns.refresh(&model)?;
        let cache = e_step(data, &model, &patterns)?;
        let converged = state.push(cache.loglik);
        if converged || iterations >= max_iter {
            return Ok(EcmRun { model, estep: cache, convergence: state, iterations });
        }
        let stats = accumulate(data, &patterns, &cache);
        let step1 = cm_step1(&stats, &model, data.n(), opts)?;
        model = cm_step2(&stats, &step1, opts)?;
        iterations += 1;
    }
}
