//! Model lifecycle: fit, classify, flag outliers, impute, score.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::em::{self, EStepCache, PatternCache, StepOptions};
use crate::error::{Error, Result};
use crate::model::{Constraints, MixtureModel};

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_STARTS: usize = 5;
pub const DEFAULT_BETA_FLOOR: f64 = 1.001;
/// Trim fraction of the k-means partition behind odd-numbered starts.
pub const START_TRIM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub clusters: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub beta_floor: f64,
    pub no_skew: bool,
    pub no_contamination: bool,
    pub alpha_min: Option<f64>,
    /// Caps engine threads; `None` uses the global rayon pool.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl FitConfig {
    pub fn new(clusters: usize) -> Self {
        Self {
            clusters,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            n_starts: DEFAULT_STARTS,
            seed: 0,
            beta_floor: DEFAULT_BETA_FLOOR,
            no_skew: false,
            no_contamination: false,
            alpha_min: None,
            workers: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_starts(mut self, n_starts: usize) -> Self {
        self.n_starts = n_starts;
        self
    }

    pub fn no_skew(mut self) -> Self {
        self.no_skew = true;
        self
    }

    pub fn no_contamination(mut self) -> Self {
        self.no_contamination = true;
        self
    }

    pub fn constraints(&self) -> Constraints {
        Constraints { no_skew: self.no_skew, no_contamination: self.no_contamination }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::InvalidParameter("clusters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be > 0".into()));
        }
        if !(self.beta_floor > 1.0) || !self.beta_floor.is_finite() {
            return Err(Error::InvalidParameter("beta floor must be > 1".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidParameter("need at least one start".into()));
        }
        if let Some(a) = self.alpha_min {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidParameter(format!("alpha_min = {a} not in [0, 1]")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Seed of start `k`.
    pub fn start_seed(&self, k: usize) -> u64 {
        self.seed.wrapping_add(k as u64)
    }

    fn step_options(&self) -> StepOptions {
        StepOptions { constraints: self.constraints(), beta_floor: self.beta_floor, alpha_min: self.alpha_min }
    }
}

/// Why a start was abandoned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartFailure {
    pub start: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: MixtureModel,
    pub labels: Vec<usize>,
    pub outlier_flags: Vec<bool>,
    pub z_matrix: DMatrix<f64>,
    pub v_matrix: DMatrix<f64>,
    pub loglik_trace: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub converged: bool,
    pub n_iters: usize,
    pub start_id: usize,
    pub failed_starts: Vec<StartFailure>,
    pub config: FitConfig,
}

impl FitResult {
    pub fn classify(&self) -> Vec<usize> {
        classify(&self.z_matrix)
    }

    pub fn detect_outliers(&self) -> Vec<bool> {
        detect_outliers(&self.z_matrix, &self.v_matrix)
    }

    pub fn impute(&self, data: &DataMatrix) -> Result<DMatrix<f64>> {
        impute(&self.model, data)
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Other(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Best-of-starts ECM fit. Start `k` is seeded with `seed + k`; odd starts
/// begin from a trimmed k-means partition so that a tight group of gross
/// outliers is less likely to capture a cluster in every start.
pub fn fit(data: &DataMatrix, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let g = config.clusters;
    if data.n() <= g * (data.p() + 1) {
        return Err(Error::InvalidParameter(format!(
            "n = {} must exceed G (p + 1) = {}",
            data.n(),
            g * (data.p() + 1)
        )));
    }
    let opts = config.step_options();
    let runs: Vec<Result<em::EcmRun>> = with_pool(config.workers, || {
        (0..config.n_starts)
            .into_par_iter()
            .map(|k| {
                let trim = if k % 2 == 1 { START_TRIM } else { 0.0 };
                let start =
                    em::initialize_trimmed(data, g, config.start_seed(k), config.constraints(), config.beta_floor, trim)?;
                em::run_ecm(data, start, &opts, config.tol, config.max_iter)
            })
            .collect()
    })?;
    let mut best: Option<(usize, em::EcmRun)> = None;
    let mut failed = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        match run {
            Ok(run) => {
                if best.as_ref().is_none_or(|(_, b)| run.estep.loglik > b.estep.loglik) {
                    best = Some((k, run));
                }
            }
            Err(e) => failed.push(StartFailure { start: k, seed: config.start_seed(k), reason: e.to_string() }),
        }
    }
    let Some((start_id, run)) = best else {
        let detail = failed.iter().map(|f| format!("start {}: {}", f.start, f.reason)).collect::<Vec<_>>().join("; ");
        return Err(Error::FitFailed(config.n_starts, detail));
    };
    Ok(package(run, start_id, failed, data.n(), config.clone()))
}

fn package(run: em::EcmRun, start_id: usize, failed_starts: Vec<StartFailure>, n: usize, config: FitConfig) -> FitResult {
    let z = run.estep.z_matrix();
    let v = run.estep.v_matrix();
    let n_params = run.model.n_params();
    let loglik = run.estep.loglik;
    FitResult {
        labels: classify(&z),
        outlier_flags: detect_outliers(&z, &v),
        z_matrix: z,
        v_matrix: v,
        loglik_trace: run.convergence.loglik_trace,
        loglik,
        aic: aic(loglik, n_params),
        bic: bic(loglik, n_params, n),
        n_params,
        n_obs: n,
        converged: run.convergence.converged,
        n_iters: run.iterations,
        start_id,
        failed_starts,
        model: run.model,
        config,
    }
}

/// E-step of a fixed model on `data`.
pub fn posterior(data: &DataMatrix, model: &MixtureModel) -> Result<EStepCache> {
    if data.p() != model.dim() {
        return Err(Error::Dimension(format!("data has {} columns, model {}", data.p(), model.dim())));
    }
    let mut patterns = PatternCache::new(data)?;
    patterns.refresh(model)?;
    em::e_step(data, model, &patterns)
}

/// Row-wise argmax; ties go to the lowest cluster index.
pub fn classify(z: &DMatrix<f64>) -> Vec<usize> {
    (0..z.nrows())
        .map(|i| {
            let mut best = 0;
            for g in 1..z.ncols() {
                if z[(i, g)] > z[(i, best)] {
                    best = g;
                }
            }
            best
        })
        .collect()
}

/// Flags rows whose good-point probability in their MAP cluster is below 1/2.
pub fn detect_outliers(z: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<bool> {
    classify(z).into_iter().enumerate().map(|(i, g)| v[(i, g)] < 0.5).collect()
}

/// Replaces missing cells by `E[X^m | x^o]` under the model; observed cells
/// are copied.
pub fn impute(model: &MixtureModel, data: &DataMatrix) -> Result<DMatrix<f64>> {
    let mut out = data.to_dense();
    if data.is_complete() {
        return Ok(out);
    }
    let post = posterior(data, model)?;
    let patterns = PatternCache::new(data)?;
    for i in 0..data.n() {
        let pat = patterns.pattern_of(i);
        if !pat.has_missing() {
            continue;
        }
        for (k, &j) in pat.missing_idx.iter().enumerate() {
            out[(i, j)] = post
                .row(i)
                .iter()
                .map(|m| {
                    let c = m.cross.as_ref().expect("row has missing cells");
                    m.z * (c.e_vx[k] + c.et_vx[k])
                })
                .sum();
        }
    }
    Ok(out)
}

pub fn aic(loglik: f64, n_params: usize) -> f64 {
    2.0 * n_params as f64 - 2.0 * loglik
}

pub fn bic(loglik: f64, n_params: usize, n: usize) -> f64 {
    n_params as f64 * (n as f64).ln() - 2.0 * loglik
}
