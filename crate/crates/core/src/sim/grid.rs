//! Replicate x missing-fraction x model grid.
//!
//! Every replicate draws one complete dataset; each missing-fraction cell
//! masks that same dataset with its own seed, and every model in the grid
//! is fit to the same masked data. Comparisons across cells and models are
//! therefore paired.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fit::{fit, FitConfig};
use crate::sim::mar::inject_mar;
use crate::sim::metrics::{ari, confusion_rates};
use crate::sim::scenario::ScenarioSpec;

/// A fit configuration with a display name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub config: FitConfig,
}

/// The three model families of the study: unconstrained, no skewness, no
/// contamination.
pub fn default_configs(clusters: usize, n_starts: usize) -> Vec<NamedConfig> {
    let base = FitConfig::new(clusters).with_starts(n_starts);
    vec![
        NamedConfig { name: "FMCMSN".into(), config: base.clone() },
        NamedConfig { name: "FMCMN".into(), config: base.clone().no_skew() },
        NamedConfig { name: "FMMSN".into(), config: base.no_contamination() },
    ]
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a named stream indexed by `parts`.
pub fn derive_seed(master: u64, stream: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master ^ mix(stream)), |acc, &p| mix(acc ^ mix(p)))
}

const DATA_STREAM: u64 = 1;
const MASK_STREAM: u64 = 2;
const FIT_STREAM: u64 = 3;

/// Seed of the complete dataset of `replicate`.
pub fn data_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, DATA_STREAM, &[replicate as u64])
}

/// Seed of the mask applied in `cell` of `replicate`.
pub fn mask_seed(master: u64, cell: usize, replicate: usize) -> u64 {
    derive_seed(master, MASK_STREAM, &[cell as u64, replicate as u64])
}

/// Fit seed shared by every cell and config of `replicate`.
pub fn fit_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, FIT_STREAM, &[replicate as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub replicate: usize,
    pub cell: usize,
    pub missing_frac: f64,
    pub config: String,
    pub ok: bool,
    pub reason: Option<String>,
    pub ari: Option<f64>,
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
    pub converged: Option<bool>,
    pub n_iters: Option<usize>,
    /// Largest one-step decrease of the log-likelihood trace (0 if monotone).
    pub max_ll_drop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub missing_frac: f64,
    pub config: String,
    pub n_runs: usize,
    /// Failed fits, left out of the means.
    pub n_excluded: usize,
    pub mean_ari: Option<f64>,
    pub mean_accuracy: Option<f64>,
    pub mean_tpr: Option<f64>,
    pub mean_fpr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResults {
    pub runs: Vec<RunRow>,
    pub cells: Vec<CellSummary>,
}

impl GridResults {
    pub fn cell(&self, cell: usize, config: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.cell == cell && c.config == config)
    }
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn max_drop(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

fn one_run(spec: &ScenarioSpec, configs: &[NamedConfig], replicate: usize) -> Result<Vec<RunRow>> {
    let (complete, truth) = spec.generate(data_seed(spec.seed, replicate))?;
    let bad = truth.bad_flags();
    let mut rows = Vec::new();
    for (cell, &frac) in spec.missing_fractions.iter().enumerate() {
        let (data, _) = inject_mar(&complete, frac, mask_seed(spec.seed, cell, replicate))?;
        for nc in configs {
            let mut cfg = nc.config.clone();
            cfg.seed = fit_seed(spec.seed, replicate);
            let row = match fit(&data, &cfg) {
                Ok(res) => {
                    let rates = confusion_rates(&res.outlier_flags, &bad)?;
                    let (tpr, fpr) = if truth.has_outlier_truth { (rates.tpr, rates.fpr) } else { (None, None) };
                    RunRow {
                        replicate,
                        cell,
                        missing_frac: frac,
                        config: nc.name.clone(),
                        ok: true,
                        reason: None,
                        ari: Some(ari(&res.labels, &truth.labels)?),
                        accuracy: Some(rates.accuracy),
                        tpr,
                        fpr,
                        loglik: Some(res.loglik),
                        aic: Some(res.aic),
                        converged: Some(res.converged),
                        n_iters: Some(res.n_iters),
                        max_ll_drop: Some(max_drop(&res.loglik_trace)),
                    }
                }
                Err(e) => RunRow {
                    replicate,
                    cell,
                    missing_frac: frac,
                    config: nc.name.clone(),
                    ok: false,
                    reason: Some(e.to_string()),
                    ari: None,
                    accuracy: None,
                    tpr: None,
                    fpr: None,
                    loglik: None,
                    aic: None,
                    converged: None,
                    n_iters: None,
                    max_ll_drop: None,
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Runs every (replicate, cell, config) combination. Replicates run in
/// parallel; rows come back ordered by replicate, then cell, then config.
pub fn run_grid(spec: &ScenarioSpec, configs: &[NamedConfig]) -> Result<GridResults> {
    spec.validate()?;
    let per_rep: Vec<Vec<RunRow>> =
        (0..spec.replicates).into_par_iter().map(|r| one_run(spec, configs, r)).collect::<Result<Vec<_>>>()?;
    let runs: Vec<RunRow> = per_rep.into_iter().flatten().collect();
    let mut cells = Vec::new();
    for (cell, &frac) in spec.missing_fractions.iter().enumerate() {
        for nc in configs {
            let sel: Vec<&RunRow> = runs.iter().filter(|r| r.cell == cell && r.config == nc.name).collect();
            let ok: Vec<&&RunRow> = sel.iter().filter(|r| r.ok).collect();
            cells.push(CellSummary {
                cell,
                missing_frac: frac,
                config: nc.name.clone(),
                n_runs: sel.len(),
                n_excluded: sel.len() - ok.len(),
                mean_ari: mean(ok.iter().map(|r| r.ari)),
                mean_accuracy: mean(ok.iter().map(|r| r.accuracy)),
                mean_tpr: mean(ok.iter().map(|r| r.tpr)),
                mean_fpr: mean(ok.iter().map(|r| r.fpr)),
            });
        }
    }
    Ok(GridResults { runs, cells })
}
