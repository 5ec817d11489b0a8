//! Versioned JSON result documents.
//!
//! The published schema lives in `schema/fit_result.schema.json` and is
//! embedded as [`SCHEMA`]. Keys are only ever added, never renamed.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::fit::{FitConfig, FitResult, StartFailure};
use crate::model::{ComponentParams, Constraints, MixtureModel};

pub const FORMAT: &str = "fmcmsn-fit-result";
pub const SCHEMA_VERSION: u32 = 1;
pub const SCHEMA: &str = include_str!("../../schema/fit_result.schema.json");

/// Provenance of a run. Timestamps and the full command line are left out
/// of result documents so repeated runs produce identical bytes; the CLI
/// writes them to an optional sidecar instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub software_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// SHA-256 of the input, hex encoded.
    pub input_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argv: Option<Vec<String>>,
    /// Seconds since the Unix epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: &impl Serialize, input_digest: String) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config)?,
            input_digest,
            argv: None,
            started_at: None,
            finished_at: None,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a matrix's shape, mask and observed values (little-endian
/// bits), independent of how it was stored on disk.
pub fn data_digest(data: &DataMatrix) -> String {
    let mut h = Sha256::new();
    h.update((data.n() as u64).to_le_bytes());
    h.update((data.p() as u64).to_le_bytes());
    for i in 0..data.n() {
        for j in 0..data.p() {
            match data.get(i, j) {
                Some(x) => {
                    h.update([1u8]);
                    h.update(x.to_bits().to_le_bytes());
                }
                None => h.update([0u8]),
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDoc {
    pub pi: f64,
    pub mu: Vec<f64>,
    /// Row-major.
    pub sigma: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `beta` sits at the floor, which is always the case when `alpha = 1`.
    pub at_floor: bool,
    pub delta: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDoc {
    pub converged: bool,
    pub iterations: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub best_start: usize,
    pub failed_starts: Vec<StartFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format: String,
    pub schema_version: u32,
    pub n_obs: usize,
    pub dim: usize,
    pub n_clusters: usize,
    pub constraints: Constraints,
    pub beta_floor: f64,
    pub clusters: Vec<ClusterDoc>,
    pub labels: Vec<usize>,
    pub outliers: Vec<bool>,
    /// `n x G`, row-major.
    pub z: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub loglik: f64,
    pub loglik_trace: Vec<f64>,
    pub n_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub convergence: ConvergenceDoc,
    pub config: FitConfig,
    pub manifest: RunManifest,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::Dimension(format!("{what} is ragged")));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

impl ResultDocument {
    pub fn from_fit(fit: &FitResult, manifest: RunManifest) -> Self {
        let floor = fit.model.beta_floor;
        let clusters = fit
            .model
            .components
            .iter()
            .map(|c| ClusterDoc {
                pi: c.pi,
                mu: c.mu.iter().copied().collect(),
                sigma: rows(&c.sigma),
                lambda: c.lambda.iter().copied().collect(),
                alpha: c.alpha,
                beta: c.beta,
                at_floor: c.beta <= floor,
                delta: c.delta.iter().copied().collect(),
                omega: rows(&c.omega),
            })
            .collect();
        Self {
            format: FORMAT.into(),
            schema_version: SCHEMA_VERSION,
            n_obs: fit.n_obs,
            dim: fit.model.dim(),
            n_clusters: fit.model.n_clusters(),
            constraints: fit.model.constraints,
            beta_floor: floor,
            clusters,
            labels: fit.labels.clone(),
            outliers: fit.outlier_flags.clone(),
            z: rows(&fit.z_matrix),
            v: rows(&fit.v_matrix),
            loglik: fit.loglik,
            loglik_trace: fit.loglik_trace.clone(),
            n_params: fit.n_params,
            aic: fit.aic,
            bic: fit.bic,
            convergence: ConvergenceDoc {
                converged: fit.converged,
                iterations: fit.n_iters,
                tol: fit.config.tol,
                max_iter: fit.config.max_iter,
                best_start: fit.start_id,
                failed_starts: fit.failed_starts.clone(),
            },
            config: fit.config.clone(),
            manifest,
        }
    }

    /// Rebuilds the fitted model from the stored direct parameters.
    pub fn to_model(&self) -> Result<MixtureModel> {
        let components = self
            .clusters
            .iter()
            .map(|c| {
                ComponentParams::from_direct(
                    c.pi,
                    DVector::from_vec(c.mu.clone()),
                    matrix(&c.sigma, "sigma")?,
                    DVector::from_vec(c.lambda.clone()),
                    c.alpha,
                    c.beta,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureModel::new(components, self.constraints, self.beta_floor)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s)?;
        if doc.format != FORMAT {
            return Err(Error::InvalidParameter(format!("not a result document (format {:?})", doc.format)));
        }
        if doc.schema_version > SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!("schema version {} is newer than {SCHEMA_VERSION}", doc.schema_version)));
        }
        Ok(doc)
    }
}

pub fn write_result_to<W: Write>(writer: W, fit: &FitResult, manifest: RunManifest) -> Result<()> {
    let mut w = BufWriter::new(writer);
    w.write_all(ResultDocument::from_fit(fit, manifest).to_json()?.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn write_result(path: impl AsRef<Path>, fit: &FitResult, manifest: RunManifest) -> Result<()> {
    write_result_to(File::create(path)?, fit, manifest)
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultDocument> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    ResultDocument::from_json(&s)
}
