//! Missingness bookkeeping and the closed-form laws of the missing block.
//!
//! Two descriptions of `X^m` given the observed block are provided:
//!
//! * [`conditional_sn`]: given `x^o` and the good/bad indicator, `X^m` is an
//!   extended skew-normal `SN(mu_c, kappa Sigma_c, lambda_c, kappa^{-1/2} lambda0_c)`.
//! * [`conditional_normal`]: additionally given the latent truncated
//!   normal `T = t`, `X^m ~ N(m_c + kappa^{1/2} t gamma_c, kappa Omega_c)`.
//!
//! The two are different factorizations of one joint law; the test suite
//! checks they agree.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::data::DataMatrix;
use crate::distributions::{CanonicalParams, CmsnParams, MsnParams};
use crate::error::{Error, Result};
use crate::linalg::{gather_mat, gather_vec, psd_inv_sqrt, psd_sqrt, Cholesky};
use crate::special::{log_norm_cdf, mills_ratio, LN_INV_SQRT_2PI};

/// Observed/missing coordinate split of one row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MissPattern {
    pub observed_idx: Vec<usize>,
    pub missing_idx: Vec<usize>,
    pub p: usize,
}

impl MissPattern {
    pub fn from_mask(mask: &[bool]) -> Result<Self> {
        let observed_idx: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
        if observed_idx.is_empty() {
            return Err(Error::InvalidParameter("pattern has no observed coordinate".into()));
        }
        let missing_idx = (0..mask.len()).filter(|&j| !mask[j]).collect();
        Ok(Self { observed_idx, missing_idx, p: mask.len() })
    }

    pub fn complete(p: usize) -> Self {
        Self { observed_idx: (0..p).collect(), missing_idx: Vec::new(), p }
    }

    pub fn has_missing(&self) -> bool {
        !self.missing_idx.is_empty()
    }

    pub fn n_observed(&self) -> usize {
        self.observed_idx.len()
    }
}

/// Rows grouped by identical missingness pattern, in a deterministic order
/// (patterns sorted by mask).
pub fn scan_patterns(data: &DataMatrix) -> Result<Vec<(MissPattern, Vec<usize>)>> {
    let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for i in 0..data.n() {
        let mask = data.row_mask(i);
        if !mask.iter().any(|&o| o) {
            return Err(Error::FullyMissingRow { row: i });
        }
        groups.entry(mask.to_vec()).or_default().push(i);
    }
    groups
        .into_iter()
        .map(|(mask, rows)| Ok((MissPattern::from_mask(&mask)?, rows)))
        .collect()
}

/// Index of each row's pattern inside the output of [`scan_patterns`].
pub fn pattern_index(groups: &[(MissPattern, Vec<usize>)], n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for (k, (_, rows)) in groups.iter().enumerate() {
        for &i in rows {
            out[i] = k;
        }
    }
    out
}

/// Parameter blocks gathered for one pattern.
#[derive(Debug, Clone)]
pub struct PartitionedParams {
    pub mu_o: DVector<f64>,
    pub mu_m: DVector<f64>,
    pub sigma_oo: DMatrix<f64>,
    pub sigma_om: DMatrix<f64>,
    pub sigma_mo: DMatrix<f64>,
    pub sigma_mm: DMatrix<f64>,
    pub omega_oo: DMatrix<f64>,
    pub omega_om: DMatrix<f64>,
    pub omega_mo: DMatrix<f64>,
    pub omega_mm: DMatrix<f64>,
    pub delta_o: DVector<f64>,
    pub delta_m: DVector<f64>,
}

impl PartitionedParams {
    pub fn new(canon: &CanonicalParams, pattern: &MissPattern) -> Self {
        let (o, m) = (&pattern.observed_idx, &pattern.missing_idx);
        let sigma = canon.sigma();
        Self {
            mu_o: gather_vec(&canon.mu, o),
            mu_m: gather_vec(&canon.mu, m),
            sigma_oo: gather_mat(&sigma, o, o),
            sigma_om: gather_mat(&sigma, o, m),
            sigma_mo: gather_mat(&sigma, m, o),
            sigma_mm: gather_mat(&sigma, m, m),
            omega_oo: gather_mat(&canon.omega, o, o),
            omega_om: gather_mat(&canon.omega, o, m),
            omega_mo: gather_mat(&canon.omega, m, o),
            omega_mm: gather_mat(&canon.omega, m, m),
            delta_o: gather_vec(&canon.delta, o),
            delta_m: gather_vec(&canon.delta, m),
        }
    }
}

/// Law of the observed block: `CMSN(mu_o, Sigma_oo, lambda_dot_o, alpha, beta)`.
#[derive(Debug, Clone)]
pub struct ObservedMarginal {
    pub mu_o: DVector<f64>,
    pub sigma_oo: DMatrix<f64>,
    pub lambda_dot_o: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl ObservedMarginal {
    pub fn to_cmsn(&self) -> Result<CmsnParams> {
        CmsnParams::new(
            self.mu_o.clone(),
            self.sigma_oo.clone(),
            self.lambda_dot_o.clone(),
            self.alpha,
            self.beta,
        )
    }
}

pub fn marginal_observed(params: &CmsnParams, pattern: &MissPattern) -> Result<ObservedMarginal> {
    check_pattern(params, pattern)?;
    if !pattern.has_missing() {
        return Ok(ObservedMarginal {
            mu_o: params.msn.mu.clone(),
            sigma_oo: params.msn.sigma.clone(),
            lambda_dot_o: params.msn.lambda.clone(),
            alpha: params.alpha,
            beta: params.beta,
        });
    }
    let canon = params.canonical()?;
    let blocks = PartitionedParams::new(&canon, pattern);
    let chol = Cholesky::new(&blocks.sigma_oo)?;
    let quad = chol.quad_form(&blocks.delta_o);
    if !(quad < 1.0) {
        return Err(Error::InvalidCanonical { quad });
    }
    let lambda_dot_o = psd_inv_sqrt(&blocks.sigma_oo)? * &blocks.delta_o / (1.0 - quad).sqrt();
    Ok(ObservedMarginal {
        mu_o: blocks.mu_o,
        sigma_oo: blocks.sigma_oo,
        lambda_dot_o,
        alpha: params.alpha,
        beta: params.beta,
    })
}

/// Extended skew-normal law of `X^m` given `x^o` and `V = v`.
#[derive(Debug, Clone)]
pub struct ConditionalSnLaw {
    pub mu_c: DVector<f64>,
    pub sigma_c: DMatrix<f64>,
    pub lambda_c: DVector<f64>,
    /// Threshold before the `kappa^{-1/2}` scaling.
    pub lambda0_c: f64,
    pub kappa: f64,
}

impl ConditionalSnLaw {
    pub fn dim(&self) -> usize {
        self.mu_c.len()
    }

    /// The law as explicit extended skew-normal parameters
    /// `(mu_c, kappa Sigma_c, lambda_c, kappa^{-1/2} lambda0_c)`.
    pub fn to_msn(&self) -> Result<MsnParams> {
        MsnParams::extended(
            self.mu_c.clone(),
            &self.sigma_c * self.kappa,
            self.lambda_c.clone(),
            self.lambda0_c / self.kappa.sqrt(),
        )
    }

    fn threshold_and_direction(&self) -> Result<(f64, DVector<f64>)> {
        let scale = &self.sigma_c * self.kappa;
        let norm = (1.0 + self.lambda_c.norm_squared()).sqrt();
        let tau = self.lambda0_c / self.kappa.sqrt() / norm;
        let dir = psd_sqrt(&scale)? * &self.lambda_c / norm;
        Ok((tau, dir))
    }

    /// `E[X^m | x^o, V]`.
    pub fn mean(&self) -> Result<DVector<f64>> {
        if self.dim() == 0 {
            return Ok(DVector::zeros(0));
        }
        let (tau, dir) = self.threshold_and_direction()?;
        Ok(&self.mu_c + dir * mills_ratio(tau))
    }

    /// `Cov[X^m | x^o, V]`.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        if self.dim() == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let (tau, dir) = self.threshold_and_direction()?;
        let w = mills_ratio(tau);
        Ok(&self.sigma_c * self.kappa - &dir * dir.transpose() * (w * (tau + w)))
    }
}

pub fn conditional_sn(
    params: &CmsnParams,
    pattern: &MissPattern,
    x_o: &DVector<f64>,
    v: bool,
) -> Result<ConditionalSnLaw> {
    check_pattern(params, pattern)?;
    check_observed(pattern, x_o)?;
    let kappa = if v { 1.0 } else { params.beta };
    if !pattern.has_missing() {
        return Ok(ConditionalSnLaw {
            mu_c: DVector::zeros(0),
            sigma_c: DMatrix::zeros(0, 0),
            lambda_c: DVector::zeros(0),
            lambda0_c: 0.0,
            kappa,
        });
    }
    let canon = params.canonical()?;
    let b = PartitionedParams::new(&canon, pattern);
    let chol_oo = Cholesky::new(&b.sigma_oo)?;
    let full_quad = Cholesky::new(&params.msn.sigma)?.quad_form(&canon.delta);
    if !(full_quad < 1.0) {
        return Err(Error::InvalidCanonical { quad: full_quad });
    }
    let scale = (1.0 - full_quad).sqrt();
    let centered = x_o - &b.mu_o;
    let reg = chol_oo.solve_mat(&b.sigma_om).transpose(); // Sigma_mo Sigma_oo^-1
    let mu_c = &b.mu_m + &reg * &centered;
    let sigma_c = &b.sigma_mm - &reg * &b.sigma_om;
    let lambda0_c = b.delta_o.dot(&chol_oo.solve(&centered)) / scale;
    let lambda_c = psd_inv_sqrt(&sigma_c)? * (&b.delta_m - &reg * &b.delta_o) / scale;
    Ok(ConditionalSnLaw { mu_c, sigma_c, lambda_c, lambda0_c, kappa })
}

/// Normal law of `X^m` given `x^o`, `T = t` and `V = v`:
/// `N(m_c + kappa^{1/2} t gamma_c, kappa Omega_c)`.
#[derive(Debug, Clone)]
pub struct ConditionalNormalLaw {
    pub m_c: DVector<f64>,
    pub gamma_c: DVector<f64>,
    pub omega_c: DMatrix<f64>,
}

impl ConditionalNormalLaw {
    pub fn dim(&self) -> usize {
        self.m_c.len()
    }

    pub fn mean_given(&self, t: f64, kappa: f64) -> DVector<f64> {
        &self.m_c + &self.gamma_c * (kappa.sqrt() * t)
    }
}

pub fn conditional_normal(
    params: &CmsnParams,
    pattern: &MissPattern,
    x_o: &DVector<f64>,
) -> Result<ConditionalNormalLaw> {
    check_pattern(params, pattern)?;
    check_observed(pattern, x_o)?;
    let canon = params.canonical()?;
    let blocks = PatternBlocks::new(&canon, pattern)?;
    Ok(ConditionalNormalLaw {
        m_c: blocks.m_c(&(x_o - &blocks.mu_o)),
        gamma_c: blocks.gamma_c.clone(),
        omega_c: blocks.omega_c.clone(),
    })
}

fn check_pattern(params: &CmsnParams, pattern: &MissPattern) -> Result<()> {
    if pattern.p != params.dim() {
        return Err(Error::Dimension(format!("pattern over {} coordinates, model has {}", pattern.p, params.dim())));
    }
    Ok(())
}

fn check_observed(pattern: &MissPattern, x_o: &DVector<f64>) -> Result<()> {
    if x_o.len() != pattern.n_observed() {
        return Err(Error::Dimension(format!("x_o has {} entries, pattern observes {}", x_o.len(), pattern.n_observed())));
    }
    Ok(())
}

/// Everything the E-step needs for one (pattern, component) pair,
/// factorized once and reused for every row sharing the pattern.
#[derive(Debug, Clone)]
pub struct PatternBlocks {
    pub mu_o: DVector<f64>,
    pub mu_m: DVector<f64>,
    sigma_oo_inv: DMatrix<f64>,
    sigma_oo_log_det: f64,
    /// `Omega_oo^{-1} Delta_o`.
    omega_inv_delta_o: DVector<f64>,
    /// Posterior scale of `T` given `x^o` (good component).
    pub sigma_t: f64,
    /// `Omega_mo Omega_oo^{-1}`.
    reg: DMatrix<f64>,
    pub gamma_c: DVector<f64>,
    pub omega_c: DMatrix<f64>,
}

impl PatternBlocks {
    pub fn new(canon: &CanonicalParams, pattern: &MissPattern) -> Result<Self> {
        let b = PartitionedParams::new(canon, pattern);
        let omega_chol = Cholesky::new(&b.omega_oo)?;
        let sigma_oo = Cholesky::new(&b.sigma_oo)?;
        let sigma_oo_inv = sigma_oo.inverse();
        let sigma_oo_log_det = sigma_oo.log_det();
        let omega_inv_delta_o = omega_chol.solve(&b.delta_o);
        let sigma_t = (1.0 / (1.0 + b.delta_o.dot(&omega_inv_delta_o))).sqrt();
        let (reg, gamma_c, omega_c) = if pattern.has_missing() {
            let reg = omega_chol.solve_mat(&b.omega_om).transpose();
            let gamma_c = &b.delta_m - &reg * &b.delta_o;
            let omega_c = &b.omega_mm - &reg * &b.omega_om;
            (reg, gamma_c, omega_c)
        } else {
            (DMatrix::zeros(0, b.mu_o.len()), DVector::zeros(0), DMatrix::zeros(0, 0))
        };
        Ok(Self {
            mu_o: b.mu_o,
            mu_m: b.mu_m,
            sigma_oo_inv,
            sigma_oo_log_det,
            omega_inv_delta_o,
            sigma_t,
            reg,
            gamma_c,
            omega_c,
        })
    }

    pub fn n_observed(&self) -> usize {
        self.mu_o.len()
    }

    /// Posterior location of `T` (good component) and the skew argument
    /// `A = lambda_dot_o' Sigma_oo^{-1/2} (x^o - mu_o)`.
    pub fn t_location(&self, centered: &DVector<f64>) -> (f64, f64) {
        let s = self.omega_inv_delta_o.dot(centered);
        let mu_t = self.sigma_t * self.sigma_t * s;
        (mu_t, self.sigma_t * s)
    }

    /// `ln f_MSN(x^o; mu_o, kappa Sigma_oo, lambda_dot_o)` from the
    /// centered observation and the skew argument `A`.
    pub fn log_msn(&self, centered: &DVector<f64>, skew_arg: f64, kappa: f64) -> f64 {
        let po = self.n_observed() as f64;
        let n = centered.len();
        let mut quad = 0.0;
        for a in 0..n {
            let mut r = 0.0;
            for b in 0..n {
                r += self.sigma_oo_inv[(a, b)] * centered[b];
            }
            quad += centered[a] * r;
        }
        std::f64::consts::LN_2 + po * LN_INV_SQRT_2PI
            - 0.5 * (self.sigma_oo_log_det + po * kappa.ln())
            - 0.5 * quad / kappa
            + log_norm_cdf(skew_arg / kappa.sqrt())
    }

    /// `m_c = mu_m + Omega_mo Omega_oo^{-1} (x^o - mu_o)`.
    pub fn m_c(&self, centered: &DVector<f64>) -> DVector<f64> {
        &self.mu_m + &self.reg * centered
    }
}
