//! Alternative closed forms of the E-step expectations and the `beta`
//! update, kept beside the implemented forms so the oracle tests can show
//! where the two differ. Nothing in the fitting path calls this module.
//!
//! Notation: `A` is the skew argument of the observed marginal, `eta =
//! v W(A)`, `eta_b = (1 - v) W(A / sqrt(beta))`, `mu_c`, `Sigma_c` and
//! `Delta_c` describe the conditional skew-normal law of `X^m` given `x^o`,
//! and `m_c`, `gamma_c` the conditional normal law given `T` as well.

use nalgebra::DVector;

use crate::distributions::CmsnParams;
use crate::em::estep::CrossMoments;
use crate::em::mstep::ClusterStats;
use crate::error::Result;
use crate::linalg::{psd_sqrt, Cholesky};
use crate::model::ComponentParams;
use crate::partition::{conditional_normal, conditional_sn, MissPattern, PatternBlocks};
use crate::special::mills_ratio;

/// Alternative `vt`, `t - vt` and `t^2`, plus the good-point part of that
/// `t^2` (there is no separate `vt^2` formula).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltTMoments {
    pub vt: f64,
    pub t_minus_vt: f64,
    pub t2: f64,
    pub vt2: f64,
}

struct Scalars {
    mu_t: f64,
    sigma_t: f64,
    a: f64,
    eta: f64,
    eta_b: f64,
}

fn scalars(x_o: &DVector<f64>, pattern: &MissPattern, comp: &CmsnParams, v: f64) -> Result<Scalars> {
    let blocks = PatternBlocks::new(&comp.canonical()?, pattern)?;
    let (mu_t, a) = blocks.t_location(&(x_o - &blocks.mu_o));
    let rb = comp.beta.sqrt();
    Ok(Scalars {
        mu_t,
        sigma_t: blocks.sigma_t,
        a,
        eta: v * mills_ratio(a),
        eta_b: (1.0 - v) * mills_ratio(a / rb),
    })
}

pub fn t_moments(x_o: &DVector<f64>, pattern: &MissPattern, comp: &CmsnParams, v: f64) -> Result<AltTMoments> {
    let s = scalars(x_o, pattern, comp, v)?;
    let (b, rb) = (comp.beta, comp.beta.sqrt());
    let vt = v * (s.mu_t + s.sigma_t * mills_ratio(s.a));
    let t_minus_vt = (1.0 - v) * (s.mu_t / rb + s.sigma_t * mills_ratio(s.a / rb));
    let t2 = (v + (1.0 - v) / b) * s.mu_t * s.mu_t + 2.0 * (s.eta + s.eta_b / rb) * s.mu_t * s.sigma_t + s.sigma_t * s.sigma_t;
    let vt2 = v * s.mu_t * s.mu_t + 2.0 * s.eta * s.mu_t * s.sigma_t + v * s.sigma_t * s.sigma_t;
    Ok(AltTMoments { vt, t_minus_vt, t2, vt2 })
}

/// `None` when nothing is missing.
pub fn cross_moments(x_o: &DVector<f64>, pattern: &MissPattern, comp: &CmsnParams, v: f64) -> Result<Option<CrossMoments>> {
    if !pattern.has_missing() {
        return Ok(None);
    }
    let s = scalars(x_o, pattern, comp, v)?;
    let t = t_moments(x_o, pattern, comp, v)?;
    let (b, rb) = (comp.beta, comp.beta.sqrt());
    let law = conditional_sn(comp, pattern, x_o, true)?;
    let normal = conditional_normal(comp, pattern, x_o)?;
    let mu = &law.mu_c;
    let delta_c = psd_sqrt(&law.sigma_c)? * &law.lambda_c / (1.0 + law.lambda_c.norm_squared()).sqrt();
    let xi = mu * delta_c.transpose() + &delta_c * mu.transpose() - &delta_c * delta_c.transpose();
    let mm = mu * mu.transpose();
    Ok(Some(CrossMoments {
        e_vx: mu * v + &delta_c * s.eta,
        et_vx: mu * ((1.0 - v) / b) + &delta_c * (s.eta_b / rb),
        e_vtx: &normal.m_c * t.vt + &normal.gamma_c * t.vt2,
        et_vtx: &normal.m_c * t.vt + &normal.gamma_c * (t.vt2 * rb),
        e_vxx: &law.sigma_c * v + &mm * v + &xi * s.eta,
        et_vxx: &law.sigma_c * ((1.0 - v) * b) + &mm * (1.0 - v) + &xi * s.eta_b,
    }))
}

/// The alternative `beta` update for one cluster, with the trace term `sum z d`
/// and `D` assembled from the cluster sums and the step-1 parameters in
/// `comp`. `stats.sum_t2mvt2` plays the role of `sum z (t^2 - vt^2)`.
pub fn beta_update(stats: &ClusterStats, comp: &ComponentParams, floor: f64) -> Result<f64> {
    let p = comp.dim() as f64;
    let chol = Cholesky::new(&comp.omega)?;
    let (mu, delta) = (&comp.mu, &comp.delta);
    let one_minus_vt = stats.n_g - stats.sum_vt;
    let hm = &stats.hc * mu.transpose();
    let du = delta * stats.uc.transpose();
    let dm = delta * mu.transpose();
    let inner = &stats.hhc - &hm - hm.transpose() + mu * mu.transpose() * stats.sum_bad - &du - du.transpose()
        + (&dm + dm.transpose()) * one_minus_vt
        + delta * delta.transpose() * stats.sum_t2mvt2;
    let sum_d = chol.solve_mat(&inner).trace();
    let d_big = chol.solve(delta).dot(&(mu * stats.n_g - &stats.uc)) / (p * stats.sum_v);
    let root = d_big / 2.0 + ((d_big / 2.0).powi(2) + sum_d / stats.sum_v).sqrt();
    Ok(floor.max(root * root))
}
