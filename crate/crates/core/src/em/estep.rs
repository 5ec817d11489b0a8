//! E-step: posterior cluster and good-point probabilities, moments of the
//! latent truncated normal `T`, and conditional moments of the missing block.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::distributions::CmsnParams;
use crate::error::{Error, Result};
use crate::model::{ComponentParams, MixtureModel};
use crate::partition::{MissPattern, PatternBlocks};
use crate::special::{log_add_exp, log_sum_exp, tn_moments};

/// Posterior moments of `T` split by the good/bad indicator:
/// `vt = E[V T]`, `t_minus_vt = E[(1-V) T]`, `vt2 = E[V T^2]`,
/// `t2_minus_vt2 = E[(1-V) T^2]`, all given `x^o` and the cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMoments {
    pub vt: f64,
    pub t_minus_vt: f64,
    pub vt2: f64,
    pub t2_minus_vt2: f64,
}

impl TMoments {
    pub fn t(&self) -> f64 {
        self.vt + self.t_minus_vt
    }

    pub fn t2(&self) -> f64 {
        self.vt2 + self.t2_minus_vt2
    }
}

/// Conditional moments of the missing block. Tilde quantities in the usual
/// notation carry the `et_` prefix and weight the bad component.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMoments {
    /// `E[V X^m]`
    pub e_vx: DVector<f64>,
    /// `E[(1-V) X^m]`
    pub et_vx: DVector<f64>,
    /// `E[V T X^m]`
    pub e_vtx: DVector<f64>,
    /// `E[(1-V) T X^m]`
    pub et_vtx: DVector<f64>,
    /// `E[V X^m X^m']`
    pub e_vxx: DMatrix<f64>,
    /// `E[(1-V) X^m X^m']`
    pub et_vxx: DMatrix<f64>,
}

/// Everything the E-step computes for one (row, cluster) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMoments {
    pub z: f64,
    pub v: f64,
    pub t: TMoments,
    /// `None` when the row is fully observed.
    pub cross: Option<CrossMoments>,
}

/// Full-length expectations for one (row, cluster) pair, with observed
/// coordinates plugged in: `h = E[V X]`, `hc = E[(1-V) X]`, `u = E[V T X]`,
/// `uc = E[(1-V) T X]`, `hh = E[V X X']`, `hhc = E[(1-V) X X']`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub h: DVector<f64>,
    pub hc: DVector<f64>,
    pub u: DVector<f64>,
    pub uc: DVector<f64>,
    pub hh: DMatrix<f64>,
    pub hhc: DMatrix<f64>,
}

/// Per (row, cluster) moments from one E-step at a fixed parameter value.
#[derive(Debug, Clone)]
pub struct EStepCache {
    n: usize,
    g: usize,
    rows: Vec<RowMoments>,
    row_loglik: Vec<f64>,
    pub loglik: f64,
}

impl EStepCache {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_clusters(&self) -> usize {
        self.g
    }

    pub fn get(&self, i: usize, g: usize) -> &RowMoments {
        &self.rows[i * self.g + g]
    }

    pub fn row(&self, i: usize) -> &[RowMoments] {
        &self.rows[i * self.g..(i + 1) * self.g]
    }

    pub fn row_loglik(&self) -> &[f64] {
        &self.row_loglik
    }

    pub fn z_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.g, |i, g| self.get(i, g).z)
    }

    pub fn v_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.g, |i, g| self.get(i, g).v)
    }
}

/// Row patterns and per-(pattern, cluster) factorizations for one iteration.
pub struct PatternCache {
    pub groups: Vec<(MissPattern, Vec<usize>)>,
    pub row_pattern: Vec<usize>,
    blocks: Vec<Vec<PatternBlocks>>,
}

impl PatternCache {
    pub fn new(data: &DataMatrix) -> Result<Self> {
        let groups = crate::partition::scan_patterns(data)?;
        let row_pattern = crate::partition::pattern_index(&groups, data.n());
        Ok(Self { groups, row_pattern, blocks: Vec::new() })
    }

    /// Refactorizes every block for the given parameters.
    pub fn refresh(&mut self, model: &MixtureModel) -> Result<()> {
        let canon: Vec<_> = model.components.iter().map(ComponentParams::canonical).collect();
        self.blocks = self
            .groups
            .iter()
            .map(|(pat, _)| canon.iter().map(|c| PatternBlocks::new(c, pat)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    pub fn pattern_of(&self, i: usize) -> &MissPattern {
        &self.groups[self.row_pattern[i]].0
    }

    pub fn blocks(&self, i: usize, g: usize) -> &PatternBlocks {
        &self.blocks[self.row_pattern[i]][g]
    }
}

/// Posterior pieces of one cluster at one row.
struct Local {
    log_cmsn: f64,
    v: f64,
    mu_t: f64,
}

fn local(blocks: &PatternBlocks, alpha: f64, beta: f64, centered: &DVector<f64>) -> Local {
    let (mu_t, a) = blocks.t_location(centered);
    let good = blocks.log_msn(centered, a, 1.0);
    if alpha >= 1.0 {
        return Local { log_cmsn: good, v: 1.0, mu_t };
    }
    let lg = alpha.ln() + good;
    let lb = (1.0 - alpha).ln() + blocks.log_msn(centered, a, beta);
    let log_cmsn = log_add_exp(lg, lb);
    let v = if log_cmsn == f64::NEG_INFINITY { alpha } else { (lg - log_cmsn).exp().min(1.0) };
    Local { log_cmsn, v, mu_t }
}

fn t_moments_from(mu_t: f64, sigma_t: f64, v: f64, beta: f64) -> TMoments {
    let (m1g, m2g) = tn_moments(mu_t, sigma_t);
    let (m1b, m2b) = tn_moments(mu_t / beta.sqrt(), sigma_t);
    TMoments { vt: v * m1g, t_minus_vt: (1.0 - v) * m1b, vt2: v * m2g, t2_minus_vt2: (1.0 - v) * m2b }
}

fn cross_from(blocks: &PatternBlocks, centered: &DVector<f64>, v: f64, t: &TMoments, beta: f64) -> CrossMoments {
    let m = blocks.m_c(centered);
    let gamma = &blocks.gamma_c;
    let sb = beta.sqrt();
    let q = m.len();
    let (bv, sbt, bt2) = (1.0 - v, sb * t.t_minus_vt, beta * t.t2_minus_vt2);
    let mut e_vxx = DMatrix::zeros(q, q);
    let mut et_vxx = DMatrix::zeros(q, q);
    for a in 0..q {
        for b in 0..q {
            let oc = blocks.omega_c[(a, b)];
            let mm = m[a] * m[b];
            let sym = m[a] * gamma[b] + gamma[a] * m[b];
            let gg = gamma[a] * gamma[b];
            e_vxx[(a, b)] = (oc + mm) * v + sym * t.vt + gg * t.vt2;
            et_vxx[(a, b)] = (oc * beta + mm) * bv + sym * sbt + gg * bt2;
        }
    }
    CrossMoments {
        e_vx: m.zip_map(gamma, |m, g| m * v + g * t.vt),
        et_vx: m.zip_map(gamma, |m, g| m * bv + g * sbt),
        e_vtx: m.zip_map(gamma, |m, g| m * t.vt + g * t.vt2),
        et_vtx: m.zip_map(gamma, |m, g| m * t.t_minus_vt + g * (sb * t.t2_minus_vt2)),
        e_vxx,
        et_vxx,
    }
}

/// E-step for one row given the per-cluster blocks of its pattern.
fn row_e_step(
    model: &MixtureModel,
    blocks: &[&PatternBlocks],
    x_o: &DVector<f64>,
    has_missing: bool,
    row: usize,
) -> Result<(Vec<RowMoments>, f64)> {
    let g = model.n_clusters();
    let mut locals = Vec::with_capacity(g);
    let mut joint = Vec::with_capacity(g);
    for (k, comp) in model.components.iter().enumerate() {
        let centered = x_o - &blocks[k].mu_o;
        let l = local(blocks[k], comp.alpha, comp.beta, &centered);
        joint.push(comp.pi.ln() + l.log_cmsn);
        locals.push((l, centered));
    }
    let total = log_sum_exp(&joint);
    if !total.is_finite() {
        return Err(Error::UnrepresentableRow { row });
    }
    let mut out = Vec::with_capacity(g);
    for (k, (l, centered)) in locals.into_iter().enumerate() {
        let comp = &model.components[k];
        let z = (joint[k] - total).exp();
        let t = t_moments_from(l.mu_t, blocks[k].sigma_t, l.v, comp.beta);
        let cross = has_missing.then(|| cross_from(blocks[k], &centered, l.v, &t, comp.beta));
        out.push(RowMoments { z, v: l.v, t, cross });
    }
    Ok((out, total))
}

/// Runs the E-step over every row. `cache` must be refreshed for `model`.
/// Rows are processed in parallel and collected in row order, so the
/// result does not depend on the number of worker threads.
pub fn e_step(data: &DataMatrix, model: &MixtureModel, cache: &PatternCache) -> Result<EStepCache> {
    let g = model.n_clusters();
    let per_row: Vec<(Vec<RowMoments>, f64)> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let pat = cache.pattern_of(i);
            let blocks: Vec<&PatternBlocks> = (0..g).map(|k| cache.blocks(i, k)).collect();
            row_e_step(model, &blocks, &data.gather(i, &pat.observed_idx), pat.has_missing(), i)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(data.n() * g);
    let mut row_loglik = Vec::with_capacity(data.n());
    let mut loglik = 0.0;
    for (r, l) in per_row {
        rows.extend(r);
        row_loglik.push(l);
        loglik += l;
    }
    Ok(EStepCache { n: data.n(), g, rows, row_loglik, loglik })
}

/// Observed-data log-likelihood, each row evaluated on its own observed
/// coordinates.
pub fn observed_loglik(data: &DataMatrix, model: &MixtureModel) -> Result<f64> {
    let mut cache = PatternCache::new(data)?;
    cache.refresh(model)?;
    let mut total = 0.0;
    for i in 0..data.n() {
        let pat = cache.pattern_of(i);
        let x_o = data.gather(i, &pat.observed_idx);
        let joint: Vec<f64> = model
            .components
            .iter()
            .enumerate()
            .map(|(k, comp)| {
                let b = cache.blocks(i, k);
                comp.pi.ln() + local(b, comp.alpha, comp.beta, &(&x_o - &b.mu_o)).log_cmsn
            })
            .collect();
        let l = log_sum_exp(&joint);
        if !l.is_finite() {
            return Err(Error::UnrepresentableRow { row: i });
        }
        total += l;
    }
    Ok(total)
}

/// Cluster responsibilities `z` and good-point probabilities `v` for one
/// observed vector.
pub fn responsibilities(x_o: &DVector<f64>, pattern: &MissPattern, model: &MixtureModel) -> Result<(Vec<f64>, Vec<f64>)> {
    let blocks = model
        .components
        .iter()
        .map(|c| PatternBlocks::new(&c.canonical(), pattern))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&PatternBlocks> = blocks.iter().collect();
    let (rows, _) = row_e_step(model, &refs, x_o, false, 0)?;
    Ok((rows.iter().map(|r| r.z).collect(), rows.iter().map(|r| r.v).collect()))
}

/// Moments of `T` for one component at posterior good-point probability `v`.
pub fn t_moments(x_o: &DVector<f64>, pattern: &MissPattern, comp: &CmsnParams, v: f64) -> Result<TMoments> {
    let blocks = PatternBlocks::new(&comp.canonical()?, pattern)?;
    let (mu_t, _) = blocks.t_location(&(x_o - &blocks.mu_o));
    Ok(t_moments_from(mu_t, blocks.sigma_t, v, comp.beta))
}

/// Conditional moments of the missing block; `None` when nothing is missing.
pub fn cross_moments(
    x_o: &DVector<f64>,
    pattern: &MissPattern,
    comp: &CmsnParams,
    v: f64,
    t: &TMoments,
) -> Result<Option<CrossMoments>> {
    if !pattern.has_missing() {
        return Ok(None);
    }
    let blocks = PatternBlocks::new(&comp.canonical()?, pattern)?;
    Ok(Some(cross_from(&blocks, &(x_o - &blocks.mu_o), v, t, comp.beta)))
}

/// Good-point posterior `v` of a single component (no cluster mixing).
pub fn good_probability(x_o: &DVector<f64>, pattern: &MissPattern, comp: &CmsnParams) -> Result<f64> {
    let blocks = PatternBlocks::new(&comp.canonical()?, pattern)?;
    Ok(local(&blocks, comp.alpha, comp.beta, &(x_o - &blocks.mu_o)).v)
}

/// Scatters observed values and missing-block moments into full-length
/// expectations.
pub fn assemble(row: &[f64], pattern: &MissPattern, m: &RowMoments) -> Assembled {
    let p = pattern.p;
    let (o, mi) = (&pattern.observed_idx, &pattern.missing_idx);
    let t = &m.t;
    let mut h = DVector::zeros(p);
    let mut hc = DVector::zeros(p);
    let mut u = DVector::zeros(p);
    let mut uc = DVector::zeros(p);
    for &j in o {
        h[j] = m.v * row[j];
        hc[j] = (1.0 - m.v) * row[j];
        u[j] = t.vt * row[j];
        uc[j] = t.t_minus_vt * row[j];
    }
    let mut hh = DMatrix::zeros(p, p);
    let mut hhc = DMatrix::zeros(p, p);
    for &a in o {
        for &b in o {
            let xx = row[a] * row[b];
            hh[(a, b)] = m.v * xx;
            hhc[(a, b)] = (1.0 - m.v) * xx;
        }
    }
    if let Some(c) = &m.cross {
        for (k, &a) in mi.iter().enumerate() {
            h[a] = c.e_vx[k];
            hc[a] = c.et_vx[k];
            u[a] = c.e_vtx[k];
            uc[a] = c.et_vtx[k];
            for &b in o {
                hh[(a, b)] = c.e_vx[k] * row[b];
                hh[(b, a)] = hh[(a, b)];
                hhc[(a, b)] = c.et_vx[k] * row[b];
                hhc[(b, a)] = hhc[(a, b)];
            }
            for (l, &b) in mi.iter().enumerate() {
                hh[(a, b)] = c.e_vxx[(k, l)];
                hhc[(a, b)] = c.et_vxx[(k, l)];
            }
        }
    }
    Assembled { h, hc, u, uc, hh, hhc }
}
