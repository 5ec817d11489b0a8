//! CM-steps: closed-form updates of `(pi, alpha, mu, Delta, Omega)` given
//! `beta`, then the update of `beta` given the rest.

use nalgebra::{DMatrix, DVector};

use crate::data::DataMatrix;
use crate::em::estep::{EStepCache, PatternCache, RowMoments};
use crate::partition::MissPattern;
use crate::error::{Error, Result};
use crate::linalg::{repair_pd, Cholesky};
use crate::model::{ComponentParams, Constraints, MixtureModel};

/// Upper end of the bracket searched when the closed-form `beta` update
/// has no real root.
pub const BETA_SEARCH_MAX: f64 = 1e4;

/// `z`-weighted sums of the E-step quantities for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    /// `sum z`
    pub n_g: f64,
    /// `sum z v`
    pub sum_v: f64,
    /// `sum z (1 - v)`
    pub sum_bad: f64,
    /// `sum z E[V T]`
    pub sum_vt: f64,
    /// `sum z E[(1-V) T]`
    pub sum_tmvt: f64,
    /// `sum z E[V T^2]`
    pub sum_vt2: f64,
    /// `sum z E[(1-V) T^2]`
    pub sum_t2mvt2: f64,
    pub h: DVector<f64>,
    pub hc: DVector<f64>,
    pub u: DVector<f64>,
    pub uc: DVector<f64>,
    pub hh: DMatrix<f64>,
    pub hhc: DMatrix<f64>,
}

impl ClusterStats {
    fn zeros(p: usize) -> Self {
        Self {
            n_g: 0.0,
            sum_v: 0.0,
            sum_bad: 0.0,
            sum_vt: 0.0,
            sum_tmvt: 0.0,
            sum_vt2: 0.0,
            sum_t2mvt2: 0.0,
            h: DVector::zeros(p),
            hc: DVector::zeros(p),
            u: DVector::zeros(p),
            uc: DVector::zeros(p),
            hh: DMatrix::zeros(p, p),
            hhc: DMatrix::zeros(p, p),
        }
    }
}

/// Reduces the E-step output in row order.
pub fn accumulate(data: &DataMatrix, patterns: &PatternCache, cache: &EStepCache) -> Vec<ClusterStats> {
    let p = data.p();
    let mut stats = vec![ClusterStats::zeros(p); cache.n_clusters()];
    for i in 0..data.n() {
        let pat = patterns.pattern_of(i);
        let row = data.row(i);
        for (g, m) in cache.row(i).iter().enumerate() {
            let z = m.z;
            let s = &mut stats[g];
            s.n_g += z;
            s.sum_v += z * m.v;
            s.sum_bad += z * (1.0 - m.v);
            s.sum_vt += z * m.t.vt;
            s.sum_tmvt += z * m.t.t_minus_vt;
            s.sum_vt2 += z * m.t.vt2;
            s.sum_t2mvt2 += z * m.t.t2_minus_vt2;
            add_assembled(s, z, row, pat, m);
        }
    }
    stats
}

/// Adds `z` times the assembled expectations of one row to `s`, without
/// materializing them.
fn add_assembled(s: &mut ClusterStats, z: f64, row: &[f64], pat: &MissPattern, m: &RowMoments) {
    let (o, mi) = (&pat.observed_idx, &pat.missing_idx);
    let (zv, zb) = (z * m.v, z * (1.0 - m.v));
    let (zvt, ztb) = (z * m.t.vt, z * m.t.t_minus_vt);
    for &a in o {
        let xa = row[a];
        s.h[a] += zv * xa;
        s.hc[a] += zb * xa;
        s.u[a] += zvt * xa;
        s.uc[a] += ztb * xa;
        for &b in o {
            let xx = xa * row[b];
            s.hh[(a, b)] += zv * xx;
            s.hhc[(a, b)] += zb * xx;
        }
    }
    let Some(c) = &m.cross else { return };
    for (k, &a) in mi.iter().enumerate() {
        s.h[a] += z * c.e_vx[k];
        s.hc[a] += z * c.et_vx[k];
        s.u[a] += z * c.e_vtx[k];
        s.uc[a] += z * c.et_vtx[k];
        for &b in o {
            let g = z * c.e_vx[k] * row[b];
            let gc = z * c.et_vx[k] * row[b];
            s.hh[(a, b)] += g;
            s.hh[(b, a)] += g;
            s.hhc[(a, b)] += gc;
            s.hhc[(b, a)] += gc;
        }
        for (l, &b) in mi.iter().enumerate() {
            s.hh[(a, b)] += z * c.e_vxx[(k, l)];
            s.hhc[(a, b)] += z * c.et_vxx[(k, l)];
        }
    }
}

/// Options shared by both CM-steps.
#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub constraints: Constraints,
    pub beta_floor: f64,
    pub alpha_min: Option<f64>,
}

/// Output of CM-step 1 for one cluster before it is packed into a model.
#[derive(Debug, Clone)]
pub struct LocationScale {
    pub mu: DVector<f64>,
    pub delta: DVector<f64>,
    pub omega: DMatrix<f64>,
    /// Whether `Omega` needed an eigenvalue lift.
    pub repaired: bool,
}

/// Closed-form maximizer of the location/skewness/scale part of `Q` for one
/// cluster at inflation `beta`.
pub fn location_scale_update(s: &ClusterStats, beta: f64, no_skew: bool, cluster: usize) -> Result<LocationScale> {
    let p = s.h.len();
    if !(s.n_g > p as f64) {
        return Err(Error::DegenerateCluster { cluster, size: s.n_g, p });
    }
    let rb = beta.sqrt();
    let a = s.sum_vt + s.sum_tmvt / rb;
    let b = s.sum_v + s.sum_bad / beta;
    let c = s.sum_vt2 + s.sum_t2mvt2;
    let hs = &s.h + &s.hc / beta;
    let us = &s.u + &s.uc / rb;
    let shb = &s.hh + &s.hhc / beta;
    let (mu, delta) = if no_skew {
        (&hs / b, DVector::zeros(p))
    } else {
        let det = b * c - a * a;
        if !(det > 1e-12 * b * c) {
            return Err(Error::SingularSystem { cluster, det });
        }
        ((&hs * c - &us * a) / det, (&us * b - &hs * a) / det)
    };
    let mh = &mu * hs.transpose();
    let du = &delta * us.transpose();
    let dm = &delta * mu.transpose();
    let m = &shb - &mh - mh.transpose() + &mu * mu.transpose() * b - &du - du.transpose()
        + (&dm + dm.transpose()) * a
        + &delta * delta.transpose() * c;
    let (omega, repaired) = repair_pd(&(m / s.n_g));
    Ok(LocationScale { mu, delta, omega, repaired })
}

/// CM-step 1: new weights, good-point proportions, locations, skewness
/// directions and scales; `beta` is carried over from `model`.
pub fn cm_step1(stats: &[ClusterStats], model: &MixtureModel, n: usize, opts: &StepOptions) -> Result<MixtureModel> {
    let mut components = Vec::with_capacity(stats.len());
    for (g, (s, old)) in stats.iter().zip(&model.components).enumerate() {
        let ls = location_scale_update(s, old.beta, opts.constraints.no_skew, g)?;
        let alpha = if opts.constraints.no_contamination {
            1.0
        } else {
            let raw = (s.sum_v / s.n_g).clamp(1e-8, 1.0);
            opts.alpha_min.map_or(raw, |lo| raw.max(lo))
        };
        components.push(ComponentParams::from_canonical(
            s.n_g / n as f64,
            ls.mu,
            ls.delta,
            ls.omega,
            alpha,
            old.beta,
        )?);
    }
    let total: f64 = components.iter().map(|c| c.pi).sum();
    for c in &mut components {
        c.pi /= total;
    }
    MixtureModel::new(components, model.constraints, model.beta_floor)
}

/// Pieces of the `beta` part of `Q`:
/// `Q(beta) = -(p N / 2) ln beta - M1 / (2 beta) + M2 / sqrt(beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaObjective {
    pub p: usize,
    /// `sum z (1 - v)`
    pub n_bad: f64,
    /// `sum z E[(1-V) (X - mu)' Omega^{-1} (X - mu)]`
    pub m1: f64,
    /// `sum z E[(1-V) T Delta' Omega^{-1} (X - mu)]`
    pub m2: f64,
}

impl BetaObjective {
    pub fn new(s: &ClusterStats, comp: &ComponentParams) -> Result<Self> {
        let chol = Cholesky::new(&comp.omega)?;
        let mu = &comp.mu;
        let hm = &s.hc * mu.transpose();
        let scatter = &s.hhc - &hm - hm.transpose() + mu * mu.transpose() * s.sum_bad;
        let m1 = chol.solve_mat(&scatter).trace();
        let m2 = chol.solve(&comp.delta).dot(&(&s.uc - mu * s.sum_tmvt));
        Ok(Self { p: s.h.len(), n_bad: s.sum_bad, m1, m2 })
    }

    pub fn value(&self, beta: f64) -> f64 {
        -0.5 * self.p as f64 * self.n_bad * beta.ln() - 0.5 * self.m1 / beta + self.m2 / beta.sqrt()
    }

    /// Maximizer over `beta >= floor`.
    pub fn argmax(&self, floor: f64) -> f64 {
        let pn = self.p as f64 * self.n_bad;
        if !(pn > 1e-12) {
            return floor;
        }
        let half = self.m2 / (2.0 * pn);
        let disc = half * half + self.m1 / pn;
        if disc < 0.0 || !disc.is_finite() {
            return golden_section_max(|b| self.value(b), floor, BETA_SEARCH_MAX.max(floor));
        }
        let root = -half + disc.sqrt();
        (root * root).max(floor)
    }
}

/// CM-step 2: the inflation parameters given the step-1 parameters.
pub fn cm_step2(stats: &[ClusterStats], model: &MixtureModel, opts: &StepOptions) -> Result<MixtureModel> {
    let mut out = model.clone();
    for (s, comp) in stats.iter().zip(out.components.iter_mut()) {
        comp.beta = if opts.constraints.no_contamination {
            opts.beta_floor
        } else {
            BetaObjective::new(s, comp)?.argmax(opts.beta_floor)
        };
    }
    Ok(out)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// carried out in `ln` space.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let g = |x: f64| f(x.exp());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let best = 0.5 * (a + b);
    let mut out = best.exp();
    for edge in [lo, hi] {
        if f(edge) > f(out) {
            out = edge;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_bad_mass_hits_floor() {
        let obj = BetaObjective { p: 2, n_bad: 0.0, m1: 0.0, m2: 0.0 };
        assert_eq!(obj.argmax(1.001), 1.001);
    }

    #[test]
    fn beta_root_matches_search() {
        let obj = BetaObjective { p: 2, n_bad: 10.0, m1: 400.0, m2: 3.0 };
        let closed = obj.argmax(1.001);
        let searched = golden_section_max(|b| obj.value(b), 1.001, 1e4);
        assert!((closed - searched).abs() / searched < 1e-6, "{closed} {searched}");
    }

    #[test]
    fn golden_section_on_parabola() {
        let x = golden_section_max(|b| -(b - 7.0).powi(2), 1.0, 100.0);
        assert!((x - 7.0).abs() < 1e-6);
    }

    #[test]
    fn mixing_weights_from_column_sums() {
        let p = 1;
        let mut a = ClusterStats::zeros(p);
        let mut b = ClusterStats::zeros(p);
        for (s, ng) in [(&mut a, 30.0), (&mut b, 70.0)] {
            s.n_g = ng;
            s.sum_v = ng;
            s.sum_vt = 0.0;
            s.sum_vt2 = ng;
            s.h[0] = ng;
            s.hh[(0, 0)] = 2.0 * ng;
        }
        let comp = ComponentParams::from_direct(
            0.5,
            DVector::from_vec(vec![0.0]),
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![0.0]),
            1.0,
            1.001,
        )
        .unwrap();
        let model = MixtureModel::new(
            vec![comp.clone(), comp],
            Constraints { no_skew: true, no_contamination: true },
            1.001,
        )
        .unwrap();
        let opts = StepOptions { constraints: model.constraints, beta_floor: 1.001, alpha_min: None };
        let next = cm_step1(&[a, b], &model, 100, &opts).unwrap();
        assert!((next.components[0].pi - 0.3).abs() < 1e-15);
        assert!((next.components[1].pi - 0.7).abs() < 1e-15);
        assert!((next.components[0].mu[0] - 1.0).abs() < 1e-15);
        assert!((next.components[0].omega[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cluster_is_reported() {
        let mut s = ClusterStats::zeros(2);
        s.n_g = 1.5;
        assert!(matches!(
            location_scale_update(&s, 2.0, false, 3),
            Err(Error::DegenerateCluster { cluster: 3, .. })
        ));
    }
}
