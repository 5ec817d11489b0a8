//! Random E-step instances paired with the crate's expectations.

use nalgebra::DVector;
use rand::Rng;

use fmcmsn::distributions::{cmsn_logpdf, CmsnParams};
use fmcmsn::em::{self, alt_forms};
use fmcmsn::partition::{marginal_observed, MissPattern};

use super::{estep_oracle, rel_err, Canon, EStepOracle};

pub const REL: f64 = 1e-4;
pub const FLOOR: f64 = 1e-3;

pub struct Instance {
    pub params: CmsnParams,
    pub pattern: MissPattern,
    pub x_o: DVector<f64>,
    pub oracle: EStepOracle,
}

pub fn instance(seed: u64) -> Instance {
    let mut r = super::rng(seed);
    let p = 2 + (seed % 2) as usize;
    let mu = super::uniform_vec(&mut r, p, -1.0, 1.0);
    let sigma = super::random_spd(&mut r, p, 0.5, 2.0);
    let lambda = super::random_lambda(&mut r, p, 5.0);
    let alpha = super::uniform(&mut r, 0.6, 0.95);
    let beta = super::uniform(&mut r, 2.0, 20.0);
    let canon = Canon::new(&mu, &sigma, &lambda);
    let kappa = if seed % 3 == 0 { beta } else { 1.0 };
    let x = canon.draw(&mut r, kappa);
    let miss = (seed as usize / 2) % p;
    let mask: Vec<bool> = (0..p).map(|j| j != miss).collect();
    let pattern = MissPattern::from_mask(&mask).unwrap();
    let x_o = DVector::from_iterator(p - 1, (0..p).filter(|&j| j != miss).map(|j| x[j]));
    let oracle = estep_oracle(&canon, alpha, beta, miss, &x_o);
    let params = CmsnParams::new(mu, sigma, lambda, alpha, beta).unwrap();
    Instance { params, pattern, x_o, oracle }
}

/// Largest relative error of the implemented expectations on one instance.
pub fn implemented_error(inst: &Instance) -> Vec<(&'static str, f64)> {
    let (c, pat, x_o, o) = (&inst.params, &inst.pattern, &inst.x_o, &inst.oracle);
    let v = em::estep::good_probability(x_o, pat, c).unwrap();
    let t = em::t_moments(x_o, pat, c, v).unwrap();
    let x = em::cross_moments(x_o, pat, c, v, &t).unwrap().unwrap();
    let f = cmsn_logpdf(x_o, &marginal_observed(c, pat).unwrap().to_cmsn().unwrap()).unwrap().exp();
    vec![
        ("f_obs", rel_err(f, o.f_obs, 0.0)),
        ("v", rel_err(v, o.v, FLOOR)),
        ("vt", rel_err(t.vt, o.vt, FLOOR)),
        ("t-vt", rel_err(t.t_minus_vt, o.tmvt, FLOOR)),
        ("vt2", rel_err(t.vt2, o.vt2, FLOOR)),
        ("t2-vt2", rel_err(t.t2_minus_vt2, o.t2mvt2, FLOOR)),
        ("E_vx", rel_err(x.e_vx[0], o.e_vx, FLOOR)),
        ("Et_vx", rel_err(x.et_vx[0], o.et_vx, FLOOR)),
        ("E_vtx", rel_err(x.e_vtx[0], o.e_vtx, FLOOR)),
        ("Et_vtx", rel_err(x.et_vtx[0], o.et_vtx, FLOOR)),
        ("E_vxx", rel_err(x.e_vxx[(0, 0)], o.e_vxx, FLOOR)),
        ("Et_vxx", rel_err(x.et_vxx[(0, 0)], o.et_vxx, FLOOR)),
    ]
}

pub fn alternative_error(inst: &Instance) -> Vec<(&'static str, f64)> {
    let (c, pat, x_o, o) = (&inst.params, &inst.pattern, &inst.x_o, &inst.oracle);
    let v = em::estep::good_probability(x_o, pat, c).unwrap();
    let t = alt_forms::t_moments(x_o, pat, c, v).unwrap();
    let x = alt_forms::cross_moments(x_o, pat, c, v).unwrap().unwrap();
    vec![
        ("vt", rel_err(t.vt, o.vt, FLOOR)),
        ("t-vt", rel_err(t.t_minus_vt, o.tmvt, FLOOR)),
        ("t2", rel_err(t.t2, o.vt2 + o.t2mvt2, FLOOR)),
        ("E_vx", rel_err(x.e_vx[0], o.e_vx, FLOOR)),
        ("Et_vx", rel_err(x.et_vx[0], o.et_vx, FLOOR)),
        ("E_vtx", rel_err(x.e_vtx[0], o.e_vtx, FLOOR)),
        ("Et_vtx", rel_err(x.et_vtx[0], o.et_vtx, FLOOR)),
        ("E_vxx", rel_err(x.e_vxx[(0, 0)], o.e_vxx, FLOOR)),
        ("Et_vxx", rel_err(x.et_vxx[(0, 0)], o.et_vxx, FLOOR)),
    ]
}

/// E-step sums at a random current model on random incomplete data, and
/// the model they were computed at.
pub struct CmInstance {
    pub n: usize,
    pub model: fmcmsn::MixtureModel,
    pub stats: Vec<fmcmsn::em::ClusterStats>,
}

pub fn cm_instance(seed: u64) -> CmInstance {
    use fmcmsn::{ComponentParams, Constraints, DataMatrix, MixtureModel};
    let mut r = super::rng(seed);
    let p = 2;
    let g = 1 + (seed % 2) as usize;
    let n = 40 + 20 * g;
    let mut rows = Vec::with_capacity(n);
    let truth: Vec<Canon> = (0..g)
        .map(|k| {
            let mu = super::uniform_vec(&mut r, p, -1.0, 1.0) + DVector::from_element(p, 4.0 * k as f64);
            Canon::new(&mu, &super::random_spd(&mut r, p, 0.5, 2.0), &super::random_lambda(&mut r, p, 4.0))
        })
        .collect();
    for i in 0..n {
        let kappa = if r.random::<f64>() < 0.8 { 1.0 } else { 9.0 };
        let x = truth[i % g].draw(&mut r, kappa);
        let drop = (r.random::<f64>() < 0.25).then(|| r.random_range(0..p));
        rows.push((0..p).map(|j| (drop != Some(j)).then_some(x[j])).collect::<Vec<_>>());
    }
    let data = DataMatrix::from_rows(&rows).unwrap();
    let comps = (0..g)
        .map(|k| {
            let mu = &truth[k].mu + super::uniform_vec(&mut r, p, -0.5, 0.5);
            let sigma = super::random_spd(&mut r, p, 0.7, 1.5);
            let lambda = super::random_lambda(&mut r, p, 3.0);
            let alpha = super::uniform(&mut r, 0.6, 0.95);
            let beta = super::uniform(&mut r, 2.0, 15.0);
            ComponentParams::from_direct(1.0 / g as f64, mu, sigma, lambda, alpha, beta).unwrap()
        })
        .collect();
    let model = MixtureModel::new(comps, Constraints::default(), 1.001).unwrap();
    let mut patterns = em::PatternCache::new(&data).unwrap();
    patterns.refresh(&model).unwrap();
    let cache = em::e_step(&data, &model, &patterns).unwrap();
    let stats = em::accumulate(&data, &patterns, &cache);
    CmInstance { n, model, stats }
}

/// Largest |z|-score of windowed rejection-sampling moments against the
/// crate's conditional laws, and the smallest accepted sample.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalCheck {
    pub max_z: f64,
    pub min_accepted: usize,
}

/// Moments of the accepted `x^m` against a claimed mean and covariance.
fn z_scores(samples: &[DVector<f64>], mean: &DVector<f64>, cov: &nalgebra::DMatrix<f64>) -> f64 {
    let n = samples.len() as f64;
    let q = mean.len();
    let avg = samples.iter().fold(DVector::zeros(q), |a, x| a + x) / n;
    let mut worst: f64 = 0.0;
    for a in 0..q {
        let var = samples.iter().map(|x| (x[a] - avg[a]).powi(2)).sum::<f64>() / (n - 1.0);
        worst = worst.max((avg[a] - mean[a]).abs() / (var / n).sqrt());
        for b in 0..=a {
            let prods: Vec<f64> = samples.iter().map(|x| (x[a] - avg[a]) * (x[b] - avg[b])).collect();
            let m = prods.iter().sum::<f64>() / n;
            let v = prods.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1.0);
            worst = worst.max((m - cov[(a, b)]).abs() / (v / n).sqrt());
        }
    }
    worst
}

pub const WINDOW: f64 = 0.05;

/// Proposes at least `draws` points per law and keeps going until both
/// samples hold `min_accepted` points or `cap` proposals have been made.
pub fn conditional_check(seed: u64, draws: usize, min_accepted: usize, cap: usize) -> ConditionalCheck {
    use fmcmsn::partition::{conditional_normal, conditional_sn};
    let mut r = super::rng(seed);
    let p = 2 + (seed % 2) as usize;
    let n_obs = if p == 2 { 1 } else { 1 + (seed as usize / 2) % 2 };
    let mu = super::uniform_vec(&mut r, p, -1.0, 1.0);
    let sigma = super::random_spd(&mut r, p, 0.5, 2.0);
    let lambda = super::random_lambda(&mut r, p, 5.0);
    let beta = super::uniform(&mut r, 2.0, 10.0);
    let good = seed % 3 != 0;
    let kappa = if good { 1.0 } else { beta };
    let canon = Canon::new(&mu, &sigma, &lambda);
    let params = CmsnParams::new(mu, sigma, lambda, 0.8, beta).unwrap();
    let mut order: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    let mask: Vec<bool> = (0..p).map(|j| order[..n_obs].contains(&j)).collect();
    let pattern = MissPattern::from_mask(&mask).unwrap();
    let (obs, mis) = (pattern.observed_idx.clone(), pattern.missing_idx.clone());
    // x^o is drawn at the same T that the normal-law sample conditions on
    let t0 = super::normal(&mut r).abs();
    let x0 = canon.draw_given_t(&mut r, kappa, t0);
    let x_o = DVector::from_iterator(obs.len(), obs.iter().map(|&j| x0[j]));
    let half = WINDOW / 2.0;
    let near = |x: &DVector<f64>| obs.iter().enumerate().all(|(a, &j)| (x[j] - x_o[a]).abs() <= half);
    let pick = |x: &DVector<f64>| DVector::from_iterator(mis.len(), mis.iter().map(|&j| x[j]));
    let mut sn = Vec::new();
    let mut nl = Vec::new();
    let mut made = 0;
    while made < draws || ((sn.len() < min_accepted || nl.len() < min_accepted) && made < cap) {
        made += 1;
        let x = canon.draw(&mut r, kappa);
        if near(&x) {
            sn.push(pick(&x));
        }
        let x = canon.draw_given_t(&mut r, kappa, t0);
        if near(&x) {
            nl.push(pick(&x));
        }
    }
    let law = conditional_sn(&params, &pattern, &x_o, good).unwrap();
    let normal = conditional_normal(&params, &pattern, &x_o).unwrap();
    let z1 = z_scores(&sn, &law.mean().unwrap(), &law.covariance().unwrap());
    let z2 = z_scores(&nl, &normal.mean_given(t0, kappa), &(&normal.omega_c * kappa));
    ConditionalCheck { max_z: z1.max(z2), min_accepted: sn.len().min(nl.len()) }
}
