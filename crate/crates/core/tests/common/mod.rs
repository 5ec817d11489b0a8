//! Independent reference computations shared by the integration tests.
//! Nothing in this file calls into the crate's density, partition or
//! E-step code; `cases` pairs these references with the crate.
#![allow(dead_code)]

pub mod cases;

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use fmcmsn::em::ClusterStats;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

pub fn uniform_vec(r: &mut ChaCha8Rng, p: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(p, |_, _| uniform(r, lo, hi))
}

/// Random SPD matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd(r: &mut ChaCha8Rng, p: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| normal(r));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&uniform_vec(r, p, lo, hi));
    let s = &q * d * q.transpose();
    (&s + s.transpose()) * 0.5
}

/// Random vector with norm up to `max_norm`.
pub fn random_lambda(r: &mut ChaCha8Rng, p: usize, max_norm: f64) -> DVector<f64> {
    let dir = DVector::from_fn(p, |_, _| normal(r)).normalize();
    dir * uniform(r, 0.0, max_norm)
}

pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(a.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| x.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// `(mu, Delta, Omega)` from `(mu, Sigma, lambda)`.
#[derive(Debug, Clone)]
pub struct Canon {
    pub mu: DVector<f64>,
    pub delta: DVector<f64>,
    pub omega: DMatrix<f64>,
    omega_l: DMatrix<f64>,
}

impl Canon {
    pub fn new(mu: &DVector<f64>, sigma: &DMatrix<f64>, lambda: &DVector<f64>) -> Self {
        let delta = sym_sqrt(sigma) * lambda / (1.0 + lambda.norm_squared()).sqrt();
        let omega = sigma - &delta * delta.transpose();
        let omega_l = omega.clone().cholesky().expect("omega is SPD").l();
        Self { mu: mu.clone(), delta, omega, omega_l }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `X = mu + sqrt(kappa) (Delta T + W)`, `T = |N(0,1)|`, `W ~ N(0, Omega)`.
    pub fn draw(&self, r: &mut ChaCha8Rng, kappa: f64) -> DVector<f64> {
        let t = normal(r).abs();
        self.draw_given_t(r, kappa, t)
    }

    pub fn draw_given_t(&self, r: &mut ChaCha8Rng, kappa: f64, t: f64) -> DVector<f64> {
        let w = &self.omega_l * DVector::from_fn(self.dim(), |_, _| normal(r));
        &self.mu + (&self.delta * t + w) * kappa.sqrt()
    }
}

/// Gaussian log density with an explicit inverse and log determinant.
pub struct Gauss {
    inv: DMatrix<f64>,
    log_norm: f64,
}

impl Gauss {
    pub fn new(cov: &DMatrix<f64>) -> Self {
        let chol = cov.clone().cholesky().expect("covariance is SPD");
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let p = cov.nrows() as f64;
        Self { inv: chol.inverse(), log_norm: -0.5 * (p * (2.0 * std::f64::consts::PI).ln() + log_det) }
    }

    pub fn log_pdf(&self, centered: &DVector<f64>) -> f64 {
        self.log_norm - 0.5 * centered.dot(&(&self.inv * centered))
    }
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n % 2 == 0);
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Posterior expectations of one CMSN component with a single missing
/// coordinate, by quadrature over `(T, X^m)` for each value of `V`.
#[derive(Debug, Clone, Copy)]
pub struct EStepOracle {
    /// Density of the observed block.
    pub f_obs: f64,
    pub v: f64,
    pub vt: f64,
    pub tmvt: f64,
    pub vt2: f64,
    pub t2mvt2: f64,
    pub e_vx: f64,
    pub et_vx: f64,
    pub e_vtx: f64,
    pub et_vtx: f64,
    pub e_vxx: f64,
    pub et_vxx: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    i0: f64,
    t: f64,
    t2: f64,
    x: f64,
    tx: f64,
    xx: f64,
}

const N_T: usize = 2000;
const N_X: usize = 2000;

fn integrate_kappa(c: &Canon, kappa: f64, miss: usize, x_o: &DVector<f64>) -> Moments {
    let p = c.dim();
    let obs: Vec<usize> = (0..p).filter(|&j| j != miss).collect();
    let joint = Gauss::new(&(&c.omega * kappa));
    let omega_oo = DMatrix::from_fn(obs.len(), obs.len(), |a, b| c.omega[(obs[a], obs[b])] * kappa);
    let marg = Gauss::new(&omega_oo);
    let rk = kappa.sqrt();
    let log_t = |t: f64| std::f64::consts::LN_2 - 0.5 * t * t - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let resid_o = |t: f64| DVector::from_fn(obs.len(), |a, _| x_o[a] - c.mu[obs[a]] - rk * c.delta[obs[a]] * t);
    // support of T from the x^m-marginal, used only to place the grid
    let scan: Vec<(f64, f64)> = (0..=6000)
        .map(|i| {
            let t = 60.0 * i as f64 / 6000.0;
            (t, log_t(t) + marg.log_pdf(&resid_o(t)))
        })
        .collect();
    let peak = scan.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let inside: Vec<f64> = scan.iter().filter(|s| s.1 > peak - 60.0).map(|s| s.0).collect();
    let t_lo = (inside[0] - 0.01).max(0.0);
    let t_hi = inside[inside.len() - 1] + 0.01;
    let ht = (t_hi - t_lo) / N_T as f64;
    let wt = simpson_weights(N_T, ht);
    let sd0 = (c.omega[(miss, miss)] * kappa).sqrt();
    let mut m = Moments::default();
    let mut x = DVector::zeros(p);
    for (a, &j) in obs.iter().enumerate() {
        x[j] = x_o[a];
    }
    for (it, &w_t) in wt.iter().enumerate() {
        let t = t_lo + it as f64 * ht;
        let q = (-2.0 * (marg.log_pdf(&resid_o(t)) - marg.log_norm)).max(0.0).sqrt();
        let centre = c.mu[miss] + rk * c.delta[miss] * t;
        let half = sd0 * (q + 12.0);
        let hx = 2.0 * half / N_X as f64;
        let wx = simpson_weights(N_X, hx);
        let lt = log_t(t);
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (ix, &w_x) in wx.iter().enumerate() {
            let xm = centre - half + ix as f64 * hx;
            x[miss] = xm;
            let resid = &x - &c.mu - &c.delta * (rk * t);
            let f = (lt + joint.log_pdf(&resid)).exp() * w_x;
            s0 += f;
            s1 += f * xm;
            s2 += f * xm * xm;
        }
        m.i0 += w_t * s0;
        m.t += w_t * t * s0;
        m.t2 += w_t * t * t * s0;
        m.x += w_t * s1;
        m.tx += w_t * t * s1;
        m.xx += w_t * s2;
    }
    m
}

pub fn estep_oracle(c: &Canon, alpha: f64, beta: f64, miss: usize, x_o: &DVector<f64>) -> EStepOracle {
    let g = integrate_kappa(c, 1.0, miss, x_o);
    let b = integrate_kappa(c, beta, miss, x_o);
    let f = alpha * g.i0 + (1.0 - alpha) * b.i0;
    let (wg, wb) = (alpha / f, (1.0 - alpha) / f);
    EStepOracle {
        f_obs: f,
        v: wg * g.i0,
        vt: wg * g.t,
        tmvt: wb * b.t,
        vt2: wg * g.t2,
        t2mvt2: wb * b.t2,
        e_vx: wg * g.x,
        et_vx: wb * b.x,
        e_vtx: wg * g.tx,
        et_vtx: wb * b.tx,
        e_vxx: wg * g.xx,
        et_vxx: wb * b.xx,
    }
}

/// `|a - b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Expected complete-data log-likelihood of one cluster, up to terms that
/// do not involve the parameters, written out from the cluster sums.
pub fn cluster_q(
    s: &ClusterStats,
    mu: &DVector<f64>,
    delta: &DVector<f64>,
    omega: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
) -> f64 {
    let p = mu.len() as f64;
    let Some(chol) = omega.clone().cholesky() else { return f64::NEG_INFINITY };
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let inv = chol.inverse();
    let rb = beta.sqrt();
    let md = mu * delta.transpose() + delta * mu.transpose();
    let good = &s.hh - &s.h * mu.transpose() - mu * s.h.transpose() + mu * mu.transpose() * s.sum_v
        - &s.u * delta.transpose()
        - delta * s.u.transpose()
        + &md * s.sum_vt
        + delta * delta.transpose() * s.sum_vt2;
    let bad = (&s.hhc - &s.hc * mu.transpose() - mu * s.hc.transpose() + mu * mu.transpose() * s.sum_bad) / beta
        - (&s.uc * delta.transpose() + delta * s.uc.transpose() - &md * s.sum_tmvt) / rb
        + delta * delta.transpose() * s.sum_t2mvt2;
    let trace = (&inv * (good + bad)).trace();
    let mix = if alpha >= 1.0 {
        0.0
    } else {
        s.sum_v * alpha.ln() + s.sum_bad * (1.0 - alpha).ln()
    };
    mix - 0.5 * s.n_g * log_det - 0.5 * p * s.sum_bad * beta.ln() - 0.5 * trace
}

/// Unconstrained coordinates: `mu`, `Delta`, Cholesky factor of `Omega`
/// with log diagonal, logit `alpha`.
pub fn unpack(theta: &[f64], p: usize) -> (DVector<f64>, DVector<f64>, DMatrix<f64>, f64) {
    let mu = DVector::from_column_slice(&theta[..p]);
    let delta = DVector::from_column_slice(&theta[p..2 * p]);
    let mut l = DMatrix::zeros(p, p);
    let mut k = 2 * p;
    for i in 0..p {
        for j in 0..=i {
            l[(i, j)] = if i == j { theta[k].exp() } else { theta[k] };
            k += 1;
        }
    }
    let alpha = 1.0 / (1.0 + (-theta[k]).exp());
    (mu, delta, &l * l.transpose(), alpha)
}

struct NegQ<'a> {
    s: &'a ClusterStats,
    beta: f64,
    p: usize,
}

impl CostFunction for NegQ<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        let (mu, delta, omega, alpha) = unpack(theta, self.p);
        let q = cluster_q(self.s, &mu, &delta, &omega, alpha, self.beta);
        Ok(if q.is_finite() { -q } else { f64::INFINITY })
    }
}

/// Nelder-Mead on `-cluster_q` from a crude start, restarted from the best
/// vertex until restarts stop improving. Returns the best `Q` found.
pub fn numeric_max_q(s: &ClusterStats, beta: f64) -> f64 {
    let p = s.h.len();
    let dim = 2 * p + p * (p + 1) / 2 + 1;
    let mut x0 = vec![0.0; dim];
    for j in 0..p {
        x0[j] = (s.h[j] + s.hc[j]) / s.n_g;
    }
    let mut best = f64::INFINITY;
    let mut step = 0.5;
    for _ in 0..60 {
        let mut simplex = vec![x0.clone()];
        for k in 0..dim {
            let mut v = x0.clone();
            v[k] += step;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex).with_sd_tolerance(1e-13).expect("valid tolerance");
        let res = Executor::new(NegQ { s, beta, p }, solver)
            .configure(|st| st.max_iters(40_000))
            .run()
            .expect("Nelder-Mead runs");
        let st = res.state();
        let cost = st.best_cost;
        x0 = st.best_param.clone().expect("has a best point");
        let gain = best - cost;
        best = best.min(cost);
        if gain.abs() < 1e-11 * best.abs().max(1.0) {
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    -best
}

struct NegQBeta<'a> {
    s: &'a ClusterStats,
    mu: &'a DVector<f64>,
    delta: &'a DVector<f64>,
    omega: &'a DMatrix<f64>,
    alpha: f64,
}

impl CostFunction for NegQBeta<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, log_beta: &f64) -> Result<f64, argmin::core::Error> {
        Ok(-cluster_q(self.s, self.mu, self.delta, self.omega, self.alpha, log_beta.exp()))
    }
}

/// Brent search for the `beta` maximizing `cluster_q` on `[floor, hi]`.
pub fn numeric_beta(
    s: &ClusterStats,
    mu: &DVector<f64>,
    delta: &DVector<f64>,
    omega: &DMatrix<f64>,
    alpha: f64,
    floor: f64,
    hi: f64,
) -> f64 {
    let cost = NegQBeta { s, mu, delta, omega, alpha };
    let solver = BrentOpt::new(floor.ln(), hi.ln()).set_tolerance(1e-12, 1e-14);
    let res = Executor::new(cost, solver).configure(|st| st.max_iters(500)).run().expect("Brent runs");
    let b = res.state().best_param.expect("has a best point").exp();
    let q = |x: f64| cluster_q(s, mu, delta, omega, alpha, x);
    [floor, hi].into_iter().fold(b, |best, e| if q(e) > q(best) { e } else { best })
}

struct NegPi(f64, f64);

impl CostFunction for NegPi {
    type Param = f64;
    type Output = f64;

    fn cost(&self, p: &f64) -> Result<f64, argmin::core::Error> {
        Ok(-(self.0 * p.ln() + self.1 * (1.0 - p).ln()))
    }
}

/// Brent search for the two-cluster weight maximizing `n1 ln pi + n2 ln (1 - pi)`.
pub fn numeric_pi(n1: f64, n2: f64) -> f64 {
    let solver = BrentOpt::new(1e-9, 1.0 - 1e-9).set_tolerance(1e-12, 1e-14);
    let res = Executor::new(NegPi(n1, n2), solver).configure(|st| st.max_iters(500)).run().expect("Brent runs");
    res.state().best_param.expect("has a best point")
}
