//! Multivariate skew-normal (MSN) and contaminated skew-normal (CMSN)
//! densities, the `(lambda, Sigma) <-> (Delta, Omega)` reparameterization,
//! and the stochastic-representation sampler.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{psd_inv_sqrt, psd_sqrt, Cholesky};
use crate::special::{log_add_exp, log_norm_cdf, LN_INV_SQRT_2PI};

/// Direct parameters of a (possibly extended) skew-normal law.
#[derive(Debug, Clone, PartialEq)]
pub struct MsnParams {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub lambda0: f64,
}

impl MsnParams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, lambda: DVector<f64>) -> Result<Self> {
        Self::extended(mu, sigma, lambda, 0.0)
    }

    pub fn extended(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        lambda: DVector<f64>,
        lambda0: f64,
    ) -> Result<Self> {
        let p = mu.len();
        if p == 0 || sigma.nrows() != p || sigma.ncols() != p || lambda.len() != p {
            return Err(Error::Dimension(format!(
                "mu {}, sigma {}x{}, lambda {}",
                p,
                sigma.nrows(),
                sigma.ncols(),
                lambda.len()
            )));
        }
        if !lambda0.is_finite() {
            return Err(Error::InvalidParameter("lambda0 must be finite".into()));
        }
        Cholesky::new(&sigma)?;
        Ok(Self { mu, sigma, lambda, lambda0 })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Contaminated skew-normal: good component `SN(mu, Sigma, lambda)` with
/// weight `alpha`, bad component `SN(mu, beta Sigma, lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmsnParams {
    pub msn: MsnParams,
    pub alpha: f64,
    pub beta: f64,
}

impl CmsnParams {
    pub fn new(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        lambda: DVector<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let msn = MsnParams::new(mu, sigma, lambda)?;
        Self::from_msn(msn, alpha, beta)
    }

    pub fn from_msn(msn: MsnParams, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 1]")));
        }
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta = {beta} must be >= 1")));
        }
        Ok(Self { msn, alpha, beta })
    }

    pub fn dim(&self) -> usize {
        self.msn.dim()
    }

    pub fn canonical(&self) -> Result<CanonicalParams> {
        CanonicalParams::from_direct(&self.msn.mu, &self.msn.sigma, &self.msn.lambda)
    }
}

/// Canonical parameterization `(mu, Delta, Omega)` with
/// `Sigma = Omega + Delta Delta'`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalParams {
    pub mu: DVector<f64>,
    pub delta: DVector<f64>,
    pub omega: DMatrix<f64>,
}

impl CanonicalParams {
    pub fn from_direct(mu: &DVector<f64>, sigma: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<Self> {
        let delta = delta_from_lambda(sigma, lambda)?;
        let omega = sigma - &delta * delta.transpose();
        Ok(Self { mu: mu.clone(), delta, omega })
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        &self.omega + &self.delta * self.delta.transpose()
    }

    pub fn lambda(&self) -> Result<DVector<f64>> {
        lambda_from_delta(&self.omega, &self.delta)
    }
}

/// `Delta = Sigma^{1/2} lambda / sqrt(1 + lambda' lambda)`.
pub fn delta_from_lambda(sigma: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<DVector<f64>> {
    if sigma.nrows() != lambda.len() {
        return Err(Error::Dimension("sigma and lambda disagree".into()));
    }
    Cholesky::new(sigma)?;
    let root = psd_sqrt(sigma)?;
    Ok(root * lambda / (1.0 + lambda.norm_squared()).sqrt())
}

/// Inverse of [`delta_from_lambda`] given `Omega = Sigma - Delta Delta'`.
pub fn lambda_from_delta(omega: &DMatrix<f64>, delta: &DVector<f64>) -> Result<DVector<f64>> {
    if omega.nrows() != delta.len() {
        return Err(Error::Dimension("omega and delta disagree".into()));
    }
    let sigma = omega + delta * delta.transpose();
    let chol = Cholesky::new(&sigma)?;
    let quad = chol.quad_form(delta);
    if !(quad < 1.0) {
        return Err(Error::InvalidCanonical { quad });
    }
    let inv_root = psd_inv_sqrt(&sigma)?;
    Ok(inv_root * delta / (1.0 - quad).sqrt())
}

/// Log density of `N(mu, sigma)` at `x`.
pub fn mvn_logpdf(x: &DVector<f64>, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    if x.len() != mu.len() || sigma.nrows() != x.len() {
        return Err(Error::Dimension(format!("x {}, mu {}, sigma {}", x.len(), mu.len(), sigma.nrows())));
    }
    let chol = Cholesky::new(sigma)?;
    Ok(mvn_logpdf_chol(&(x - mu), &chol))
}

/// Same as [`mvn_logpdf`] with a precomputed factor and centered argument.
pub fn mvn_logpdf_chol(centered: &DVector<f64>, chol: &Cholesky) -> f64 {
    let p = centered.len() as f64;
    p * LN_INV_SQRT_2PI - 0.5 * chol.log_det() - 0.5 * chol.quad_form(centered)
}

/// Log density of the extended skew-normal law
/// `phi_p(x; mu, Sigma) Phi(lambda0 + lambda' Sigma^{-1/2} (x - mu)) / Phi(lambda0 / sqrt(1 + lambda' lambda))`.
pub fn msn_logpdf(x: &DVector<f64>, params: &MsnParams) -> Result<f64> {
    let log_normal = mvn_logpdf(x, &params.mu, &params.sigma)?;
    let inv_root = psd_inv_sqrt(&params.sigma)?;
    let arg = params.lambda0 + params.lambda.dot(&(inv_root * (x - &params.mu)));
    let norm = params.lambda0 / (1.0 + params.lambda.norm_squared()).sqrt();
    Ok(log_normal + log_norm_cdf(arg) - log_norm_cdf(norm))
}

/// Log density of the contaminated skew-normal at `x`.
pub fn cmsn_logpdf(x: &DVector<f64>, params: &CmsnParams) -> Result<f64> {
    let good = msn_logpdf(x, &params.msn)?;
    if params.alpha >= 1.0 {
        return Ok(good);
    }
    let inflated = MsnParams {
        sigma: &params.msn.sigma * params.beta,
        ..params.msn.clone()
    };
    let bad = msn_logpdf(x, &inflated)?;
    Ok(log_add_exp(params.alpha.ln() + good, (1.0 - params.alpha).ln() + bad))
}

/// Precomputed pieces of the stochastic representation
/// `X = mu + sqrt(K) T Delta + sqrt(K) Sigma^{1/2} (I - delta delta')^{1/2} Y`.
#[derive(Debug, Clone)]
pub struct CmsnSampler {
    mu: DVector<f64>,
    delta: DVector<f64>,
    mix: DMatrix<f64>,
    alpha: f64,
    beta: f64,
}

impl CmsnSampler {
    pub fn new(params: &CmsnParams) -> Result<Self> {
        let p = params.dim();
        let lambda = &params.msn.lambda;
        let small_delta = lambda / (1.0 + lambda.norm_squared()).sqrt();
        let root = psd_sqrt(&params.msn.sigma)?;
        let inner = DMatrix::<f64>::identity(p, p) - &small_delta * small_delta.transpose();
        let mix = &root * psd_sqrt(&inner)?;
        let delta = &root * &small_delta;
        Ok(Self {
            mu: params.msn.mu.clone(),
            delta,
            mix,
            alpha: params.alpha,
            beta: params.beta,
        })
    }

    /// One draw and its good-point indicator.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, bool) {
        let p = self.mu.len();
        let good = if self.alpha >= 1.0 {
            true
        } else {
            Bernoulli::new(self.alpha).expect("alpha in (0,1)").sample(rng)
        };
        let k: f64 = if good { 1.0 } else { self.beta };
        let t: f64 = rng.sample::<f64, _>(StandardNormal).abs();
        let y = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.mu + (&self.delta * t + &self.mix * y) * k.sqrt();
        (x, good)
    }

    /// Draws the skew-normal deviation `T Delta + Sigma^{1/2}(I - delta delta')^{1/2} Y`
    /// around zero (no contamination), for composing other generators.
    pub fn draw_deviation<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let p = self.mu.len();
        let t: f64 = rng.sample::<f64, _>(StandardNormal).abs();
        let y = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.delta * t + &self.mix * y
    }

    pub fn location(&self) -> &DVector<f64> {
        &self.mu
    }
}

/// `n` draws (rows) from a CMSN law with their good-point flags.
pub fn sample_cmsn(params: &CmsnParams, n: usize, seed: u64) -> Result<(DMatrix<f64>, Vec<bool>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let sampler = CmsnSampler::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params.dim();
    let mut out = DMatrix::zeros(n, p);
    let mut flags = Vec::with_capacity(n);
    for i in 0..n {
        let (x, good) = sampler.draw(&mut rng);
        out.set_row(i, &x.transpose());
        flags.push(good);
    }
    Ok((out, flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_pdf;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn mvn_standard_normal_mode() {
        let l = mvn_logpdf(&v(&[0.0]), &v(&[0.0]), &DMatrix::identity(1, 1)).unwrap();
        assert!((l - (-0.918_938_533_204_672_8)).abs() < 1e-15);
    }

    #[test]
    fn mvn_at_mean_is_log_normalizer() {
        let s = m2(2.0, 1.0, 1.0, 2.0);
        let mu = v(&[0.3, -1.0]);
        let l = mvn_logpdf(&mu, &mu, &s).unwrap();
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * 3.0_f64.ln();
        assert!((l - expected).abs() < 1e-14);
    }

    #[test]
    fn mvn_matches_closed_form() {
        // inverse of [[2,1],[1,2]] is [[2,-1],[-1,2]]/3, det 3
        let x = v(&[1.0, 2.0]);
        let quad = (2.0 * 1.0 - 2.0 * 1.0 * 2.0 + 2.0 * 4.0) / 3.0;
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * 3.0_f64.ln() - 0.5 * quad;
        let l = mvn_logpdf(&x, &v(&[0.0, 0.0]), &m2(2.0, 1.0, 1.0, 2.0)).unwrap();
        assert!((l - expected).abs() < 1e-14);
        // reference value from an extended-precision evaluation
        assert!((l - (-3.387_183_210_743_400_3)).abs() < 1e-12);
    }

    #[test]
    fn mvn_rejects_non_pd() {
        let err = mvn_logpdf(&v(&[0.0, 0.0]), &v(&[0.0, 0.0]), &m2(1.0, 2.0, 2.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { minor: 2 }));
    }

    #[test]
    fn msn_scalar_value() {
        let p = MsnParams::new(v(&[0.0]), DMatrix::identity(1, 1), v(&[1.0])).unwrap();
        let l = msn_logpdf(&v(&[1.0]), &p).unwrap();
        // extended-precision value of 2 phi(1) Phi(1)
        assert!((l - 0.407_161_595_553_160_04_f64.ln()).abs() < 1e-13);
        let exact = (2.0 * norm_pdf(1.0) * crate::special::norm_cdf(1.0)).ln();
        assert!((l - exact).abs() < 1e-14);
    }

    #[test]
    fn msn_reductions() {
        let s = m2(2.0, 0.5, 0.5, 1.0);
        let mu = v(&[1.0, -1.0]);
        let sym = MsnParams::new(mu.clone(), s.clone(), v(&[0.0, 0.0])).unwrap();
        let skew = MsnParams::new(mu.clone(), s.clone(), v(&[3.0, -2.0])).unwrap();
        let x = v(&[0.2, 0.7]);
        assert_eq!(msn_logpdf(&x, &sym).unwrap(), mvn_logpdf(&x, &mu, &s).unwrap());
        assert_eq!(msn_logpdf(&mu, &skew).unwrap(), mvn_logpdf(&mu, &mu, &s).unwrap());
    }

    #[test]
    fn cmsn_two_term_value() {
        let c = CmsnParams::new(v(&[0.0]), DMatrix::identity(1, 1), v(&[0.0]), 0.5, 4.0).unwrap();
        let l = cmsn_logpdf(&v(&[0.0]), &c).unwrap();
        let expected = (0.5 * norm_pdf(0.0) + 0.5 * norm_pdf(0.0) / 2.0).ln();
        assert!((l - expected).abs() < 1e-14);
    }

    #[test]
    fn cmsn_degenerate_cases() {
        let s = m2(1.5, 0.2, 0.2, 0.8);
        let lam = v(&[1.0, 2.0]);
        let x = v(&[0.4, -0.3]);
        let msn = MsnParams::new(v(&[0.0, 0.0]), s.clone(), lam.clone()).unwrap();
        let base = msn_logpdf(&x, &msn).unwrap();
        let a1 = CmsnParams::from_msn(msn.clone(), 1.0, 7.0).unwrap();
        let b1 = CmsnParams::from_msn(msn, 0.3, 1.0).unwrap();
        assert!((cmsn_logpdf(&x, &a1).unwrap() - base).abs() < 1e-12);
        assert!((cmsn_logpdf(&x, &b1).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn delta_lambda_round_trip() {
        assert_eq!(delta_from_lambda(&DMatrix::identity(2, 2), &v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        let d = delta_from_lambda(&DMatrix::identity(1, 1), &v(&[1.0])).unwrap();
        assert!((d[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);

        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.4, 0.3, 1.0, 0.2, -0.4, 0.2, 1.5]);
        let lam = v(&[1.5, -3.0, 0.7]);
        let delta = delta_from_lambda(&s, &lam).unwrap();
        let omega = &s - &delta * delta.transpose();
        let back = lambda_from_delta(&omega, &delta).unwrap();
        assert!((back - lam).amax() < 1e-8);
    }

    #[test]
    fn lambda_from_delta_is_total_for_pd_omega() {
        // With Omega PD, Delta' Sigma^-1 Delta = d/(1+d) < 1 always.
        let omega = DMatrix::identity(1, 1) * 1e-6;
        let l = lambda_from_delta(&omega, &v(&[10.0])).unwrap();
        assert!(l[0] > 1e3);
    }

    #[test]
    fn sampler_good_flags_when_alpha_one() {
        let c = CmsnParams::new(v(&[0.0, 0.0]), DMatrix::identity(2, 2), v(&[1.0, 1.0]), 1.0, 5.0).unwrap();
        let (x, flags) = sample_cmsn(&c, 200, 3).unwrap();
        assert_eq!(x.nrows(), 200);
        assert!(flags.iter().all(|&g| g));
        let (x2, _) = sample_cmsn(&c, 200, 3).unwrap();
        assert_eq!(x, x2);
    }
}
