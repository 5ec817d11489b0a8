use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{CanonicalParams, CmsnParams, MsnParams};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// One cluster: weight `pi` and the CMSN parameters, kept in both the
/// direct `(mu, Sigma, lambda)` and canonical `(mu, Delta, Omega)` forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentParams {
    pub pi: f64,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub delta: DVector<f64>,
    pub omega: DMatrix<f64>,
}

impl ComponentParams {
    pub fn from_direct(
        pi: f64,
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        lambda: DVector<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let canon = CanonicalParams::from_direct(&mu, &sigma, &lambda)?;
        Ok(Self { pi, mu, sigma, lambda, alpha, beta, delta: canon.delta, omega: canon.omega })
    }

    pub fn from_canonical(
        pi: f64,
        mu: DVector<f64>,
        delta: DVector<f64>,
        omega: DMatrix<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        Cholesky::new(&omega)?;
        let canon = CanonicalParams { mu, delta, omega };
        let lambda = canon.lambda()?;
        let sigma = canon.sigma();
        Ok(Self {
            pi,
            mu: canon.mu,
            sigma,
            lambda,
            alpha,
            beta,
            delta: canon.delta,
            omega: canon.omega,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn canonical(&self) -> CanonicalParams {
        CanonicalParams { mu: self.mu.clone(), delta: self.delta.clone(), omega: self.omega.clone() }
    }

    pub fn cmsn(&self) -> Result<CmsnParams> {
        let msn = MsnParams::new(self.mu.clone(), self.sigma.clone(), self.lambda.clone())?;
        CmsnParams::from_msn(msn, self.alpha, self.beta)
    }
}

/// Which parameters a fit holds fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Constraints {
    /// `lambda = 0` for every cluster (contaminated normal mixture).
    pub no_skew: bool,
    /// `alpha = 1` for every cluster (skew-normal mixture, no bad points).
    pub no_contamination: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub components: Vec<ComponentParams>,
    pub constraints: Constraints,
    pub beta_floor: f64,
}

impl MixtureModel {
    pub fn new(components: Vec<ComponentParams>, constraints: Constraints, beta_floor: f64) -> Result<Self> {
        let p = components
            .first()
            .map(ComponentParams::dim)
            .ok_or_else(|| Error::InvalidParameter("model needs at least one component".into()))?;
        if components.iter().any(|c| c.dim() != p) {
            return Err(Error::Dimension("components disagree on dimension".into()));
        }
        let total: f64 = components.iter().map(|c| c.pi).sum();
        if (total - 1.0).abs() > 1e-8 || components.iter().any(|c| !(c.pi >= 0.0)) {
            return Err(Error::InvalidParameter(format!("mixing weights sum to {total}")));
        }
        Ok(Self { components, constraints, beta_floor })
    }

    pub fn n_clusters(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Number of free parameters under the model's constraints.
    pub fn n_params(&self) -> usize {
        n_free_params(self.n_clusters(), self.dim(), self.constraints)
    }

    /// Reorders components; `order[k]` is the old index of new component `k`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            components: order.iter().map(|&k| self.components[k].clone()).collect(),
            ..self.clone()
        }
    }
}

/// `(G - 1) + G (p + p(p+1)/2 + p + 2)`, less `p` per cluster without skewness
/// and less 2 per cluster without contamination.
pub fn n_free_params(g: usize, p: usize, constraints: Constraints) -> usize {
    let mut per = p + p * (p + 1) / 2 + p + 2;
    if constraints.no_skew {
        per -= p;
    }
    if constraints.no_contamination {
        per -= 2;
    }
    (g - 1) + g * per
}
