//! Fit a two-cluster model to heavy-tailed data and score the partition.

use fmcmsn::sim::{ari, generate_part_a, Case, Proximity};
use fmcmsn::{fit, FitConfig};

fn main() -> fmcmsn::Result<()> {
    let (data, truth) = generate_part_a(Case::A, 400, Proximity::Far, 11)?;
    let result = fit(&data, &FitConfig::new(2).with_seed(3))?;

    println!("log-likelihood {:.3} after {} iterations (converged: {})", result.loglik, result.n_iters, result.converged);
    println!("AIC {:.2}, BIC {:.2}, {} free parameters", result.aic, result.bic, result.n_params);
    for (g, c) in result.model.components.iter().enumerate() {
        println!(
            "cluster {g}: pi {:.3} mu ({:.2}, {:.2}) lambda ({:.2}, {:.2}) alpha {:.3} beta {:.2}",
            c.pi, c.mu[0], c.mu[1], c.lambda[0], c.lambda[1], c.alpha, c.beta
        );
    }
    println!("ARI against the generating labels: {:.3}", ari(&result.labels, &truth.labels)?);
    Ok(())
}
