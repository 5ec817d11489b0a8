//! Observed-block marginal and the conditional law of the missing block.

use fmcmsn::distributions::CmsnParams;
use fmcmsn::partition::{conditional_sn, marginal_observed, MissPattern};
use nalgebra::{dmatrix, dvector};

fn main() -> fmcmsn::Result<()> {
    let params = CmsnParams::new(
        dvector![0.0, 0.0, 0.0],
        dmatrix![1.0, 0.5, 0.2; 0.5, 1.0, 0.4; 0.2, 0.4, 1.0],
        dvector![2.0, 0.0, -1.0],
        0.9,
        8.0,
    )?;
    // coordinate 1 missing
    let pattern = MissPattern::from_mask(&[true, false, true])?;

    let marg = marginal_observed(&params, &pattern)?;
    println!("observed marginal: mu_o = {:?}", marg.mu_o.as_slice());
    println!("                   lambda_o = {:?}", marg.lambda_dot_o.as_slice());

    let x_o = dvector![1.2, -0.4];
    for (v, name) in [(true, "good"), (false, "bad")] {
        let law = conditional_sn(&params, &pattern, &x_o, v)?;
        println!(
            "{name:>4}: X_m | x_o has mean {:.4}, sd {:.4} (lambda_c = {:.3}, lambda0_c = {:.3})",
            law.mean()?[0],
            law.covariance()?[(0, 0)].sqrt(),
            law.lambda_c[0],
            law.lambda0_c
        );
    }
    Ok(())
}
