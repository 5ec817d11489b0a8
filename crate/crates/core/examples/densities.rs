//! Evaluate and sample the contaminated skew-normal law.

use fmcmsn::distributions::{cmsn_logpdf, msn_logpdf, sample_cmsn, CmsnParams, MsnParams};
use nalgebra::{dmatrix, dvector};

fn main() -> fmcmsn::Result<()> {
    let mu = dvector![0.0, 1.0];
    let sigma = dmatrix![1.0, 0.3; 0.3, 2.0];
    let lambda = dvector![3.0, -1.0];

    let msn = MsnParams::new(mu.clone(), sigma.clone(), lambda.clone())?;
    let cmsn = CmsnParams::new(mu, sigma, lambda, 0.9, 10.0)?;

    for x in [dvector![0.5, 1.0], dvector![4.0, -3.0], dvector![-2.0, 8.0]] {
        println!(
            "x = ({:5.1}, {:5.1})  log f_MSN = {:9.4}  log f_CMSN = {:9.4}",
            x[0],
            x[1],
            msn_logpdf(&x, &msn)?,
            cmsn_logpdf(&x, &cmsn)?
        );
    }

    let (draws, good) = sample_cmsn(&cmsn, 20_000, 42)?;
    let mean = draws.row_mean();
    let n_bad = good.iter().filter(|&&g| !g).count();
    println!("sample mean ({:.3}, {:.3}), bad draws {n_bad} of {}", mean[0], mean[1], draws.nrows());
    // E[X] = mu + sqrt(2/pi) * (alpha + (1 - alpha) sqrt(beta)) * Delta
    let canon = cmsn.canonical()?;
    let k = (2.0 / std::f64::consts::PI).sqrt() * (0.9 + 0.1 * 10f64.sqrt());
    let theory = &canon.mu + canon.delta * k;
    println!("theoretical mean ({:.3}, {:.3})", theory[0], theory[1]);
    Ok(())
}
