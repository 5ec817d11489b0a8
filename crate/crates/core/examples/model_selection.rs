//! Choose the number of clusters and the model family by AIC.

use fmcmsn::sim::{generate_part_a, Case, Proximity};
use fmcmsn::{fit, FitConfig};

fn main() -> fmcmsn::Result<()> {
    let (data, _) = generate_part_a(Case::B, 300, Proximity::Far, 17)?;
    let mut best: Option<(f64, String)> = None;
    for g in 1..=3 {
        let base = FitConfig::new(g).with_seed(4);
        for (name, cfg) in [("FMCMSN", base.clone()), ("FMCMN", base.clone().no_skew()), ("FMMSN", base.no_contamination())] {
            let r = fit(&data, &cfg)?;
            println!("G = {g} {name:<7} loglik {:10.3}  k {:3}  AIC {:10.3}", r.loglik, r.n_params, r.aic);
            if best.as_ref().is_none_or(|(a, _)| r.aic < *a) {
                best = Some((r.aic, format!("{name} with G = {g}")));
            }
        }
    }
    println!("lowest AIC: {}", best.unwrap().1);
    Ok(())
}
