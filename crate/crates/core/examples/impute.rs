//! Mask cells at random, refit and fill them back in.

use fmcmsn::sim::{generate_part_a, inject_mar, Case, Proximity};
use fmcmsn::{fit, FitConfig};

fn main() -> fmcmsn::Result<()> {
    let (full, _) = generate_part_a(Case::Msn, 400, Proximity::Far, 21)?;
    let (data, _) = inject_mar(&full, 0.3, 8)?;
    println!("{} of {} rows have a missing cell", data.incomplete_rows(), data.n());

    let result = fit(&data, &FitConfig::new(2).with_seed(2))?;
    let filled = result.impute(&data)?;
    let naive = data.mean_imputed();

    let (mut se_model, mut se_mean, mut cells) = (0.0, 0.0, 0);
    for i in 0..data.n() {
        for j in 0..data.p() {
            if !data.is_observed(i, j) {
                let truth = full.get(i, j).unwrap();
                se_model += (filled[(i, j)] - truth).powi(2);
                se_mean += (naive[(i, j)] - truth).powi(2);
                cells += 1;
            }
        }
    }
    let n = cells as f64;
    println!("{cells} imputed cells: RMSE {:.3} (column means give {:.3})", (se_model / n).sqrt(), (se_mean / n).sqrt());
    Ok(())
}
