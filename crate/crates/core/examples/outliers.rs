//! Flag bad points and compare with the generator's truth.

use fmcmsn::sim::{confusion_rates, generate_part_a, Case, Proximity};
use fmcmsn::{fit, FitConfig};

fn main() -> fmcmsn::Result<()> {
    for case in [Case::B, Case::D] {
        let (data, truth) = generate_part_a(case, 500, Proximity::Far, 5)?;
        let result = fit(&data, &FitConfig::new(2).with_seed(1))?;
        let rates = confusion_rates(&result.outlier_flags, &truth.bad_flags())?;
        let flagged = result.outlier_flags.iter().filter(|&&f| f).count();
        println!(
            "case {case}: flagged {flagged}, true bad {}, TPR {:.3}, FPR {:.3}",
            truth.bad_flags().iter().filter(|&&b| b).count(),
            rates.tpr.unwrap_or(f64::NAN),
            rates.fpr.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
