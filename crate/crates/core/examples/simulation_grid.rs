//! A small replicate grid over missing-row fractions.

use fmcmsn::sim::{default_configs, run_grid, Case, Part, Proximity, ScenarioSpec};

fn main() -> fmcmsn::Result<()> {
    let spec = ScenarioSpec {
        part: Part::A,
        case: Case::D,
        n: 200,
        proximity: Proximity::Far,
        missing_fractions: vec![0.0, 0.2, 0.4],
        replicates: 2,
        seed: 99,
    };
    let results = run_grid(&spec, &default_configs(2, 3))?;
    println!("{:>5} {:<7} {:>6} {:>6} {:>6}", "frac", "config", "ARI", "TPR", "FPR");
    for c in &results.cells {
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:>5.2} {:<7} {:>6} {:>6} {:>6}",
            c.missing_frac,
            c.config,
            show(c.mean_ari),
            show(c.mean_tpr),
            show(c.mean_fpr)
        );
    }
    Ok(())
}
