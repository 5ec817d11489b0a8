//! Write data to CSV, fit, save the result document and reload the model.

use fmcmsn::io::result::{data_digest, ResultDocument};
use fmcmsn::io::{read_csv, read_result, write_csv, write_result, RunManifest, DEFAULT_NA_TOKENS};
use fmcmsn::sim::{generate_part_a, inject_mar, Case, Proximity};
use fmcmsn::fit::posterior;
use fmcmsn::{fit, FitConfig};

fn main() -> fmcmsn::Result<()> {
    let dir = std::env::temp_dir().join("fmcmsn-example");
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join("data.csv");
    let json_path = dir.join("fit.json");

    let (full, _) = generate_part_a(Case::C, 250, Proximity::Far, 3)?;
    let (data, _) = inject_mar(&full, 0.2, 4)?;
    write_csv(&csv_path, &data.with_column_names(vec!["x1".into(), "x2".into()])?)?;

    let loaded = read_csv(&csv_path, &DEFAULT_NA_TOKENS)?;
    println!("read {} x {} from {}", loaded.n(), loaded.p(), csv_path.display());

    let cfg = FitConfig::new(2).with_seed(12);
    let result = fit(&loaded, &cfg)?;
    write_result(&json_path, &result, RunManifest::new("fit", cfg.seed, &cfg, data_digest(&loaded))?)?;

    let doc: ResultDocument = read_result(&json_path)?;
    let model = doc.to_model()?;
    let again = posterior(&loaded, &model)?;
    println!("saved loglik {:.6}, recomputed from the reloaded model {:.6}", result.loglik, again.loglik);
    Ok(())
}
