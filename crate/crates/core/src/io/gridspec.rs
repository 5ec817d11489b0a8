//! `key = value` grid specification files and grid result tables.
//!
//! ```text
//! # Part A, case (d)
//! part = A
//! case = d
//! n = 300
//! proximity = far
//! missing_fractions = 0, 0.2, 0.4
//! replicates = 10
//! seed = 1
//! configs = FMCMSN, FMCMN
//! ```
//!
//! `part`, `case` and `n` are required. Defaults: `proximity = far`,
//! `missing_fractions = 0`, `replicates = 10`, `seed = 0`, `starts = 5`,
//! all three configs. `tol` and `max_iter` override the fit defaults.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use csv::WriterBuilder;

use crate::error::{Error, Result};
use crate::fit::DEFAULT_STARTS;
use crate::io::csv::format_f64;
use crate::sim::{default_configs, CellSummary, NamedConfig, Proximity, RunRow, ScenarioSpec};

const KEYS: [&str; 11] =
    ["part", "case", "n", "proximity", "missing_fractions", "replicates", "seed", "starts", "configs", "tol", "max_iter"];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub scenario: ScenarioSpec,
    pub configs: Vec<NamedConfig>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidParameter(format!("grid spec: cannot parse {key} = {value:?}")))
}

pub fn parse_grid_spec(text: &str) -> Result<GridSpec> {
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("grid spec line {}: expected key = value", lineno + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::InvalidParameter(format!("grid spec line {}: unknown key {k:?}", lineno + 1)));
        }
        if kv.insert(k, v.trim()).is_some() {
            return Err(Error::InvalidParameter(format!("grid spec line {}: duplicate key {k:?}", lineno + 1)));
        }
    }
    let required = |k: &str| kv.get(k).copied().ok_or_else(|| Error::InvalidParameter(format!("grid spec: missing {k}")));
    let list = |k: &str| -> Vec<&str> { kv.get(k).map_or(Vec::new(), |v| v.split(',').map(str::trim).collect()) };
    let scenario = ScenarioSpec {
        part: required("part")?.parse()?,
        case: required("case")?.parse()?,
        n: parse("n", required("n")?)?,
        proximity: kv.get("proximity").map_or(Ok(Proximity::Far), |v| v.parse())?,
        missing_fractions: match list("missing_fractions") {
            v if v.is_empty() => vec![0.0],
            v => v.into_iter().map(|x| parse("missing_fractions", x)).collect::<Result<_>>()?,
        },
        replicates: kv.get("replicates").map_or(Ok(10), |v| parse("replicates", v))?,
        seed: kv.get("seed").map_or(Ok(0), |v| parse("seed", v))?,
    };
    scenario.validate()?;
    let starts = kv.get("starts").map_or(Ok(DEFAULT_STARTS), |v| parse("starts", v))?;
    let mut configs = default_configs(scenario.clusters(), starts);
    let wanted = list("configs");
    if !wanted.is_empty() {
        for w in &wanted {
            if !configs.iter().any(|c| c.name.eq_ignore_ascii_case(w)) {
                return Err(Error::InvalidParameter(format!("grid spec: unknown config {w:?}")));
            }
        }
        configs.retain(|c| wanted.iter().any(|w| c.name.eq_ignore_ascii_case(w)));
    }
    for c in &mut configs {
        if let Some(v) = kv.get("tol") {
            c.config.tol = parse("tol", v)?;
        }
        if let Some(v) = kv.get("max_iter") {
            c.config.max_iter = parse("max_iter", v)?;
        }
    }
    Ok(GridSpec { scenario, configs })
}

pub fn read_grid_spec(path: impl AsRef<Path>) -> Result<GridSpec> {
    parse_grid_spec(&std::fs::read_to_string(path)?)
}

fn opt_f(x: Option<f64>) -> String {
    x.map_or_else(String::new, format_f64)
}

/// One line per run; absent metrics are empty cells.
pub fn write_runs_to<W: Write>(writer: W, runs: &[RunRow]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record([
        "replicate", "cell", "missing_frac", "config", "ok", "reason", "ari", "accuracy", "tpr", "fpr", "loglik", "aic",
        "converged", "n_iters", "max_ll_drop",
    ])?;
    for r in runs {
        w.write_record([
            r.replicate.to_string(),
            r.cell.to_string(),
            r.missing_frac.to_string(),
            r.config.clone(),
            r.ok.to_string(),
            r.reason.clone().unwrap_or_default(),
            opt_f(r.ari),
            opt_f(r.accuracy),
            opt_f(r.tpr),
            opt_f(r.fpr),
            opt_f(r.loglik),
            opt_f(r.aic),
            r.converged.map_or_else(String::new, |c| c.to_string()),
            r.n_iters.map_or_else(String::new, |c| c.to_string()),
            opt_f(r.max_ll_drop),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cells_to<W: Write>(writer: W, cells: &[CellSummary]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record([
        "cell", "missing_frac", "config", "n_runs", "n_excluded", "mean_ari", "mean_accuracy", "mean_tpr", "mean_fpr",
    ])?;
    for c in cells {
        w.write_record([
            c.cell.to_string(),
            c.missing_frac.to_string(),
            c.config.clone(),
            c.n_runs.to_string(),
            c.n_excluded.to_string(),
            opt_f(c.mean_ari),
            opt_f(c.mean_accuracy),
            opt_f(c.mean_tpr),
            opt_f(c.mean_fpr),
        ])?;
    }
    w.flush()?;
    Ok(())
}
