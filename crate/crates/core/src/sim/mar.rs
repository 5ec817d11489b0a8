//! Missing-at-random injection.
//!
//! Every row first draws a candidate pattern independently of the data: a
//! uniformly sized, uniformly chosen nonempty strict subset of coordinates
//! to mask. The row's conditioning coordinate is the first coordinate the
//! pattern leaves observed. Rows are then drawn without replacement with
//! weight `1 / (1 + exp(-s_i))`, where `s_i` is the standardized value of
//! that coordinate. Selection depends only on values that stay observed,
//! so the mechanism is MAR; it is not MCAR because large conditioning
//! values are masked more often.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Result of [`inject_mar_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarInjection {
    pub data: DataMatrix,
    /// Row-major, `true` = observed.
    pub mask: Vec<bool>,
    /// Rows that received missing cells.
    pub selected: Vec<bool>,
    /// The coordinate whose value drove each row's selection weight.
    pub conditioning: Vec<usize>,
}

/// Masks cells in exactly `round(row_fraction * n)` rows. Returns the
/// masked data and its row-major observed mask.
pub fn inject_mar(data: &DataMatrix, row_fraction: f64, seed: u64) -> Result<(DataMatrix, Vec<bool>)> {
    let out = inject_mar_detailed(data, row_fraction, seed)?;
    Ok((out.data, out.mask))
}

pub fn inject_mar_detailed(data: &DataMatrix, row_fraction: f64, seed: u64) -> Result<MarInjection> {
    if !(0.0..=0.95).contains(&row_fraction) {
        return Err(Error::InvalidParameter(format!("row fraction {row_fraction} not in [0, 0.95]")));
    }
    let (n, p) = (data.n(), data.p());
    if p == 1 {
        return Err(Error::InvalidParameter("cannot mask cells of a one-column matrix and keep a cell observed".into()));
    }
    let k = (row_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let m = rng.random_range(1..p);
            let mut cols = sample(&mut rng, p, m).into_vec();
            cols.sort_unstable();
            cols
        })
        .collect();
    let conditioning: Vec<usize> =
        patterns.iter().map(|cols| (0..p).find(|j| !cols.contains(j)).expect("strict subset")).collect();
    let stats: Vec<(f64, f64)> = (0..p)
        .map(|j| {
            let obs: Vec<f64> = (0..n).filter_map(|i| data.get(i, j)).collect();
            let c = obs.len().max(1) as f64;
            let mean = obs.iter().sum::<f64>() / c;
            let sd = (obs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / c).sqrt();
            (mean, sd)
        })
        .collect();
    // Efraimidis-Spirakis keys ln(u) / w; the k largest are selected.
    let mut keys: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let j = conditioning[i];
            let (mean, sd) = stats[j];
            let s = match data.get(i, j) {
                Some(x) if sd > 0.0 => (x - mean) / sd,
                _ => 0.0,
            };
            let w = 1.0 / (1.0 + (-s).exp());
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (u.ln() / w, i)
        })
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut mask = data.mask().to_vec();
    let mut selected = vec![false; n];
    for &(_, i) in keys.iter().take(k) {
        selected[i] = true;
        for &j in &patterns[i] {
            mask[i * p + j] = false;
        }
    }
    let out = data.with_mask(&mask)?;
    let mask = out.mask().to_vec();
    Ok(MarInjection { data: out, mask, selected, conditioning })
}
