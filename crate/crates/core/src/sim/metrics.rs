use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn choose2(k: u64) -> f64 {
    (k as f64) * (k as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings. Returns 1 when both
/// labelings are a single cluster (or all singletons) and agree.
pub fn ari<A: Ord + Clone, B: Ord + Clone>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("labelings of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter("need at least two labels".into()));
    }
    let mut cells: BTreeMap<(A, B), u64> = BTreeMap::new();
    let mut rows: BTreeMap<A, u64> = BTreeMap::new();
    let mut cols: BTreeMap<B, u64> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *cells.entry((x.clone(), y.clone())).or_default() += 1;
        *rows.entry(x.clone()).or_default() += 1;
        *cols.entry(y.clone()).or_default() += 1;
    }
    let index: f64 = cells.values().map(|&c| choose2(c)).sum();
    let sa: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sb: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sa * sb / choose2(a.len() as u64);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Outlier-detection rates with "bad" as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub accuracy: f64,
    /// `None` when there are no bad points.
    pub tpr: Option<f64>,
    /// `None` when there are no good points.
    pub fpr: Option<f64>,
}

/// `flags_pred[i]` and `flags_true[i]` are `true` for bad points.
pub fn confusion_rates(flags_pred: &[bool], flags_true: &[bool]) -> Result<ConfusionRates> {
    if flags_pred.len() != flags_true.len() {
        return Err(Error::Dimension(format!("{} predictions for {} truths", flags_pred.len(), flags_true.len())));
    }
    if flags_true.is_empty() {
        return Err(Error::InvalidParameter("no rows".into()));
    }
    let (mut tp, mut fp, mut pos, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in flags_pred.iter().zip(flags_true) {
        if t {
            pos += 1;
            if p {
                tp += 1;
            }
        } else if p {
            fp += 1;
        }
        if p == t {
            correct += 1;
        }
    }
    let neg = flags_true.len() - pos;
    Ok(ConfusionRates {
        accuracy: correct as f64 / flags_true.len() as f64,
        tpr: (pos > 0).then(|| tp as f64 / pos as f64),
        fpr: (neg > 0).then(|| fp as f64 / neg as f64),
    })
}
