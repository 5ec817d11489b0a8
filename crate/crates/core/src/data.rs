use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An `n x p` numeric table with a per-cell observed mask.
///
/// Missing cells hold `NaN` in `values`; `mask[i * p + j]` is `true` when
/// cell `(i, j)` is observed. Equality ignores the placeholders.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    column_names: Option<Vec<String>>,
}

impl PartialEq for DataMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.p == other.p
            && self.mask == other.mask
            && self.column_names == other.column_names
            && self.values.iter().zip(&other.values).zip(&self.mask).all(|((a, b), &o)| !o || a == b)
    }
}

impl DataMatrix {
    /// Builds a matrix from row-major values and mask. Values at unobserved
    /// cells are ignored and replaced by `NaN`.
    pub fn new(n: usize, p: usize, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Dimension("data must have n >= 1 and p >= 1".into()));
        }
        if values.len() != n * p || mask.len() != n * p {
            return Err(Error::Dimension(format!(
                "expected {} cells, got {} values and {} mask entries",
                n * p,
                values.len(),
                mask.len()
            )));
        }
        for i in 0..n {
            let row_mask = &mask[i * p..(i + 1) * p];
            if !row_mask.iter().any(|&o| o) {
                return Err(Error::FullyMissingRow { row: i });
            }
            for j in 0..p {
                let k = i * p + j;
                if mask[k] {
                    if !values[k].is_finite() {
                        return Err(Error::Parse {
                            row: i,
                            col: j,
                            msg: format!("non-finite observed value {}", values[k]),
                        });
                    }
                } else {
                    values[k] = f64::NAN;
                }
            }
        }
        Ok(Self { n, p, values, mask, column_names: None })
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * p);
        let mut mask = Vec::with_capacity(n * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Dimension(format!("row {i} has {} cells, expected {p}", r.len())));
            }
            for c in r {
                values.push(c.unwrap_or(f64::NAN));
                mask.push(c.is_some());
            }
        }
        Self::new(n, p, values, mask)
    }

    /// Fully observed matrix with one row per observation.
    pub fn complete(x: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        let mut values = Vec::with_capacity(n * p);
        for i in 0..n {
            values.extend(x.row(i).iter());
        }
        Self::new(n, p, values, vec![true; n * p])
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::Dimension(format!("{} names for {} columns", names.len(), self.p)));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    /// Returns a copy with the given cells masked out (`mask` true = keep).
    pub fn with_mask(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return Err(Error::Dimension("mask shape mismatch".into()));
        }
        let keep: Vec<bool> = self.mask.iter().zip(mask).map(|(&a, &b)| a && b).collect();
        let mut out = Self::new(self.n, self.p, self.values.clone(), keep)?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn row_mask(&self, i: usize) -> &[bool] {
        &self.mask[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.p + j;
        self.mask[k].then_some(self.values[k])
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.p + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&o| o)
    }

    pub fn incomplete_rows(&self) -> usize {
        (0..self.n).filter(|&i| self.row_mask(i).iter().any(|&o| !o)).count()
    }

    /// Observed entries of row `i` at the given columns.
    pub fn gather(&self, i: usize, idx: &[usize]) -> DVector<f64> {
        let row = self.row(i);
        DVector::from_iterator(idx.len(), idx.iter().map(|&j| row[j]))
    }

    /// Column means over observed cells.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.p)
            .map(|j| {
                let (s, c) = (0..self.n)
                    .filter_map(|i| self.get(i, j))
                    .fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
                if c == 0 {
                    0.0
                } else {
                    s / c as f64
                }
            })
            .collect()
    }

    /// Dense copy with missing cells replaced by the column means.
    pub fn mean_imputed(&self) -> DMatrix<f64> {
        let means = self.column_means();
        DMatrix::from_fn(self.n, self.p, |i, j| self.get(i, j).unwrap_or(means[j]))
    }

    /// Dense copy; missing cells are `NaN`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.p, |i, j| self.values[i * self.p + j])
    }
}
