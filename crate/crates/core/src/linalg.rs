//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L L'`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factorizes a symmetric matrix. Fails with the 1-based index of the
    /// first non-positive leading minor.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("{}x{} is not square", n, a.ncols())));
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { minor: j + 1 });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `L^{-1} b`.
    pub fn whiten(&self, b: &DVector<f64>) -> DVector<f64> {
        self.l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `A^{-1} b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.whiten(b);
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `A^{-1} B`.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self
            .l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `b' A^{-1} b`.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        self.whiten(b).norm_squared()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.solve_mat(&DMatrix::identity(n, n))
    }
}

fn eigen_floor(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> Result<(f64, Vec<f64>)> {
    let max = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if !(max > 0.0) {
        return Err(Error::NegativeEigenvalue {
            value: eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    let floor = 1e-12 * max;
    let mut vals = Vec::with_capacity(eig.eigenvalues.len());
    for &v in eig.eigenvalues.iter() {
        if v < -1e-8 * max {
            return Err(Error::NegativeEigenvalue { value: v });
        }
        vals.push(v.max(floor));
    }
    Ok((max, vals))
}

fn rebuild(eig: &SymmetricEigen<f64, nalgebra::Dyn>, vals: &[f64]) -> DMatrix<f64> {
    let q = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * vals[j]);
    let out = &scaled * q.transpose();
    symmetrize(&out)
}

/// Symmetric square root via eigendecomposition. Eigenvalues below
/// `1e-12` of the largest are clipped to that floor.
pub fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let (_, vals) = eigen_floor(&eig)?;
    let roots: Vec<f64> = vals.iter().map(|v| v.sqrt()).collect();
    Ok(rebuild(&eig, &roots))
}

/// Symmetric inverse square root, same clipping rule as [`psd_sqrt`].
pub fn psd_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let (_, vals) = eigen_floor(&eig)?;
    let roots: Vec<f64> = vals.iter().map(|v| 1.0 / v.sqrt()).collect();
    Ok(rebuild(&eig, &roots))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Symmetrizes and raises every eigenvalue to at least `1e-10 * trace / p`.
/// Returns the repaired matrix and whether any eigenvalue was lifted.
pub fn repair_pd(a: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let s = symmetrize(a);
    let p = s.nrows();
    let floor = 1e-10 * s.trace().abs().max(f64::MIN_POSITIVE) / p as f64;
    let eig = SymmetricEigen::new(s.clone());
    if eig.eigenvalues.iter().all(|&v| v >= floor) {
        return (s, false);
    }
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(floor)).collect();
    (rebuild(&eig, &vals), true)
}

pub fn gather_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn gather_mat(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}
