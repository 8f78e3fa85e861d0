//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{contract, numeric, Result};

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
pub(crate) fn sym_eigen_desc(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = symmetrize(a);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub(crate) fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// `A^p` for a symmetric positive definite matrix.
pub(crate) fn spd_power(a: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen_desc(a);
    let min = vals.min();
    if !(min > 0.0) {
        return Err(numeric(format!(
            "matrix is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| {
        vecs[(i, j)] * vals[j].powf(p)
    });
    Ok(symmetrize(&(scaled * vecs.transpose())))
}

/// Check that `w` is a probability vector of length `n` within `tol`.
pub(crate) fn check_simplex(w: &[f64], n: usize, tol: f64) -> Result<()> {
    if w.len() != n {
        return Err(contract(format!(
            "weight vector has length {}, expected {n}",
            w.len()
        )));
    }
    if w.iter().any(|&v| !v.is_finite() || v < -tol) {
        return Err(contract("weights must be finite and nonnegative"));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(contract(format!("weights sum to {s}, expected 1")));
    }
    Ok(())
}

pub(crate) fn check_square(k: &DMatrix<f64>, what: &str) -> Result<usize> {
    if k.nrows() != k.ncols() {
        return Err(contract(format!(
            "{what} must be square, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    Ok(k.nrows())
}

/// Median with the lower-median convention for even lengths. Empty input gives `None`.
pub(crate) fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Some(v[(v.len() - 1) / 2])
}

/// Ordinary median (mean of the two middle values for even lengths).
pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Sum after sorting, so the result does not depend on input order.
pub(crate) fn sorted_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.iter().sum()
}

/// Pearson correlation; `None` when fewer than two values or a zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n < 2 || b.len() != n {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}
