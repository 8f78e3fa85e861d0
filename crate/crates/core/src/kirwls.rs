//! The kernelized iteratively re-weighted least squares loop shared by the
//! robust mean and the robust (cross-)covariance operator.
//!
//! Both estimators minimise `Σ ζ(‖ψ_i − Σ_j w_j ψ_j‖)` over simplex weights,
//! where the feature vectors ψ_i only enter through their inner-product
//! matrix `M`. For the mean `M = K`; for the cross-covariance operator
//! `M = K̃_X ∘ K̃_Y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{numeric, Result};
use crate::loss::{LossSpec, RobustLoss};

/// Stopping rule for KIRWLS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KirwlsOptions {
    /// Stop once `|J_new − J_old| / J_old < tol` and every weight is within
    /// `10·tol` of `φ(e_i) / Σ φ(e)` at the current residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// If set, additionally require `‖w_new − w_old‖∞ < weight_tol` (default 1e-6).
    pub weight_tol: Option<f64>,
}

impl Default for KirwlsOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, weight_tol: Some(1e-6) }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub weights: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub loss: RobustLoss,
    pub weight_change: f64,
}

/// Residual norms `e_i = sqrt(M_ii − 2 (M w)_i + wᵀ M w)`.
///
/// Squared residuals in `[−1e-8·scale, 0)` are rounding noise and clamp to 0;
/// anything more negative means `M` is not PSD.
pub(crate) fn residuals(m: &DMatrix<f64>, w: &[f64]) -> Result<Vec<f64>> {
    let n = m.nrows();
    let wv = DVector::from_column_slice(w);
    let mw = m * &wv;
    let wmw = mw.dot(&wv);
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(wmw.abs()).max(f64::MIN_POSITIVE);
    (0..n)
        .map(|i| {
            let e2 = m[(i, i)] - 2.0 * mw[i] + wmw;
            if e2 >= 0.0 {
                Ok(e2.sqrt())
            } else if e2 >= -1e-8 * scale {
                Ok(0.0)
            } else {
                Err(numeric(format!(
                    "negative squared residual {e2:e} at index {i}; the Gram matrix is not PSD"
                )))
            }
        })
        .collect()
}

fn objective(loss: &RobustLoss, e: &[f64]) -> f64 {
    e.iter().map(|&t| loss.zeta_raw(t)).sum()
}

/// `‖w − φ(e)/Σφ(e)‖∞`, or infinity when every φ vanishes.
fn fixed_point_gap(loss: &RobustLoss, w: &[f64], e: &[f64]) -> f64 {
    let phi: Vec<f64> = e.iter().map(|&t| loss.phi_raw(t)).collect();
    let gamma: f64 = phi.iter().sum();
    if !(gamma > 0.0) {
        return f64::INFINITY;
    }
    w.iter().zip(&phi).map(|(a, p)| (a - p / gamma).abs()).fold(0.0, f64::max)
}

pub(crate) fn run(m: &DMatrix<f64>, spec: &LossSpec, opts: &KirwlsOptions) -> Result<Trace> {
    let n = m.nrows();
    if !(opts.tol > 0.0) {
        return Err(crate::error::Error::Input("tolerance must be positive".into()));
    }
    let mut w = vec![1.0 / n as f64; n];
    let mut e = residuals(m, &w)?;
    let loss = spec.resolve(&e)?;
    let mut j = objective(&loss, &e);
    let mut trace = vec![j];
    let mut converged = false;
    let mut iterations = 0;
    let mut weight_change = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let phi: Vec<f64> = e.iter().map(|&t| loss.phi_raw(t)).collect();
        let gamma: f64 = phi.iter().sum();
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(numeric(
                "all KIRWLS weights vanished; the loss rejects every point (try a larger tuning constant)",
            ));
        }
        let w_new: Vec<f64> = phi.iter().map(|p| p / gamma).collect();
        weight_change = w_new.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = w_new;
        e = residuals(m, &w)?;
        let j_new = objective(&loss, &e);
        trace.push(j_new);
        let rel = if j > 0.0 { (j - j_new).abs() / j } else { 0.0 };
        j = j_new;
        let weights_settled = opts.weight_tol.is_none_or(|t| weight_change < t);
        if rel < opts.tol && weights_settled && fixed_point_gap(&loss, &w, &e) <= 10.0 * opts.tol {
            converged = true;
            break;
        }
    }
    Ok(Trace {
        weights: w,
        residuals: e,
        objective_trace: trace,
        iterations,
        converged,
        loss,
        weight_change,
    })
}
