//! Robust kernel mean element.
//!
//! The robust mean `Σ w_i Φ(X_i)` minimises `Σ ζ(‖Φ(X_i) − f‖)` over the RKHS.
//! Its weights define the robust centering used by robust kernel CCA.
//!
//! ```
//! use nalgebra::DMatrix;
//! use rkcca::kernel::{gram, KernelSpec};
//! use rkcca::loss::LossSpec;
//! use rkcca::robust_mean::fit_robust_mean;
//! use rkcca::KirwlsOptions;
//!
//! let x = DMatrix::from_column_slice(5, 1, &[0.0, 0.1, -0.1, 0.05, 8.0]);
//! let k = gram(&KernelSpec::gaussian(1.0), &x).unwrap();
//! let fit = fit_robust_mean(&k, &LossSpec::huber_median(), &KirwlsOptions::default()).unwrap();
//! assert!(fit.weights[4] < 0.2);
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kirwls::{self, KirwlsOptions};
use crate::linalg::check_square;
use crate::loss::{LossSpec, RobustLoss};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustMeanFit {
    pub weights: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `J` at the uniform start followed by its value after each iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The loss with its tuning constant resolved.
    pub loss: RobustLoss,
    /// `‖w^(h) − w^(h−1)‖∞` at the last iteration.
    pub weight_change: f64,
}

/// Fit the robust kernel mean of the sample behind the Gram matrix `k`.
pub fn fit_robust_mean(k: &DMatrix<f64>, loss: &LossSpec, opts: &KirwlsOptions) -> Result<RobustMeanFit> {
    check_square(k, "Gram matrix")?;
    let t = kirwls::run(k, loss, opts)?;
    Ok(RobustMeanFit {
        weights: t.weights,
        residuals: t.residuals,
        objective_trace: t.objective_trace,
        iterations: t.iterations,
        converged: t.converged,
        loss: t.loss,
        weight_change: t.weight_change,
    })
}

/// `‖Φ(X_i) − Σ_j w_j Φ(X_j)‖` for every sample point.
pub fn mean_residuals(k: &DMatrix<f64>, w: &[f64]) -> Result<Vec<f64>> {
    let n = check_square(k, "Gram matrix")?;
    crate::linalg::check_simplex(w, n, 1e-9)?;
    kirwls::residuals(k, w)
}
