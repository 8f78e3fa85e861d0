//! Kernel covariance (CO) and cross-covariance (CCO) operators.
//!
//! An operator is stored as simplex weights over the sample tensor terms,
//! `Σ = Σ_i w_i Φ̃(X_i) ⊗ Φ̃(Y_i)`. Uniform weights give the empirical
//! operator; KIRWLS weights give the robust one. All Hilbert–Schmidt algebra
//! reduces to Hadamard products of centered Gram matrices because
//! `⟨a⊗b, c⊗d⟩ = ⟨a,c⟩⟨b,d⟩`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract, numeric, Result};
use crate::kernel::WeightedCenteredGram;
use crate::kirwls::{self, KirwlsOptions};
use crate::linalg::{check_simplex, check_square};
use crate::loss::{LossSpec, RobustLoss};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// Covariance of one view with itself.
    CO,
    /// Cross-covariance between two views.
    CCO,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovOperatorFit {
    pub weights: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kind: OperatorKind,
    pub centering_weights_x: Vec<f64>,
    pub centering_weights_y: Vec<f64>,
    pub loss: RobustLoss,
    pub weight_change: f64,
}

/// Uniform weights `1/n`: the empirical operator.
pub fn standard_cco_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Entrywise product `K̃_X ∘ K̃_Y`, the Gram matrix of the tensor features.
pub fn hadamard(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() {
        return Err(contract(format!("shape mismatch {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(a.component_mul(b))
}

/// `‖Φ̃(X_i)⊗Φ̃(Y_i) − Σ_j w_j Φ̃(X_j)⊗Φ̃(Y_j)‖` for every i.
pub fn residual_vector(kx: &DMatrix<f64>, ky: &DMatrix<f64>, w: &[f64]) -> Result<Vec<f64>> {
    let n = check_square(kx, "K̃_X")?;
    check_square(ky, "K̃_Y")?;
    check_simplex(w, n, 1e-9)?;
    let m = hadamard(kx, ky)?;
    kirwls::residuals(&m, w)
}

/// Robust kernel CCO via KIRWLS. Passing the same Gram for both views gives the CO.
pub fn fit_robust_cov(
    gx: &WeightedCenteredGram,
    gy: &WeightedCenteredGram,
    loss: &LossSpec,
    opts: &KirwlsOptions,
) -> Result<CovOperatorFit> {
    check_square(&gx.centered, "K̃_X")?;
    let m = hadamard(&gx.centered, &gy.centered)?;
    let t = kirwls::run(&m, loss, opts)?;
    let kind = if std::ptr::eq(gx, gy) || gx.centered == gy.centered {
        OperatorKind::CO
    } else {
        OperatorKind::CCO
    };
    Ok(CovOperatorFit {
        weights: t.weights,
        residuals: t.residuals,
        objective_trace: t.objective_trace,
        iterations: t.iterations,
        converged: t.converged,
        kind,
        centering_weights_x: gx.weights.clone(),
        centering_weights_y: gy.weights.clone(),
        loss: t.loss,
        weight_change: t.weight_change,
    })
}

/// Robust kernel CO of a single view.
pub fn fit_robust_co(g: &WeightedCenteredGram, loss: &LossSpec, opts: &KirwlsOptions) -> Result<CovOperatorFit> {
    fit_robust_cov(g, g, loss, opts)
}

/// Gram blocks between two sample sets `a` (size n) and `b` (size N) in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossBlocks {
    pub aa: DMatrix<f64>,
    pub ab: DMatrix<f64>,
    pub bb: DMatrix<f64>,
}

impl CrossBlocks {
    fn check(&self, na: usize, nb: usize) -> Result<()> {
        if self.aa.shape() != (na, na) || self.ab.shape() != (na, nb) || self.bb.shape() != (nb, nb) {
            return Err(contract("cross-Gram blocks do not conform to the weight vectors"));
        }
        Ok(())
    }
}

/// `‖Σ_a − Σ_b‖²_HS` for operators `Σ_a = Σ_i w_a,i Φ(X_i)⊗Φ(Y_i)` over
/// sample a and `Σ_b` over sample b.
pub fn hs_distance_sq(w_a: &[f64], w_b: &[f64], x: &CrossBlocks, y: &CrossBlocks) -> Result<f64> {
    let (na, nb) = (w_a.len(), w_b.len());
    x.check(na, nb)?;
    y.check(na, nb)?;
    let wa = DVector::from_column_slice(w_a);
    let wb = DVector::from_column_slice(w_b);
    let taa = (x.aa.component_mul(&y.aa) * &wa).dot(&wa);
    let tab = (x.ab.component_mul(&y.ab) * &wb).dot(&wa);
    let tbb = (x.bb.component_mul(&y.bb) * &wb).dot(&wb);
    let d = taa - 2.0 * tab + tbb;
    let scale = taa.abs().max(tbb.abs()).max(f64::MIN_POSITIVE);
    if d >= 0.0 {
        Ok(d)
    } else if d >= -1e-8 * scale {
        Ok(0.0)
    } else {
        Err(numeric(format!("negative squared HS distance {d:e}")))
    }
}

/// `‖Σ‖²_HS = wᵀ(K̃_X ∘ K̃_Y)w`.
pub fn hs_norm_sq(kx: &DMatrix<f64>, ky: &DMatrix<f64>, w: &[f64]) -> Result<f64> {
    let n = check_square(kx, "K̃_X")?;
    check_simplex(w, n, 1e-9)?;
    let wv = DVector::from_column_slice(w);
    Ok((hadamard(kx, ky)? * &wv).dot(&wv))
}

/// The sample-dual matrix `V = K̃_X diag(w) K̃_Y` of the operator.
pub fn operator_matrix(kx: &DMatrix<f64>, ky: &DMatrix<f64>, w: &[f64]) -> Result<DMatrix<f64>> {
    let n = check_square(kx, "K̃_X")?;
    if ky.shape() != (n, n) {
        return Err(contract("K̃_X and K̃_Y differ in size"));
    }
    check_simplex(w, n, 1e-9)?;
    let mut scaled = kx.clone();
    for (j, &wj) in w.iter().enumerate() {
        scaled.column_mut(j).scale_mut(wj);
    }
    Ok(scaled * ky)
}
