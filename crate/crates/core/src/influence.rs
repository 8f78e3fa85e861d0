//! Influence functions.
//!
//! * `eif_kernel_mean`, `eif_kernel_cco`: closed-form empirical influence of
//!   the kernel mean and the kernel cross-covariance operator.
//! * `if_robust_cco`: influence of the robust CCO, from the linearised
//!   stationarity condition of KIRWLS.
//! * `eif_kcca`, `influence_report`: influence of kernel canonical
//!   correlations and canonical variates, with a MAD outlier rule.
//! * `robustness_summaries`: gross-error sensitivity, local-shift sensitivity
//!   and rejection point of an influence function sampled on a grid.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, numeric, Error, Result};
use crate::kcca::{CcaModel, CcaSystem, CcaWeights, InnerInverse};
use crate::kernel::{center, WeightedCenteredGram};
use crate::linalg::{check_square, median};
use crate::robust_cov::CovOperatorFit;

/// Kernel evaluations of a contaminating point `(X′, Y′)` outside the sample.
#[derive(Debug, Clone, Copy)]
pub struct ExternalPoint<'a> {
    /// `k_X(X_i, X′)` for every sample point.
    pub kx_row: &'a [f64],
    /// `k_X(X′, X′)`.
    pub kx_self: f64,
    pub ky_row: &'a [f64],
    pub ky_self: f64,
}

/// Where the point mass of the contamination sits.
#[derive(Debug, Clone, Copy)]
pub enum ContaminationPoint<'a> {
    /// At sample pair `i`.
    Sample(usize),
    External(ExternalPoint<'a>),
}

impl ContaminationPoint<'_> {
    fn rows(&self, kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> Result<(Vec<f64>, f64, Vec<f64>, f64)> {
        let n = kx.nrows();
        match *self {
            ContaminationPoint::Sample(i) => {
                if i >= n {
                    return Err(contract(format!("sample index {i} out of range for n = {n}")));
                }
                Ok((
                    kx.column(i).iter().cloned().collect(),
                    kx[(i, i)],
                    ky.column(i).iter().cloned().collect(),
                    ky[(i, i)],
                ))
            }
            ContaminationPoint::External(p) => {
                if p.kx_row.len() != n || p.ky_row.len() != n {
                    return Err(contract("kernel rows of the contaminating point do not match the sample"));
                }
                Ok((p.kx_row.to_vec(), p.kx_self, p.ky_row.to_vec(), p.ky_self))
            }
        }
    }
}

fn row_means(k: &DMatrix<f64>) -> Vec<f64> {
    let n = k.ncols() as f64;
    (0..k.nrows()).map(|i| k.row(i).sum() / n).collect()
}

/// `k(X_j, X′) − (1/n) Σ_i k(X_j, X_i)` at every sample point.
pub fn eif_kernel_mean(k: &DMatrix<f64>, x_prime_row: &[f64]) -> Result<Vec<f64>> {
    let n = check_square(k, "Gram matrix")?;
    if x_prime_row.len() != n {
        return Err(contract("kernel row length does not match the sample"));
    }
    Ok(row_means(k).iter().zip(x_prime_row).map(|(m, v)| v - m).collect())
}

/// Empirical influence of the kernel CCO at the sample pairs:
/// `[k_X(X_i,X′) − m_X,i][k_Y(Y_i,Y′) − m_Y,i] − (1/n) Σ_d [K_X,id − m_X,i][K_Y,id − m_Y,i]`
/// with `m_·,i` the row means of the Gram matrices.
pub fn eif_kernel_cco(kx: &DMatrix<f64>, ky: &DMatrix<f64>, x_row: &[f64], y_row: &[f64]) -> Result<Vec<f64>> {
    let n = check_square(kx, "K_X")?;
    if ky.shape() != (n, n) || x_row.len() != n || y_row.len() != n {
        return Err(contract("kernel blocks do not conform"));
    }
    let (mx, my) = (row_means(kx), row_means(ky));
    Ok((0..n)
        .map(|i| {
            let first = (x_row[i] - mx[i]) * (y_row[i] - my[i]);
            let second: f64 = (0..n).map(|d| (kx[(i, d)] - mx[i]) * (ky[(i, d)] - my[i])).sum::<f64>() / n as f64;
            first - second
        })
        .collect())
}

/// Influence of a robust kernel CCO,
/// `IF(X, Y) = Σ_i α_i k̃_X(X, X_i) k̃_Y(Y, Y_i) + α′ k̃_X(X, X′) k̃_Y(Y, Y′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustCcoInfluence {
    pub alpha: Vec<f64>,
    pub alpha_prime: f64,
    /// `γ = Σ φ(e_i)`.
    pub gamma: f64,
    /// Residual norm of the contaminating pair.
    pub e_prime: f64,
    /// `‖A α − b‖∞` of the solved system.
    pub system_residual: f64,
    /// The influence evaluated against the centered features of each sample pair.
    pub at_samples: Vec<f64>,
    /// The influence evaluated against the raw features `Φ(X_i) ⊗ Φ(Y_i)`.
    pub at_samples_raw: Vec<f64>,
}

/// Solve `{γI + CᵀQC M} α = −n φ(e′) w − α′ CᵀQC k_XY` with `C = I − 1wᵀ`,
/// `M = K̃_X ∘ K̃_Y`, `Q = diag(q(e_i)/e_i³)` and `α′ = n φ(e′)/γ`.
pub fn if_robust_cco(
    fit: &CovOperatorFit,
    gx: &WeightedCenteredGram,
    gy: &WeightedCenteredGram,
    point: &ContaminationPoint<'_>,
) -> Result<RobustCcoInfluence> {
    let n = gx.n();
    if gy.n() != n || fit.weights.len() != n {
        return Err(contract("fit and Gram matrices disagree on the sample size"));
    }
    let loss = fit.loss;
    let w = DVector::from_column_slice(&fit.weights);
    let (xr, xs, yr, ys) = point.rows(&gx.raw, &gy.raw)?;
    let tx = gx.center_test(&DMatrix::from_row_slice(1, n, &xr))?;
    let ty = gy.center_test(&DMatrix::from_row_slice(1, n, &yr))?;
    let kxy = DVector::from_fn(n, |i, _| tx[(0, i)] * ty[(0, i)]);
    let m = gx.centered.component_mul(&gy.centered);
    let e2 = gx.center_self(&xr, xs)? * gy.center_self(&yr, ys)? - 2.0 * kxy.dot(&w) + (&m * &w).dot(&w);
    let e_prime = e2.max(0.0).sqrt();

    let phi: Vec<f64> = fit.residuals.iter().map(|&e| loss.phi_raw(e)).collect();
    let gamma: f64 = phi.iter().sum();
    if !(gamma > 0.0) {
        return Err(numeric("all robust weights vanished"));
    }
    let phi_prime = loss.phi_raw(e_prime);
    let alpha_prime = n as f64 * phi_prime / gamma;

    let qd = DVector::from_iterator(
        n,
        fit.residuals.iter().map(|&e| if e > 0.0 { loss.q(e).unwrap_or(0.0) / (e * e * e) } else { 0.0 }),
    );
    // CᵀQC v = Q v − w (1ᵀ Q v) − Q 1 (wᵀ v) + w (1ᵀQ1)(wᵀ v)
    let ctqc = |v: &DVector<f64>| -> DVector<f64> {
        let cv = v - DVector::from_element(n, w.dot(v));
        let qcv = cv.component_mul(&qd);
        &qcv - &w * qcv.sum()
    };
    let mut a = DMatrix::identity(n, n) * gamma;
    for c in 0..n {
        let col = m.column(c).into_owned();
        let t = ctqc(&col);
        let mut dst = a.column_mut(c);
        dst += t;
    }
    let rhs = -(&w * (n as f64 * phi_prime)) - ctqc(&kxy) * alpha_prime;
    let lu = a.clone().lu();
    let alpha = lu.solve(&rhs).ok_or_else(|| {
        let sv = a.clone().singular_values();
        let cond = sv.max() / sv.min();
        numeric(format!("robust CCO influence system is singular (condition number {cond:e})"))
    })?;
    let system_residual = (&a * &alpha - &rhs).amax();
    if !system_residual.is_finite() {
        return Err(numeric("robust CCO influence system produced non-finite values"));
    }

    let at_samples: Vec<f64> = (&m * &alpha + &kxy * alpha_prime).iter().cloned().collect();
    // Raw evaluation: ⟨Φ̃(X_k), Φ(X_i)⟩ = K_ki − Σ_b w_b K_bi.
    let half = |g: &WeightedCenteredGram| -> DMatrix<f64> {
        let wc = DVector::from_column_slice(&g.weights);
        let colmean = g.raw.transpose() * wc;
        DMatrix::from_fn(n, n, |k, i| g.raw[(k, i)] - colmean[i])
    };
    let half_row = |g: &WeightedCenteredGram, row: &[f64]| -> DVector<f64> {
        let wc = DVector::from_column_slice(&g.weights);
        let colmean = g.raw.transpose() * wc;
        DVector::from_fn(n, |i, _| row[i] - colmean[i])
    };
    let (hx, hy) = (half(gx), half(gy));
    let hm = hx.component_mul(&hy);
    let hprime = half_row(gx, &xr).component_mul(&half_row(gy, &yr));
    let at_samples_raw: Vec<f64> = (hm.transpose() * &alpha + hprime * alpha_prime).iter().cloned().collect();

    Ok(RobustCcoInfluence {
        alpha: alpha.iter().cloned().collect(),
        alpha_prime,
        gamma,
        e_prime,
        system_residual,
        at_samples,
        at_samples_raw,
    })
}

/// Which expression to use for the influence of `ρ_j²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoInfluence {
    /// `−ρ² f̃_X(X′)² + 2ρ f̃_X(X′) f̃_Y(Y′) − ρ² f̃_Y(Y′)²`.
    Displayed,
    /// The exact derivative of the κ-regularized correlation: the displayed
    /// expression minus `ρ² κ (‖f_X‖² + ‖f_Y‖²)`.
    Regularized,
}

/// Influence of component j at one contaminating point.
#[derive(Debug, Clone, PartialEq)]
pub struct KccaInfluence {
    pub if_rho: f64,
    /// Influence on `f_jX`, evaluated (centered) at every sample point.
    pub if_fx: DVector<f64>,
    pub if_fy: DVector<f64>,
    /// Set when `ρ_j ≥ 1 − 1e-8`, where the perturbation is ill-conditioned.
    pub near_singular: bool,
}

struct Engine {
    sys: CcaSystem,
    j: usize,
    rho: f64,
    ux: DVector<f64>,
    uy: DVector<f64>,
    /// `Sx P` and `Sy Q`.
    bx: DMatrix<f64>,
    by: DMatrix<f64>,
    fvals_x: DVector<f64>,
    fvals_y: DVector<f64>,
    mode: RhoInfluence,
    near_singular: bool,
}

const DEGENERATE_GAP: f64 = 1e-8;

impl Engine {
    fn new(gx: &DMatrix<f64>, gy: &DMatrix<f64>, model: &CcaModel, weights: &CcaWeights, j: usize, mode: RhoInfluence) -> Result<Self> {
        if model.inner != InnerInverse::Inverse {
            return Err(contract("influence functions need a model fitted with the operator (Inverse) form"));
        }
        if j >= model.components() {
            return Err(contract(format!(
                "component {j} out of range; the model has {} components",
                model.components()
            )));
        }
        let sys = CcaSystem::new(gx, gy, weights, model.kappa, model.eig_floor, model.inner)?;
        let rho = sys.sigma[j];
        for (k, &s) in sys.sigma.iter().enumerate() {
            if k != j && (rho - s).abs() < DEGENERATE_GAP {
                return Err(numeric(format!(
                    "degenerate spectrum: canonical correlations {j} and {k} coincide ({rho} vs {s})"
                )));
            }
            if rho + s < DEGENERATE_GAP {
                return Err(numeric(format!("degenerate spectrum: canonical correlation {j} is zero")));
            }
        }
        if rho < DEGENERATE_GAP && (sys.fx.rank() > sys.sigma.len() || sys.fy.rank() > sys.sigma.len()) {
            return Err(numeric(format!("degenerate spectrum: canonical correlation {j} is zero")));
        }
        let (ux, uy) = sys.directions(j);
        let bx = &sys.sx_isqrt * &sys.p;
        let by = &sys.sy_isqrt * &sys.q;
        let fvals_x = &sys.fx.f * &ux;
        let fvals_y = &sys.fy.f * &uy;
        Ok(Self {
            j,
            rho,
            ux,
            uy,
            bx,
            by,
            fvals_x,
            fvals_y,
            mode,
            near_singular: rho >= 1.0 - 1e-8,
            sys,
        })
    }

    fn if_rho(&self, i: usize) -> f64 {
        let (f, g, r) = (self.fvals_x[i], self.fvals_y[i], self.rho);
        let displayed = -r * r * f * f + 2.0 * r * f * g - r * r * g * g;
        match self.mode {
            RhoInfluence::Displayed => displayed,
            RhoInfluence::Regularized => {
                displayed - r * r * self.sys.kappa * (self.ux.norm_squared() + self.uy.norm_squared())
            }
        }
    }

    /// Feature-space derivatives `(du_x, du_y)` for contamination at point i.
    fn directions_if(&self, i: usize) -> (DVector<f64>, DVector<f64>) {
        let s = &self.sys;
        let r = self.rho;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let px = s.fx.f.row(i).transpose();
        let py = s.fy.f.row(i).transpose();
        let zx = &self.ux * h;
        let zy = &self.uy * h;
        let (fx, fy) = (px.dot(&zx), py.dot(&zy));
        // v = (dA − ρ dB) ẑ_j with dA, dB the contamination derivatives of the pencil.
        let vx = &px * fy - &s.cxy * &zy - (&px * fx - &s.cxx * &zx) * r;
        let vy = &py * fx - s.cxy.transpose() * &zx - (&py * fy - &s.cyy * &zy) * r;
        let a = self.bx.transpose() * &vx;
        let b = self.by.transpose() * &vy;
        let nk = s.sigma.len();
        let mut cx = DVector::zeros(nk);
        let mut cy = DVector::zeros(nk);
        for k in 0..nk {
            let sk = s.sigma[k];
            let plus = if k == self.j { 0.0 } else { (a[k] + b[k]) * h / (r - sk) };
            let minus = (a[k] - b[k]) * h / (r + sk);
            cx[k] = (plus + minus) * h;
            cy[k] = (plus - minus) * h;
        }
        let mut dzx = &self.bx * cx;
        let mut dzy = &self.by * cy;
        if s.fx.rank() > nk {
            let t = &s.sx_isqrt * &vx;
            let perp = &t - &s.p * (s.p.transpose() * &t);
            dzx += &s.sx_isqrt * perp / r;
        }
        if s.fy.rank() > nk {
            let t = &s.sy_isqrt * &vy;
            let perp = &t - &s.q * (s.q.transpose() * &t);
            dzy += &s.sy_isqrt * perp / r;
        }
        let zbz = (fx * fx - zx.dot(&(&s.cxx * &zx))) + (fy * fy - zy.dot(&(&s.cyy * &zy)));
        dzx -= &zx * (0.5 * zbz);
        dzy -= &zy * (0.5 * zbz);
        // ẑ = u/√2, so du = √2 dẑ.
        (dzx / h, dzy / h)
    }

    fn at(&self, i: usize, n_eval: usize) -> KccaInfluence {
        let (dux, duy) = self.directions_if(i);
        let fx = self.sys.fx.f.rows(0, n_eval) * dux;
        let fy = self.sys.fy.f.rows(0, n_eval) * duy;
        KccaInfluence { if_rho: self.if_rho(i), if_fx: fx, if_fy: fy, near_singular: self.near_singular }
    }
}

fn padded(v: &[f64]) -> Vec<f64> {
    let mut p = v.to_vec();
    p.push(0.0);
    p
}

fn augment(k: &DMatrix<f64>, row: &[f64], selfv: f64) -> DMatrix<f64> {
    let n = k.nrows();
    DMatrix::from_fn(n + 1, n + 1, |a, b| match (a == n, b == n) {
        (false, false) => k[(a, b)],
        (true, true) => selfv,
        (true, false) => row[b],
        (false, true) => row[a],
    })
}

/// Influence of the j-th (zero-based) kernel canonical correlation `ρ_j²` and
/// canonical variates at a contaminating point.
///
/// `kx`, `ky` are the raw training Grams of `model`. External points are
/// handled by adding them to the sample with zero weight, which leaves the
/// fit unchanged while making their features available.
pub fn eif_kcca(
    model: &CcaModel,
    kx: &DMatrix<f64>,
    ky: &DMatrix<f64>,
    j: usize,
    point: &ContaminationPoint<'_>,
    mode: RhoInfluence,
) -> Result<KccaInfluence> {
    let n = model.n();
    if kx.shape() != (n, n) || ky.shape() != (n, n) {
        return Err(contract("Gram matrices do not match the model"));
    }
    match point {
        ContaminationPoint::Sample(i) => {
            if *i >= n {
                return Err(contract(format!("sample index {i} out of range for n = {n}")));
            }
            let (gx, gy) = model.centered_grams(kx, ky)?;
            let engine = Engine::new(&gx.centered, &gy.centered, model, &model.weights, j, mode)?;
            Ok(engine.at(*i, n))
        }
        ContaminationPoint::External(p) => {
            let _ = p;
            let (xr, xs, yr, ys) = point.rows(kx, ky)?;
            let kxa = augment(kx, &xr, xs);
            let kya = augment(ky, &yr, ys);
            let gx = center(&kxa, &padded(&model.centering_x))?;
            let gy = center(&kya, &padded(&model.centering_y))?;
            let w = CcaWeights {
                xx: padded(&model.weights.xx),
                yy: padded(&model.weights.yy),
                xy: padded(&model.weights.xy),
            };
            let engine = Engine::new(&gx.centered, &gy.centered, model, &w, j, mode)?;
            Ok(engine.at(n, n))
        }
    }
}

/// The MAD outlier rule: flag `|v − median| > k · 1.4826 · MAD`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MadRule {
    pub k: f64,
    pub median: f64,
    pub mad: f64,
    /// `k · 1.4826 · MAD`; nothing is flagged when it is zero.
    pub threshold: f64,
}

pub const MAD_CONSISTENCY: f64 = 1.4826;

impl MadRule {
    pub fn fit(values: &[f64], k: f64) -> Result<Self> {
        let med = median(values).ok_or_else(|| Error::Input("no values to threshold".into()))?;
        let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
        let mad = median(&dev).unwrap_or(0.0);
        Ok(Self { k, median: med, mad, threshold: k * MAD_CONSISTENCY * mad })
    }

    pub fn flags(&self, values: &[f64]) -> Vec<bool> {
        if !(self.threshold > 0.0) {
            return vec![false; values.len()];
        }
        values.iter().map(|v| (v - self.median).abs() > self.threshold).collect()
    }
}

/// Flag outliers among `values` with the MAD rule at `k`.
pub fn flag_outliers(values: &[f64], k: f64) -> Result<(Vec<bool>, MadRule)> {
    let rule = MadRule::fit(values, k)?;
    Ok((rule.flags(values), rule))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceOptions {
    pub mode: RhoInfluence,
    /// Also compute the n × n canonical-variate influence matrices.
    pub variates: bool,
    pub mad_k: f64,
}

impl Default for InfluenceOptions {
    fn default() -> Self {
        Self { mode: RhoInfluence::Regularized, variates: true, mad_k: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    /// Zero-based component index.
    pub component: usize,
    /// `IF(Z_i, ρ_j²)` for every subject i.
    pub eif_rho: Vec<f64>,
    /// Column i holds `IF(·, Z_i, f_jX)` at every sample point.
    pub eif_fx: Option<DMatrix<f64>>,
    pub eif_fy: Option<DMatrix<f64>>,
    pub outlier_flags: Vec<bool>,
    pub threshold_rule: MadRule,
    pub near_singular: bool,
}

/// Influence of component j at every subject, with outlier flags.
pub fn influence_report(
    model: &CcaModel,
    kx: &DMatrix<f64>,
    ky: &DMatrix<f64>,
    j: usize,
    opts: &InfluenceOptions,
) -> Result<InfluenceReport> {
    let n = model.n();
    if kx.shape() != (n, n) || ky.shape() != (n, n) {
        return Err(contract("Gram matrices do not match the model"));
    }
    let (gx, gy) = model.centered_grams(kx, ky)?;
    let engine = Engine::new(&gx.centered, &gy.centered, model, &model.weights, j, opts.mode)?;
    let eif_rho: Vec<f64> = (0..n).map(|i| engine.if_rho(i)).collect();
    let (eif_fx, eif_fy) = if opts.variates {
        let cols: Vec<KccaInfluence> = (0..n).into_par_iter().map(|i| engine.at(i, n)).collect();
        let fx = DMatrix::from_fn(n, n, |k, i| cols[i].if_fx[k]);
        let fy = DMatrix::from_fn(n, n, |k, i| cols[i].if_fy[k]);
        (Some(fx), Some(fy))
    } else {
        (None, None)
    };
    let (outlier_flags, threshold_rule) = flag_outliers(&eif_rho, opts.mad_k)?;
    Ok(InfluenceReport {
        component: j,
        eif_rho,
        eif_fx,
        eif_fy,
        outlier_flags,
        threshold_rule,
        near_singular: engine.near_singular,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    /// Gross-error sensitivity `max |IF|`.
    pub gamma_star: f64,
    /// Local-shift sensitivity `max |ΔIF| / ‖Δx‖` over consecutive grid points.
    pub lambda_star: f64,
    /// Smallest radius beyond which `|IF| < tol`; `+∞` if there is none on the grid.
    pub rho_star: f64,
}

/// Summaries of an influence function sampled at ordered grid points.
///
/// Radii are Euclidean norms of the grid points, so the grid should be
/// centered at the bulk of the data.
pub fn robustness_summaries(grid: &[(Vec<f64>, f64)], tol: f64) -> Result<RobustnessSummary> {
    if grid.is_empty() {
        return Err(Error::Input("empty evaluation grid".into()));
    }
    let gamma_star = grid.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut lambda_star: f64 = 0.0;
    for w in grid.windows(2) {
        let dx: f64 = w[0].0.iter().zip(&w[1].0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dx > 0.0 {
            lambda_star = lambda_star.max((w[1].1 - w[0].1).abs() / dx);
        }
    }
    let radius = |p: &Vec<f64>| p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let max_r = grid.iter().map(|(p, _)| radius(p)).fold(0.0, f64::max);
    let last_big = grid.iter().filter(|(_, v)| v.abs() >= tol).map(|(p, _)| radius(p)).fold(None, |acc: Option<f64>, r| {
        Some(acc.map_or(r, |a| a.max(r)))
    });
    let rho_star = match last_big {
        None => 0.0,
        Some(r) if r >= max_r => f64::INFINITY,
        Some(r) => r,
    };
    Ok(RobustnessSummary { gamma_star, lambda_star, rho_star })
}
