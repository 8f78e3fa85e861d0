//! Standard and robust kernel canonical correlation analysis.
//!
//! Both variants solve the same problem. Given centered Grams `G_X`, `G_Y`
//! and diagonal weights `W_XX`, `W_YY`, `W_XY`, find functions
//! `f = Σ a_i Φ̃(X_i)`, `g = Σ b_i Φ̃(Y_i)` maximising
//! `aᵀ G_X W_XY G_Y b` subject to `aᵀ(G_X W_XX G_X + κ G_X)a = 1` and the
//! analogous constraint for `b`. The standard variant uses uniform weights and
//! uniform centering; the robust variant takes the centering from robust
//! kernel means and the three weight vectors from robust CO/CCO fits.
//!
//! The problem is solved in eigen-coordinates of the centered Grams:
//! `G = U Λ Uᵀ` gives features `F = U Λ^{1/2}` for which the RKHS norm is the
//! Euclidean norm. With `S_XX = Fᵀ W_XX F + κ I` the correlations are the
//! singular values of `S_XX^{-1/2} Σ_XY S_YY^{-1/2}`, i.e. of the operator
//! `(Σ_XX + κI)^{-1/2} Σ_XY (Σ_YY + κI)^{-1/2}` restricted to the span of the
//! sample.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{contract, numeric, Error, Result};
use crate::kernel::{center, center_uniform, WeightedCenteredGram};
use crate::kirwls::KirwlsOptions;
use crate::linalg::{check_square, pearson, spd_power, sym_eigen_desc};
use crate::loss::LossSpec;
use crate::robust_cov::{fit_robust_co, fit_robust_cov, CovOperatorFit};
use crate::robust_mean::{fit_robust_mean, RobustMeanFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    Robust,
}

/// Exponent of the inner regularized block.
///
/// `Inverse` is the operator form `(Σ_YY + κI)^{-1}` inside the symmetric
/// product. `InverseSqrt` solves `Σ_XY (Σ_YY + κI)^{-1/2} Σ_YX u = ρ² (Σ_XX + κI) u`
/// instead; it is kept for comparison only and influence functions reject it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerInverse {
    Inverse,
    InverseSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KccaOptions {
    pub kappa: f64,
    /// Number of canonical pairs `m`.
    pub components: usize,
    pub inner: InnerInverse,
    /// Gram eigenvalues below `eig_floor · λ_max` are treated as zero.
    pub eig_floor: f64,
}

impl Default for KccaOptions {
    fn default() -> Self {
        Self { kappa: 1e-5, components: 1, inner: InnerInverse::Inverse, eig_floor: 1e-12 }
    }
}

/// How the robust variant turns robust CO/CCO fits into weight matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustWeighting {
    /// `W_XX`, `W_YY` from the robust COs, `W_XY` from the robust CCO.
    Separate,
    /// The robust CCO weights for all three blocks.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenteringMode {
    /// Center each view at its robust kernel mean.
    Robust,
    /// Center each view at the sample mean.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustOptions {
    pub loss: LossSpec,
    pub kirwls: KirwlsOptions,
    pub weighting: RobustWeighting,
    pub centering: CenteringMode,
}

impl Default for RobustOptions {
    fn default() -> Self {
        Self {
            loss: LossSpec::huber_median(),
            kirwls: KirwlsOptions::default(),
            weighting: RobustWeighting::Separate,
            centering: CenteringMode::Robust,
        }
    }
}

/// Full fitting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KccaConfig {
    pub method: Method,
    pub options: KccaOptions,
    pub robust: RobustOptions,
}

impl KccaConfig {
    pub fn standard(options: KccaOptions) -> Self {
        Self { method: Method::Standard, options, robust: RobustOptions::default() }
    }

    pub fn robust(options: KccaOptions, robust: RobustOptions) -> Self {
        Self { method: Method::Robust, options, robust }
    }
}

/// The diagonals of `W_XX`, `W_YY` and `W_XY`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaWeights {
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
}

impl CcaWeights {
    pub fn uniform(n: usize) -> Self {
        let u = vec![1.0 / n as f64; n];
        Self { xx: u.clone(), yy: u.clone(), xy: u }
    }

    fn shared(&self) -> bool {
        self.xx == self.xy && self.yy == self.xy
    }
}

/// The KIRWLS fits behind a robust model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustFits {
    pub mean_x: RobustMeanFit,
    pub mean_y: RobustMeanFit,
    pub co_x: CovOperatorFit,
    pub co_y: CovOperatorFit,
    pub cco: CovOperatorFit,
}

impl RobustFits {
    pub fn all_converged(&self) -> bool {
        self.mean_x.converged && self.mean_y.converged && self.co_x.converged && self.co_y.converged && self.cco.converged
    }

    pub fn max_iterations(&self) -> usize {
        [
            self.mean_x.iterations,
            self.mean_y.iterations,
            self.co_x.iterations,
            self.co_y.iterations,
            self.cco.iterations,
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// False when any KIRWLS loop hit `max_iter`.
    pub kirwls_converged: bool,
    /// Largest singular value before clipping to `[0, 1]`, if it exceeded `1 + 1e-6`.
    pub rho_excursion: Option<f64>,
    /// Numerical ranks of the two centered Grams.
    pub rank_x: usize,
    pub rank_y: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    pub method: Method,
    /// Canonical correlations, descending.
    pub rho: Vec<f64>,
    /// `n × m` dual coefficients; column j is `a_X^{(j)}`.
    pub alpha_x: DMatrix<f64>,
    pub alpha_y: DMatrix<f64>,
    pub kappa: f64,
    pub inner: InnerInverse,
    pub eig_floor: f64,
    pub weights: CcaWeights,
    pub centering_x: Vec<f64>,
    pub centering_y: Vec<f64>,
    pub robust: Option<RobustFits>,
    pub diagnostics: FitDiagnostics,
}

impl CcaModel {
    pub fn n(&self) -> usize {
        self.alpha_x.nrows()
    }

    pub fn components(&self) -> usize {
        self.rho.len()
    }

    /// Center raw test-vs-train kernel rows with this model's centering.
    pub fn center_test(
        &self,
        kx_test: &DMatrix<f64>,
        ky_test: &DMatrix<f64>,
        kx: &DMatrix<f64>,
        ky: &DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((
            crate::kernel::center_test(kx_test, kx, &self.centering_x)?,
            crate::kernel::center_test(ky_test, ky, &self.centering_y)?,
        ))
    }

    /// Centered training Grams of this model.
    pub fn centered_grams(&self, kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> Result<(WeightedCenteredGram, WeightedCenteredGram)> {
        Ok((center(kx, &self.centering_x)?, center(ky, &self.centering_y)?))
    }
}

/// Canonical-variate values of test points.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `T × m` values `f_jX(x_t)`.
    pub scores_x: DMatrix<f64>,
    pub scores_y: DMatrix<f64>,
    /// Pearson correlation of each score pair; `None` when undefined.
    pub correlations: Vec<Option<f64>>,
}

/// Eigen-coordinates of a centered Gram.
#[derive(Debug, Clone)]
pub(crate) struct Features {
    /// `n × r` eigenvectors.
    pub u: DMatrix<f64>,
    /// `r` retained eigenvalues.
    pub lambda: DVector<f64>,
    /// `n × r` centered features `U Λ^{1/2}`.
    pub f: DMatrix<f64>,
}

impl Features {
    pub fn new(g: &DMatrix<f64>, floor: f64) -> Result<Self> {
        let (vals, vecs) = sym_eigen_desc(g);
        let top = vals.iter().cloned().fold(0.0, f64::max);
        let cut = floor * top;
        let r = vals.iter().take_while(|&&v| v > cut && v > 0.0).count();
        if r == 0 {
            return Err(Error::Degenerate("centered Gram matrix is zero; the view carries no variation".into()));
        }
        let u = vecs.columns(0, r).into_owned();
        let lambda = vals.rows(0, r).into_owned();
        let f = DMatrix::from_fn(u.nrows(), r, |i, j| u[(i, j)] * lambda[j].sqrt());
        Ok(Self { u, lambda, f })
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    /// Dual coefficients `U Λ^{-1/2} c` of a feature-space vector `c`.
    pub fn dual(&self, c: &DVector<f64>) -> DVector<f64> {
        let scaled = DVector::from_fn(c.len(), |j, _| c[j] / self.lambda[j].sqrt());
        &self.u * scaled
    }

    /// `Fᵀ diag(w) F`.
    pub fn weighted_cov(&self, w: &[f64]) -> DMatrix<f64> {
        weighted_cross(&self.f, &self.f, w)
    }
}

pub(crate) fn weighted_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut aw = a.clone();
    for (i, &wi) in w.iter().enumerate() {
        aw.row_mut(i).scale_mut(wi);
    }
    aw.transpose() * b
}

/// The whitened cross-covariance problem of one fit.
#[derive(Debug, Clone)]
pub(crate) struct CcaSystem {
    pub fx: Features,
    pub fy: Features,
    /// Unregularized weighted covariances.
    pub cxx: DMatrix<f64>,
    pub cyy: DMatrix<f64>,
    pub cxy: DMatrix<f64>,
    pub sx_isqrt: DMatrix<f64>,
    pub sy_isqrt: DMatrix<f64>,
    /// Thin singular vectors of the whitened cross block.
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Singular values, descending, unclipped.
    pub sigma: Vec<f64>,
    pub kappa: f64,
}

impl CcaSystem {
    pub fn new(
        gx: &DMatrix<f64>,
        gy: &DMatrix<f64>,
        w: &CcaWeights,
        kappa: f64,
        floor: f64,
        inner: InnerInverse,
    ) -> Result<Self> {
        let fx = Features::new(gx, floor)?;
        let fy = Features::new(gy, floor)?;
        let cxx = fx.weighted_cov(&w.xx);
        let cyy = fy.weighted_cov(&w.yy);
        let cxy = weighted_cross(&fx.f, &fy.f, &w.xy);
        let sxx = &cxx + DMatrix::identity(fx.rank(), fx.rank()) * kappa;
        let syy = &cyy + DMatrix::identity(fy.rank(), fy.rank()) * kappa;
        let sx_isqrt = spd_power(&sxx, -0.5)?;
        let sy_isqrt = spd_power(&syy, -0.5)?;
        let right = match inner {
            InnerInverse::Inverse => sy_isqrt.clone(),
            InnerInverse::InverseSqrt => spd_power(&syy, -0.25)?,
        };
        let r = &sx_isqrt * &cxy * right;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(numeric("whitened cross-covariance has non-finite entries"));
        }
        let svd = SVD::try_new(r, true, true, f64::EPSILON, 0)
            .ok_or_else(|| numeric("SVD of the whitened cross-covariance did not converge"))?;
        let p = svd.u.ok_or_else(|| numeric("missing left singular vectors"))?;
        let q = svd.v_t.ok_or_else(|| numeric("missing right singular vectors"))?.transpose();
        let sigma = svd.singular_values.iter().cloned().collect();
        Ok(Self { fx, fy, cxx, cyy, cxy, sx_isqrt, sy_isqrt, p, q, sigma, kappa })
    }

    /// Feature-space canonical directions `(u_x, u_y)` of component j.
    pub fn directions(&self, j: usize) -> (DVector<f64>, DVector<f64>) {
        (&self.sx_isqrt * self.p.column(j), &self.sy_isqrt * self.q.column(j))
    }
}

fn fit_with_system(
    method: Method,
    sys: &CcaSystem,
    weights: CcaWeights,
    centering_x: Vec<f64>,
    centering_y: Vec<f64>,
    opts: &KccaOptions,
    robust: Option<RobustFits>,
) -> Result<CcaModel> {
    let m = opts.components;
    let avail = sys.sigma.len();
    if m == 0 || m > avail {
        return Err(contract(format!(
            "requested {m} components but only {avail} are identifiable (numerical ranks {}, {})",
            sys.fx.rank(),
            sys.fy.rank()
        )));
    }
    let n = sys.fx.f.nrows();
    let top = sys.sigma[0];
    let mut excursion = None;
    if top > 1.0 + 1e-6 {
        if weights.shared() && opts.inner == InnerInverse::Inverse {
            return Err(numeric(format!("canonical correlation {top} exceeds 1")));
        }
        excursion = Some(top);
    }
    let mut ax = DMatrix::zeros(n, m);
    let mut ay = DMatrix::zeros(n, m);
    let mut rho = Vec::with_capacity(m);
    for j in 0..m {
        let (ux, uy) = sys.directions(j);
        let mut a = sys.fx.dual(&ux);
        let mut b = sys.fy.dual(&uy);
        let scale = a.amax();
        if let Some(first) = a.iter().find(|v| v.abs() > 1e-10 * scale) {
            if *first < 0.0 {
                a.neg_mut();
                b.neg_mut();
            }
        }
        ax.set_column(j, &a);
        ay.set_column(j, &b);
        rho.push(sys.sigma[j].clamp(0.0, 1.0));
    }
    let kirwls_converged = robust.as_ref().is_none_or(|r| r.all_converged());
    Ok(CcaModel {
        method,
        rho,
        alpha_x: ax,
        alpha_y: ay,
        kappa: opts.kappa,
        inner: opts.inner,
        eig_floor: opts.eig_floor,
        weights,
        centering_x,
        centering_y,
        robust,
        diagnostics: FitDiagnostics {
            kirwls_converged,
            rho_excursion: excursion,
            rank_x: sys.fx.rank(),
            rank_y: sys.fy.rank(),
        },
    })
}

fn check_inputs(kx: &DMatrix<f64>, ky: &DMatrix<f64>, opts: &KccaOptions) -> Result<usize> {
    let n = check_square(kx, "K_X")?;
    let ny = check_square(ky, "K_Y")?;
    if n != ny {
        return Err(contract(format!("views have {n} and {ny} samples")));
    }
    if n < 2 {
        return Err(Error::Input("kernel CCA needs at least two samples".into()));
    }
    if !(opts.kappa > 0.0 && opts.kappa.is_finite()) {
        return Err(Error::Input(format!("kappa must be positive, got {}", opts.kappa)));
    }
    if !(opts.eig_floor >= 0.0 && opts.eig_floor < 1.0) {
        return Err(Error::Input("eig_floor must lie in [0, 1)".into()));
    }
    Ok(n)
}

/// Standard kernel CCA: uniform centering and uniform weights.
pub fn fit_standard_kcca(kx: &DMatrix<f64>, ky: &DMatrix<f64>, opts: &KccaOptions) -> Result<CcaModel> {
    let n = check_inputs(kx, ky, opts)?;
    let gx = center_uniform(kx)?;
    let gy = center_uniform(ky)?;
    let weights = CcaWeights::uniform(n);
    let sys = CcaSystem::new(&gx.centered, &gy.centered, &weights, opts.kappa, opts.eig_floor, opts.inner)?;
    fit_with_system(Method::Standard, &sys, weights, gx.weights, gy.weights, opts, None)
}

/// Robust kernel CCA.
///
/// 1. Robust kernel means give the centering of each view.
/// 2. Robust CO of each view and robust CCO of the pair give `W_XX`, `W_YY`, `W_XY`.
/// 3. The weighted eigenproblem is solved as in the standard variant.
pub fn fit_robust_kcca(
    kx: &DMatrix<f64>,
    ky: &DMatrix<f64>,
    opts: &KccaOptions,
    robust: &RobustOptions,
) -> Result<CcaModel> {
    check_inputs(kx, ky, opts)?;
    let mean_x = fit_robust_mean(kx, &robust.loss, &robust.kirwls)?;
    let mean_y = fit_robust_mean(ky, &robust.loss, &robust.kirwls)?;
    let (gx, gy) = match robust.centering {
        CenteringMode::Robust => (center(kx, &mean_x.weights)?, center(ky, &mean_y.weights)?),
        CenteringMode::Uniform => (center_uniform(kx)?, center_uniform(ky)?),
    };
    let co_x = fit_robust_co(&gx, &robust.loss, &robust.kirwls)?;
    let co_y = fit_robust_co(&gy, &robust.loss, &robust.kirwls)?;
    let cco = fit_robust_cov(&gx, &gy, &robust.loss, &robust.kirwls)?;
    let weights = match robust.weighting {
        RobustWeighting::Separate => CcaWeights {
            xx: co_x.weights.clone(),
            yy: co_y.weights.clone(),
            xy: cco.weights.clone(),
        },
        RobustWeighting::Shared => CcaWeights {
            xx: cco.weights.clone(),
            yy: cco.weights.clone(),
            xy: cco.weights.clone(),
        },
    };
    let sys = CcaSystem::new(&gx.centered, &gy.centered, &weights, opts.kappa, opts.eig_floor, opts.inner)?;
    let fits = RobustFits { mean_x, mean_y, co_x, co_y, cco };
    fit_with_system(Method::Robust, &sys, weights, gx.weights, gy.weights, opts, Some(fits))
}

/// Weighted kernel CCA with caller-supplied centering and weights.
pub fn fit_weighted_kcca(
    kx: &DMatrix<f64>,
    ky: &DMatrix<f64>,
    centering_x: &[f64],
    centering_y: &[f64],
    weights: CcaWeights,
    opts: &KccaOptions,
) -> Result<CcaModel> {
    let n = check_inputs(kx, ky, opts)?;
    for w in [&weights.xx, &weights.yy, &weights.xy] {
        crate::linalg::check_simplex(w, n, 1e-9)?;
    }
    let gx = center(kx, centering_x)?;
    let gy = center(ky, centering_y)?;
    let sys = CcaSystem::new(&gx.centered, &gy.centered, &weights, opts.kappa, opts.eig_floor, opts.inner)?;
    fit_with_system(Method::Standard, &sys, weights, gx.weights, gy.weights, opts, None)
}

/// Dispatch on `config.method`.
pub fn fit_kcca(kx: &DMatrix<f64>, ky: &DMatrix<f64>, config: &KccaConfig) -> Result<CcaModel> {
    match config.method {
        Method::Standard => fit_standard_kcca(kx, ky, &config.options),
        Method::Robust => fit_robust_kcca(kx, ky, &config.options, &config.robust),
    }
}

/// Canonical-variate values of test points whose kernel rows were centered
/// with the model's centering weights.
pub fn project(model: &CcaModel, kx_test: &DMatrix<f64>, ky_test: &DMatrix<f64>) -> Result<Projection> {
    let n = model.n();
    if kx_test.ncols() != n || ky_test.ncols() != n || kx_test.nrows() != ky_test.nrows() {
        return Err(contract("test kernel blocks do not conform to the model"));
    }
    let sx = kx_test * &model.alpha_x;
    let sy = ky_test * &model.alpha_y;
    let correlations = (0..model.components())
        .map(|j| {
            let a: Vec<f64> = sx.column(j).iter().cloned().collect();
            let b: Vec<f64> = sy.column(j).iter().cloned().collect();
            pearson(&a, &b)
        })
        .collect();
    Ok(Projection { scores_x: sx, scores_y: sy, correlations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gram, KernelSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn correlated(n: usize, seed: u64, noise: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut x = DMatrix::zeros(n, 2);
        let mut y = DMatrix::zeros(n, 2);
        for i in 0..n {
            let t = z();
            x[(i, 0)] = t;
            x[(i, 1)] = z();
            y[(i, 0)] = t.sin() + noise * z();
            y[(i, 1)] = z();
        }
        (x, y)
    }

    fn grams(x: &DMatrix<f64>, y: &DMatrix<f64>, k: KernelSpec) -> (DMatrix<f64>, DMatrix<f64>) {
        (gram(&k, x).unwrap(), gram(&k, y).unwrap())
    }

    #[test]
    fn identical_views_are_perfectly_correlated() {
        let (x, _) = correlated(40, 1, 0.1);
        let k = gram(&KernelSpec::gaussian(1.0), &x).unwrap();
        let opts = KccaOptions { kappa: 1e-10, ..Default::default() };
        let m = fit_standard_kcca(&k, &k, &opts).unwrap();
        assert!((m.rho[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn normalization_and_symmetry() {
        let (x, y) = correlated(50, 2, 0.3);
        let (kx, ky) = grams(&x, &y, KernelSpec::gaussian(1.0));
        let opts = KccaOptions { components: 3, ..Default::default() };
        let m = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        assert!(m.rho.windows(2).all(|w| w[0] >= w[1]));
        let gx = center_uniform(&kx).unwrap().centered;
        let w = DMatrix::from_diagonal(&DVector::from_element(50, 1.0 / 50.0));
        let b = &gx * &w * &gx + &gx * opts.kappa;
        for j in 0..3 {
            let a = m.alpha_x.column(j);
            let v = (a.transpose() * &b * a)[(0, 0)];
            assert!((v - 1.0).abs() < 1e-6, "component {j}: {v}");
        }
        let swapped = fit_standard_kcca(&ky, &kx, &opts).unwrap();
        for (a, b) in m.rho.iter().zip(&swapped.rho) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn scale_invariance_with_coscaled_kappa() {
        let (x, y) = correlated(40, 3, 0.3);
        let (kx, ky) = grams(&x, &y, KernelSpec::gaussian(1.0));
        let opts = KccaOptions { components: 2, ..Default::default() };
        let base = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        let c = 7.5;
        let scaled_opts = KccaOptions { kappa: opts.kappa * c, ..opts };
        let scaled = fit_standard_kcca(&(&kx * c), &(&ky * c), &scaled_opts).unwrap();
        for (a, b) in base.rho.iter().zip(&scaled.rho) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn self_projection_reproduces_rho() {
        let (x, y) = correlated(60, 4, 0.2);
        let (kx, ky) = grams(&x, &y, KernelSpec::Linear);
        let opts = KccaOptions { kappa: 1e-10, components: 2, ..Default::default() };
        let m = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        let (tx, ty) = m.center_test(&kx, &ky, &kx, &ky).unwrap();
        let p = project(&m, &tx, &ty).unwrap();
        for j in 0..2 {
            assert!((p.correlations[j].unwrap() - m.rho[j]).abs() < 1e-6);
        }
        let one = project(&m, &tx.rows(0, 1).into_owned(), &ty.rows(0, 1).into_owned()).unwrap();
        assert_eq!(one.correlations, vec![None, None]);
    }

    #[test]
    fn quadratic_robust_equals_standard_bitwise() {
        let (x, y) = correlated(45, 5, 0.3);
        let (kx, ky) = grams(&x, &y, KernelSpec::gaussian(1.0));
        let opts = KccaOptions { components: 2, ..Default::default() };
        let s = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        let r = fit_robust_kcca(&kx, &ky, &opts, &RobustOptions { loss: LossSpec::Quadratic, ..Default::default() }).unwrap();
        assert_eq!(s.rho, r.rho);
        assert_eq!(s.alpha_x, r.alpha_x);
        assert_eq!(s.alpha_y, r.alpha_y);
    }

    #[test]
    fn huge_huber_constant_approaches_standard() {
        let (x, y) = correlated(40, 6, 0.3);
        let (kx, ky) = grams(&x, &y, KernelSpec::gaussian(1.0));
        let opts = KccaOptions::default();
        let s = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        let loss = LossSpec::Huber { c: crate::loss::Tuning::Fixed(1e6) };
        let r = fit_robust_kcca(&kx, &ky, &opts, &RobustOptions { loss, ..Default::default() }).unwrap();
        assert!((s.rho[0] - r.rho[0]).abs() <= 1e-6);
    }

    #[test]
    fn sign_convention() {
        let (x, y) = correlated(30, 7, 0.3);
        let (kx, ky) = grams(&x, &y, KernelSpec::gaussian(1.0));
        let m = fit_standard_kcca(&kx, &ky, &KccaOptions { components: 2, ..Default::default() }).unwrap();
        for j in 0..2 {
            let col = m.alpha_x.column(j);
            let first = col.iter().find(|v| v.abs() > 1e-10 * col.amax()).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = DMatrix::identity(3, 3);
        assert!(fit_standard_kcca(&k, &DMatrix::identity(4, 4), &KccaOptions::default()).is_err());
        assert!(fit_standard_kcca(&k, &k, &KccaOptions { kappa: 0.0, ..Default::default() }).is_err());
        assert!(fit_standard_kcca(&k, &k, &KccaOptions { components: 5, ..Default::default() }).is_err());
        let ones = DMatrix::from_element(3, 3, 1.0);
        assert!(matches!(fit_standard_kcca(&ones, &k, &KccaOptions::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn inverse_sqrt_variant_runs() {
        let (x, y) = correlated(30, 8, 0.3);
        let (kx, ky) = grams(&x, &y, KernelSpec::gaussian(1.0));
        let opts = KccaOptions { inner: InnerInverse::InverseSqrt, ..Default::default() };
        let m = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        assert!(m.rho[0] >= 0.0 && m.rho[0] <= 1.0);
    }
}
