//! Seeded generators for the synthetic benchmark datasets.
//!
//! Every row draws from its own ChaCha8 stream (`set_stream(row)`), so a row
//! is reproducible on its own and rows can be generated in any order. Draws
//! shared across rows (loadings, the choice of contaminated rows) use
//! reserved streams at the top of the stream space. An ideal dataset and its
//! contaminated version built from the same seed share every random draw;
//! contaminated rows only swap the law the draws are pushed through.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How contamination enters a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Contamination {
    None,
    /// A fraction `rate` of rows is drawn from the contaminating law.
    Mixture { rate: f64 },
    /// Every row is drawn from the contaminating law.
    Shift,
}

impl Contamination {
    /// The default used by the experiments: 5% of rows.
    pub fn mixture5() -> Self {
        Self::Mixture { rate: 0.05 }
    }

    fn validate(&self) -> Result<()> {
        if let Self::Mixture { rate } = *self {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Input(format!("contamination rate must lie in [0, 1], got {rate}")));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for Contamination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::None => write!(f, "none"),
            Self::Mixture { rate } => write!(f, "mixture:{rate}"),
            Self::Shift => write!(f, "shift"),
        }
    }
}

impl std::str::FromStr for Contamination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let c = match s.split_once(':') {
            None if s == "none" => Self::None,
            None if s == "shift" => Self::Shift,
            None if s == "mixture" => Self::mixture5(),
            Some(("mixture", r)) => Self::Mixture {
                rate: r.parse().map_err(|_| Error::Input(format!("bad contamination rate `{r}`")))?,
            },
            _ => return Err(Error::Input(format!("unknown contamination `{s}`"))),
        };
        c.validate()?;
        Ok(c)
    }
}

/// Correlation structure of the 12-dimensional MGSD latent vector.
///
/// The default has equicorrelation `within` inside each block of six and
/// `cross` between variable k of the first block and variable k of the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MgsdSigma {
    Block { within: f64, cross: f64 },
    /// Row-major 12 × 12 matrix.
    Full { values: Vec<f64> },
}

impl Default for MgsdSigma {
    fn default() -> Self {
        Self::Block { within: 0.4, cross: 0.5 }
    }
}

impl MgsdSigma {
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            Self::Block { within, cross } => Ok(DMatrix::from_fn(12, 12, |i, j| {
                if i == j {
                    1.0
                } else if i / 6 == j / 6 {
                    *within
                } else if i % 6 == j % 6 {
                    *cross
                } else {
                    0.0
                }
            })),
            Self::Full { values } => {
                if values.len() != 144 {
                    return Err(Error::Input("a full MGSD sigma needs 144 values".into()));
                }
                Ok(DMatrix::from_row_slice(12, 12, values))
            }
        }
    }
}

/// Parameters of the reconstructed SNP/voxel latent model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmsdParams {
    pub snp_dim: usize,
    pub voxel_dim: usize,
    pub signal: f64,
    /// Noise level of ideal rows.
    pub noise: f64,
    /// Noise level of contaminated rows.
    pub contaminated_noise: f64,
    /// Fraction of nonzero loadings.
    pub sparsity: f64,
    /// Standardized cut points mapping a latent SNP value to 0, 1, 2.
    pub snp_cuts: [f64; 2],
}

/// Quartiles of the standard normal: genotype frequencies 1/4, 1/2, 1/4.
pub const SNP_QUARTILE_CUTS: [f64; 2] = [-0.674_489_750_196_081_7, 0.674_489_750_196_081_7];

impl Default for SmsdParams {
    fn default() -> Self {
        Self {
            snp_dim: 1000,
            voxel_dim: 1000,
            signal: 0.5,
            noise: 1.0,
            contaminated_noise: 20.0,
            sparsity: 0.1,
            snp_cuts: SNP_QUARTILE_CUTS,
        }
    }
}

/// Which generator produced a dataset, with its size parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dataset", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Tcsd { n1: usize, n2: usize, n3: usize },
    Sfsd { n: usize },
    Mgsd { n: usize, sigma: MgsdSigma },
    Scfsd { n: usize },
    Smsd { n: usize, params: SmsdParams },
}

impl GeneratorSpec {
    pub fn n(&self) -> usize {
        match self {
            Self::Tcsd { n1, n2, n3 } => n1 + n2 + n3,
            Self::Sfsd { n } | Self::Mgsd { n, .. } | Self::Scfsd { n } | Self::Smsd { n, .. } => *n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Tcsd { .. } => "tcsd",
            Self::Sfsd { .. } => "sfsd",
            Self::Mgsd { .. } => "mgsd",
            Self::Scfsd { .. } => "scfsd",
            Self::Smsd { .. } => "smsd",
        }
    }

    pub fn is_paired(&self) -> bool {
        matches!(self, Self::Mgsd { .. } | Self::Scfsd { .. } | Self::Smsd { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    /// Second view for paired designs.
    pub y: Option<DMatrix<f64>>,
    /// Zero-based indices of rows drawn from the contaminating law, ascending.
    pub contaminated_indices: Vec<usize>,
    pub seed: u64,
    pub spec: GeneratorSpec,
    pub contamination: Contamination,
}

/// Generate any dataset from its spec.
pub fn generate(spec: &GeneratorSpec, contamination: Contamination, seed: u64) -> Result<Dataset> {
    match spec {
        GeneratorSpec::Tcsd { n1, n2, n3 } => gen_tcsd(*n1, *n2, *n3, contamination, seed),
        GeneratorSpec::Sfsd { n } => gen_sfsd(*n, contamination, seed),
        GeneratorSpec::Mgsd { n, sigma } => gen_mgsd(*n, contamination, seed, sigma),
        GeneratorSpec::Scfsd { n } => gen_scfsd(*n, contamination, seed),
        GeneratorSpec::Smsd { n, params } => gen_smsd(*n, params, contamination, seed),
    }
}

const STREAM_SELECTION: u64 = u64::MAX;
const STREAM_LOADINGS_X: u64 = u64::MAX - 1;
const STREAM_LOADINGS_Y: u64 = u64::MAX - 2;

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Rows drawn from the contaminating law.
fn contaminated_rows(n: usize, c: Contamination, seed: u64) -> Result<Vec<usize>> {
    c.validate()?;
    Ok(match c {
        Contamination::None => Vec::new(),
        Contamination::Shift => (0..n).collect(),
        Contamination::Mixture { rate } => {
            let k = ((rate * n as f64).round() as usize).min(n);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut stream(seed, STREAM_SELECTION));
            let mut chosen = idx[..k].to_vec();
            chosen.sort_unstable();
            chosen
        }
    })
}

fn flags(n: usize, rows: &[usize]) -> Vec<bool> {
    let mut f = vec![false; n];
    for &i in rows {
        f[i] = true;
    }
    f
}

fn finish(x: DMatrix<f64>, y: Option<DMatrix<f64>>, rows: Vec<usize>, seed: u64, spec: GeneratorSpec, c: Contamination) -> Dataset {
    Dataset { x, y, contaminated_indices: rows, seed, spec, contamination: c }
}

/// Three noisy circles of radii 1, 0.5 and 0.25 holding n1, n2, n3 points.
///
/// Angles are uniform on `[−π, π]`; contaminated rows take angles from
/// `[−10, 10]`. Noise is `N(0, 0.01 I₂)`.
pub fn gen_tcsd(n1: usize, n2: usize, n3: usize, c: Contamination, seed: u64) -> Result<Dataset> {
    let n = n1 + n2 + n3;
    if n < 2 {
        return Err(Error::Input("TCSD needs at least two points in total".into()));
    }
    let rows = contaminated_rows(n, c, seed)?;
    let bad = flags(n, &rows);
    let mut x = DMatrix::zeros(n, 2);
    for i in 0..n {
        let mut rng = stream(seed, i as u64);
        let u: f64 = rng.random();
        let (e1, e2) = (0.1 * normal(&mut rng), 0.1 * normal(&mut rng));
        let z = if bad[i] { -10.0 + 20.0 * u } else { -std::f64::consts::PI + 2.0 * std::f64::consts::PI * u };
        let r = if i < n1 {
            1.0
        } else if i < n1 + n2 {
            0.5
        } else {
            0.25
        };
        x[(i, 0)] = r * z.cos() + e1;
        x[(i, 1)] = r * z.sin() + e2;
    }
    Ok(finish(x, None, rows, seed, GeneratorSpec::Tcsd { n1, n2, n3 }, c))
}

/// `(Z, 2 sin 2Z, …, 10 sin 10Z) + ε` with `Z ~ U[−2π, 0]`.
///
/// Noise is `N(0, 0.01 I₁₀)` on ideal rows and `N(0, 10 I₁₀)` on contaminated rows.
pub fn gen_sfsd(n: usize, c: Contamination, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Input("SFSD needs at least two points".into()));
    }
    let rows = contaminated_rows(n, c, seed)?;
    let bad = flags(n, &rows);
    let mut x = DMatrix::zeros(n, 10);
    for i in 0..n {
        let mut rng = stream(seed, i as u64);
        let z = -2.0 * std::f64::consts::PI * rng.random::<f64>();
        let sd = if bad[i] { 10f64.sqrt() } else { 0.1 };
        for k in 0..10 {
            let base = if k == 0 { z } else { (k + 1) as f64 * ((k + 1) as f64 * z).sin() };
            x[(i, k)] = base + sd * normal(&mut rng);
        }
    }
    Ok(finish(x, None, rows, seed, GeneratorSpec::Sfsd { n }, c))
}

/// `Z ~ N(0, Σ)` in 12 dimensions; `X = Z[0..6]`, `Y = ln|Z[6..12]|`.
/// Contaminated rows have mean 1.
pub fn gen_mgsd(n: usize, c: Contamination, seed: u64, sigma: &MgsdSigma) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Input("MGSD needs at least two points".into()));
    }
    let s = sigma.matrix()?;
    if (&s - s.transpose()).amax() > 1e-12 {
        return Err(Error::Input("MGSD sigma must be symmetric".into()));
    }
    let l = s
        .cholesky()
        .ok_or_else(|| Error::Input("MGSD sigma is not positive definite".into()))?
        .l();
    let rows = contaminated_rows(n, c, seed)?;
    let bad = flags(n, &rows);
    let mut x = DMatrix::zeros(n, 6);
    let mut y = DMatrix::zeros(n, 6);
    for i in 0..n {
        let mut rng = stream(seed, i as u64);
        let xi = DVector::from_fn(12, |_, _| normal(&mut rng));
        let mu = if bad[i] { 1.0 } else { 0.0 };
        let z = &l * xi;
        for k in 0..6 {
            x[(i, k)] = z[k] + mu;
            y[(i, k)] = (z[k + 6] + mu).abs().ln();
        }
    }
    Ok(finish(x, Some(y), rows, seed, GeneratorSpec::Mgsd { n, sigma: sigma.clone() }, c))
}

/// `X_ij = sin(j Z_i) + η_i`, `Y_ij = cos(j Z_i) + η_i` for j = 1..100,
/// `Z ~ U[−π, π]`, `η ~ N(0, 0.01)`; contaminated rows have `η ~ N(1, 0.01)`.
pub fn gen_scfsd(n: usize, c: Contamination, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Input("SCFSD needs at least two points".into()));
    }
    let rows = contaminated_rows(n, c, seed)?;
    let bad = flags(n, &rows);
    let mut x = DMatrix::zeros(n, 100);
    let mut y = DMatrix::zeros(n, 100);
    for i in 0..n {
        let mut rng = stream(seed, i as u64);
        let z = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let eta = 0.1 * normal(&mut rng) + if bad[i] { 1.0 } else { 0.0 };
        for j in 0..100 {
            let f = (j + 1) as f64 * z;
            x[(i, j)] = f.sin() + eta;
            y[(i, j)] = f.cos() + eta;
        }
    }
    Ok(finish(x, Some(y), rows, seed, GeneratorSpec::Scfsd { n }, c))
}

fn sparse_loadings(dim: usize, sparsity: f64, seed: u64, s: u64) -> Vec<f64> {
    let k = ((sparsity * dim as f64).round() as usize).clamp(1, dim);
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(&mut stream(seed, s));
    let mut b = vec![0.0; dim];
    for &i in &idx[..k] {
        b[i] = 1.0;
    }
    b
}

/// Latent-variable SNP/voxel pairs.
///
/// `u_i ~ N(0, 1)`; `X_i = signal·u_i·β_x + noise·ε`, `Y_i = signal·u_i·β_y + noise·ε`
/// with sparse 0/1 loadings. SNP columns are standardized by their ideal
/// standard deviation and cut into genotypes {0, 1, 2}. Contaminated rows use
/// `contaminated_noise` in both views.
pub fn gen_smsd(n: usize, p: &SmsdParams, c: Contamination, seed: u64) -> Result<Dataset> {
    if n < 2 || p.snp_dim == 0 || p.voxel_dim == 0 {
        return Err(Error::Input("SMSD needs n ≥ 2 and positive dimensions".into()));
    }
    if !(p.signal >= 0.0 && p.noise > 0.0 && p.contaminated_noise > 0.0) {
        return Err(Error::Input("SMSD needs signal ≥ 0 and positive noise levels".into()));
    }
    if !(p.sparsity > 0.0 && p.sparsity <= 1.0) || !(p.snp_cuts[0] < p.snp_cuts[1]) {
        return Err(Error::Input("SMSD sparsity must lie in (0, 1] and cuts must increase".into()));
    }
    let bx = sparse_loadings(p.snp_dim, p.sparsity, seed, STREAM_LOADINGS_X);
    let by = sparse_loadings(p.voxel_dim, p.sparsity, seed, STREAM_LOADINGS_Y);
    let rows = contaminated_rows(n, c, seed)?;
    let bad = flags(n, &rows);
    let mut x = DMatrix::zeros(n, p.snp_dim);
    let mut y = DMatrix::zeros(n, p.voxel_dim);
    for i in 0..n {
        let mut rng = stream(seed, i as u64);
        let u = normal(&mut rng);
        let noise = if bad[i] { p.contaminated_noise } else { p.noise };
        for k in 0..p.snp_dim {
            let sd = (p.signal * p.signal * bx[k] * bx[k] + p.noise * p.noise).sqrt();
            let latent = (p.signal * u * bx[k] + noise * normal(&mut rng)) / sd;
            x[(i, k)] = if latent < p.snp_cuts[0] {
                0.0
            } else if latent < p.snp_cuts[1] {
                1.0
            } else {
                2.0
            };
        }
        for k in 0..p.voxel_dim {
            y[(i, k)] = p.signal * u * by[k] + noise * normal(&mut rng);
        }
    }
    Ok(finish(x, Some(y), rows, seed, GeneratorSpec::Smsd { n, params: *p }, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tcsd_points_stay_near_their_circles() {
        let d = gen_tcsd(4000, 3000, 3000, Contamination::None, 1).unwrap();
        for i in 0..10_000 {
            let r = if i < 4000 { 1.0 } else if i < 7000 { 0.5 } else { 0.25 };
            let norm = d.x.row(i).norm();
            assert!((norm - r).abs() <= 0.5, "row {i}: {norm}");
        }
        assert!(d.contaminated_indices.is_empty());
    }

    #[test]
    fn tcsd_empty_groups_and_repeatability() {
        let d = gen_tcsd(0, 10, 0, Contamination::None, 2).unwrap();
        assert_eq!(d.x.nrows(), 10);
        let mean_r: f64 = (0..10).map(|i| d.x.row(i).norm()).sum::<f64>() / 10.0;
        assert!((mean_r - 0.5).abs() < 0.1);
        assert_eq!(gen_tcsd(5, 5, 5, Contamination::mixture5(), 3).unwrap(), gen_tcsd(5, 5, 5, Contamination::mixture5(), 3).unwrap());
    }

    #[test]
    fn contaminated_rows_share_draws_with_the_ideal_rows() {
        let ideal = gen_tcsd(50, 50, 50, Contamination::None, 4).unwrap();
        let cd = gen_tcsd(50, 50, 50, Contamination::mixture5(), 4).unwrap();
        assert_eq!(cd.contaminated_indices.len(), 8);
        for i in 0..150 {
            let same = ideal.x.row(i) == cd.x.row(i);
            assert_eq!(same, !cd.contaminated_indices.contains(&i));
        }
    }

    #[test]
    fn mixture_rate_within_one_row() {
        for n in [10, 37, 100, 151] {
            let d = gen_sfsd(n, Contamination::Mixture { rate: 0.05 }, 5).unwrap();
            let frac = d.contaminated_indices.len() as f64 / n as f64;
            assert!((frac - 0.05).abs() <= 1.0 / n as f64);
            assert!(d.contaminated_indices.iter().all(|&i| i < n));
        }
        let d = gen_sfsd(20, Contamination::Shift, 5).unwrap();
        assert_eq!(d.contaminated_indices, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn sfsd_amplitudes_and_noise_ratio() {
        let d = gen_sfsd(1500, Contamination::None, 6).unwrap();
        for i in 0..1500 {
            for k in 1..10 {
                assert!(d.x[(i, k)].abs() <= (k + 1) as f64 + 0.5);
            }
        }
        // Paired draws: the difference of the two versions is (√10 − 0.1)·ε.
        let cd = gen_sfsd(1500, Contamination::Shift, 6).unwrap();
        let scale = 10f64.sqrt() - 0.1;
        for k in 0..10 {
            let var = (0..1500).map(|i| (cd.x[(i, k)] - d.x[(i, k)]).powi(2)).sum::<f64>() / 1500.0;
            assert!((var / (scale * scale) - 1.0).abs() < 0.15, "column {k}: {var}");
        }
    }

    #[test]
    fn mgsd_moments() {
        let id = gen_mgsd(1000, Contamination::None, 8, &MgsdSigma::Block { within: 0.0, cross: 0.0 }).unwrap();
        let y = id.y.as_ref().unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let xa: Vec<f64> = id.x.column(a).iter().cloned().collect();
                let yb: Vec<f64> = y.column(b).iter().cloned().collect();
                assert!(crate::pearson(&xa, &yb).unwrap().abs() <= 0.1);
            }
        }
        let d = gen_mgsd(1000, Contamination::None, 9, &MgsdSigma::default()).unwrap();
        let cd = gen_mgsd(1000, Contamination::Shift, 9, &MgsdSigma::default()).unwrap();
        for k in 0..6 {
            assert!(d.x.column(k).mean().abs() <= 0.1);
            assert!((cd.x.column(k).mean() - 1.0).abs() <= 0.1);
        }
        let bad = MgsdSigma::Block { within: 0.9, cross: 0.5 };
        assert!(gen_mgsd(10, Contamination::None, 1, &bad).is_err());
    }

    #[test]
    fn scfsd_ranges_and_pythagoras() {
        let d = gen_scfsd(300, Contamination::None, 10).unwrap();
        let y = d.y.as_ref().unwrap();
        assert!(d.x.iter().chain(y.iter()).all(|v| v.abs() <= 1.5));
        let mean: f64 = d.x.iter().zip(y.iter()).map(|(a, b)| a * a + b * b).sum::<f64>() / (300.0 * 100.0);
        assert!((0.9..=1.15).contains(&mean), "{mean}");
    }

    #[test]
    fn smsd_shapes_genotypes_and_repeatability() {
        let p = SmsdParams { snp_dim: 50, voxel_dim: 40, ..Default::default() };
        let d = gen_smsd(30, &p, Contamination::mixture5(), 11).unwrap();
        assert_eq!(d.x.shape(), (30, 50));
        assert_eq!(d.y.as_ref().unwrap().shape(), (30, 40));
        assert!(d.x.iter().all(|&v| v == 0.0 || v == 1.0 || v == 2.0));
        assert_eq!(d, gen_smsd(30, &p, Contamination::mixture5(), 11).unwrap());
        assert!(gen_smsd(30, &SmsdParams { noise: 0.0, ..p }, Contamination::None, 1).is_err());
    }

    #[test]
    fn contamination_parsing() {
        assert_eq!("none".parse::<Contamination>().unwrap(), Contamination::None);
        assert_eq!("mixture:0.1".parse::<Contamination>().unwrap(), Contamination::Mixture { rate: 0.1 });
        assert!("mixture:2".parse::<Contamination>().is_err());
        assert_eq!(Contamination::mixture5().to_string().parse::<Contamination>().unwrap(), Contamination::mixture5());
    }
}
