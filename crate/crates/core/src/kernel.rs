//! Kernels, Gram matrices and (weighted) centering.
//!
//! Data matrices hold one sample per row.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::linalg::{check_simplex, check_square, lower_median};

/// Distance used by the Laplacian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    L2,
}

/// A kernel with fully resolved hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// `(⟨x, x′⟩ + offset)^degree`.
    Polynomial { degree: u32, offset: f64 },
    /// `exp(−‖x − x′‖² / (2σ²))`.
    Gaussian { bandwidth: f64 },
    /// `exp(−d(x, x′) / σ)`.
    Laplacian { bandwidth: f64, metric: Metric },
}

impl KernelSpec {
    pub fn polynomial(degree: u32) -> Self {
        Self::Polynomial { degree, offset: 1.0 }
    }

    pub fn gaussian(bandwidth: f64) -> Self {
        Self::Gaussian { bandwidth }
    }

    pub fn laplacian(bandwidth: f64) -> Self {
        Self::Laplacian { bandwidth, metric: Metric::L1 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Linear => Ok(()),
            Self::Polynomial { degree, offset } => {
                if degree == 0 || !offset.is_finite() {
                    Err(Error::Input("polynomial degree must be ≥ 1 and offset finite".into()))
                } else {
                    Ok(())
                }
            }
            Self::Gaussian { bandwidth } | Self::Laplacian { bandwidth, .. } => {
                if bandwidth.is_finite() && bandwidth > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Input(format!("bandwidth must be positive, got {bandwidth}")))
                }
            }
        }
    }

    /// Kernel value between two points.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Self::Linear => dot(a, b),
            Self::Polynomial { degree, offset } => (dot(a, b) + offset).powi(degree as i32),
            Self::Gaussian { bandwidth } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            Self::Laplacian { bandwidth, metric } => {
                let d = match metric {
                    Metric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>(),
                    Metric::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
                };
                (-d / bandwidth).exp()
            }
        }
    }

    /// Whether `k(x, x)` is bounded over the input space.
    pub fn is_bounded(&self) -> bool {
        matches!(self, Self::Gaussian { .. } | Self::Laplacian { .. })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear => write!(f, "linear"),
            Self::Polynomial { degree, offset } => write!(f, "poly:{degree}:{offset}"),
            Self::Gaussian { bandwidth } => write!(f, "gaussian:{bandwidth}"),
            Self::Laplacian { bandwidth, metric: Metric::L1 } => write!(f, "laplacian:{bandwidth}"),
            Self::Laplacian { bandwidth, metric: Metric::L2 } => write!(f, "laplacian:{bandwidth}:l2"),
        }
    }
}

/// Bandwidth choice before it is resolved against data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    Median,
}

/// A kernel whose bandwidth may be chosen from the data by the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Polynomial { degree: u32, offset: f64 },
    Gaussian { bandwidth: Bandwidth },
    Laplacian { bandwidth: Bandwidth, metric: Metric },
}

impl KernelChoice {
    pub fn gaussian_median() -> Self {
        Self::Gaussian { bandwidth: Bandwidth::Median }
    }

    /// Fix the hyperparameters, computing a median bandwidth from `x` if requested.
    pub fn resolve(&self, x: &DMatrix<f64>) -> Result<KernelSpec> {
        let bw = |b: Bandwidth| -> Result<f64> {
            match b {
                Bandwidth::Fixed(v) => Ok(v),
                Bandwidth::Median => median_bandwidth(x),
            }
        };
        let spec = match *self {
            Self::Linear => KernelSpec::Linear,
            Self::Polynomial { degree, offset } => KernelSpec::Polynomial { degree, offset },
            Self::Gaussian { bandwidth } => KernelSpec::Gaussian { bandwidth: bw(bandwidth)? },
            Self::Laplacian { bandwidth, metric } => {
                KernelSpec::Laplacian { bandwidth: bw(bandwidth)?, metric }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<KernelSpec> for KernelChoice {
    fn from(k: KernelSpec) -> Self {
        match k {
            KernelSpec::Linear => Self::Linear,
            KernelSpec::Polynomial { degree, offset } => Self::Polynomial { degree, offset },
            KernelSpec::Gaussian { bandwidth } => Self::Gaussian { bandwidth: Bandwidth::Fixed(bandwidth) },
            KernelSpec::Laplacian { bandwidth, metric } => {
                Self::Laplacian { bandwidth: Bandwidth::Fixed(bandwidth), metric }
            }
        }
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bw = |b: &Bandwidth| match b {
            Bandwidth::Fixed(v) => v.to_string(),
            Bandwidth::Median => "median".to_string(),
        };
        match self {
            Self::Linear => write!(f, "linear"),
            Self::Polynomial { degree, offset } => write!(f, "poly:{degree}:{offset}"),
            Self::Gaussian { bandwidth } => write!(f, "gaussian:{}", bw(bandwidth)),
            Self::Laplacian { bandwidth, metric: Metric::L1 } => write!(f, "laplacian:{}", bw(bandwidth)),
            Self::Laplacian { bandwidth, metric: Metric::L2 } => {
                write!(f, "laplacian:{}:l2", bw(bandwidth))
            }
        }
    }
}

/// Parses `linear`, `poly:P[:OFFSET]`, `gaussian:SIGMA|median`, `laplacian[:SIGMA|median][:l1|l2]`.
impl FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Input(format!("unknown kernel `{s}`"));
        let num = |a: &str| a.parse::<f64>().map_err(|_| bad());
        let bw = |a: Option<&&str>, default: Bandwidth| -> Result<Bandwidth> {
            match a {
                None => Ok(default),
                Some(&"median") => Ok(Bandwidth::Median),
                Some(v) => Ok(Bandwidth::Fixed(num(v)?)),
            }
        };
        let choice = match parts[0].to_ascii_lowercase().as_str() {
            "linear" | "poly1" if parts.len() == 1 => Self::Linear,
            "poly" | "polynomial" => {
                let degree = parts.get(1).ok_or_else(bad)?.parse::<u32>().map_err(|_| bad())?;
                let offset = parts.get(2).map(|v| num(v)).transpose()?.unwrap_or(1.0);
                Self::Polynomial { degree, offset }
            }
            "poly2" if parts.len() == 1 => Self::Polynomial { degree: 2, offset: 1.0 },
            "poly3" if parts.len() == 1 => Self::Polynomial { degree: 3, offset: 1.0 },
            "gaussian" | "rbf" => Self::Gaussian { bandwidth: bw(parts.get(1), Bandwidth::Median)? },
            "laplacian" => {
                let metric = match parts.get(2).map(|m| m.to_ascii_lowercase()) {
                    None => Metric::L1,
                    Some(m) if m == "l1" => Metric::L1,
                    Some(m) if m == "l2" => Metric::L2,
                    Some(_) => return Err(bad()),
                };
                Self::Laplacian { bandwidth: bw(parts.get(1), Bandwidth::Fixed(1.0))?, metric }
            }
            _ => return Err(bad()),
        };
        if let Self::Polynomial { degree, offset } = choice {
            KernelSpec::Polynomial { degree, offset }.validate()?;
        }
        if let Self::Gaussian { bandwidth: Bandwidth::Fixed(b) } | Self::Laplacian { bandwidth: Bandwidth::Fixed(b), .. } = choice {
            KernelSpec::Gaussian { bandwidth: b }.validate()?;
        }
        Ok(choice)
    }
}

fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Input("data matrix must have at least one row and column".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("data contains non-finite entries".into()));
    }
    Ok(())
}

fn rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).iter().cloned().collect()).collect()
}

/// Gram matrix `K_ij = k(x_i, x_j)`, symmetric by construction.
pub fn gram(spec: &KernelSpec, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spec.validate()?;
    check_finite(x)?;
    let r = rows(x);
    let n = r.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| spec.eval(&r[i], &r[j])).collect())
        .collect();
    let mut k = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    Ok(k)
}

/// Cross-Gram matrix `K_ab[t, i] = k(a_t, b_i)`.
pub fn cross_gram(spec: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spec.validate()?;
    check_finite(a)?;
    check_finite(b)?;
    if a.ncols() != b.ncols() {
        return Err(contract(format!(
            "dimension mismatch: {} vs {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (rows(a), rows(b));
    let vals: Vec<Vec<f64>> = ra
        .par_iter()
        .map(|p| rb.iter().map(|q| spec.eval(p, q)).collect())
        .collect();
    Ok(DMatrix::from_fn(ra.len(), rb.len(), |t, i| vals[t][i]))
}

/// Median of the nonzero pairwise Euclidean distances (lower median for even counts).
///
/// Zero distances from exact duplicates are dropped.
pub fn median_bandwidth(x: &DMatrix<f64>) -> Result<f64> {
    check_finite(x)?;
    let r = rows(x);
    let n = r.len();
    if n < 2 {
        return Err(Error::Degenerate("median bandwidth needs at least two points".into()));
    }
    let d: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let r = &r;
            (i + 1..n).map(move |j| {
                r[i].iter().zip(&r[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            })
        })
        .filter(|&v| v > 0.0)
        .collect();
    lower_median(&d).ok_or_else(|| Error::Degenerate("all points are identical".into()))
}

/// A Gram matrix together with the simplex weights that define its centering.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCenteredGram {
    pub raw: DMatrix<f64>,
    pub weights: Vec<f64>,
    /// `(I − 1wᵀ) K (I − 1wᵀ)ᵀ`.
    pub centered: DMatrix<f64>,
}

impl WeightedCenteredGram {
    pub fn n(&self) -> usize {
        self.raw.nrows()
    }

    /// Center the kernel row(s) of new points against this Gram's weights.
    pub fn center_test(&self, k_test: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        center_test(k_test, &self.raw, &self.weights)
    }

    /// Centered self-similarity `k̃(x′, x′)` of a new point given its raw row and `k(x′, x′)`.
    pub fn center_self(&self, row: &[f64], self_value: f64) -> Result<f64> {
        let n = self.n();
        if row.len() != n {
            return Err(contract("kernel row length does not match the sample"));
        }
        let w = DVector::from_column_slice(&self.weights);
        let wr: f64 = row.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        let wkw = (&self.raw * &w).dot(&w);
        Ok(self_value - 2.0 * wr + wkw)
    }
}

/// Weighted centering `K̃ = (I − 1wᵀ) K (I − 1wᵀ)ᵀ`.
pub fn center(k: &DMatrix<f64>, w: &[f64]) -> Result<WeightedCenteredGram> {
    let n = check_square(k, "Gram matrix")?;
    check_simplex(w, n, 1e-9)?;
    let wv = DVector::from_column_slice(w);
    let kw = k * &wv;
    let s = kw.dot(&wv);
    let mut c = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = k[(i, j)] - kw[i] - kw[j] + s;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(WeightedCenteredGram { raw: k.clone(), weights: w.to_vec(), centered: c })
}

/// Standard centering with uniform weights.
pub fn center_uniform(k: &DMatrix<f64>) -> Result<WeightedCenteredGram> {
    let n = check_square(k, "Gram matrix")?;
    center(k, &vec![1.0 / n as f64; n])
}

/// Test-point centering `K_test − 1wᵀK − K_test w 1ᵀ + (wᵀKw) 11ᵀ`.
pub fn center_test(k_test: &DMatrix<f64>, k: &DMatrix<f64>, w: &[f64]) -> Result<DMatrix<f64>> {
    let n = check_square(k, "Gram matrix")?;
    if k_test.ncols() != n {
        return Err(contract(format!(
            "test kernel has {} columns, training sample has {n}",
            k_test.ncols()
        )));
    }
    check_simplex(w, n, 1e-9)?;
    let wv = DVector::from_column_slice(w);
    let kw = k * &wv;
    let s = kw.dot(&wv);
    let tw = k_test * &wv;
    Ok(DMatrix::from_fn(k_test.nrows(), n, |t, i| {
        k_test[(t, i)] - kw[i] - tw[t] + s
    }))
}
