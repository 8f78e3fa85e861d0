//! Sensitivity metrics and the experiment drivers built on them.
//!
//! Each driver pairs an ideal dataset with its contaminated version drawn
//! from the same seed, fits the standard and robust estimators on both and
//! aggregates a metric over replicates. Replicates run in parallel; every
//! replicate owns a seed derived from the base seed, so results do not depend
//! on the thread count.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::influence::{influence_report, InfluenceOptions, InfluenceReport};
use crate::kcca::{fit_kcca, project, KccaConfig, KccaOptions, Method, RobustOptions};
use crate::kernel::{center, center_uniform, cross_gram, gram, Bandwidth, KernelChoice, KernelSpec, Metric as KernelMetric};
use crate::linalg::sorted_sum;
use crate::loss::LossSpec;
use crate::robust_cov::{fit_robust_co, hs_distance_sq, operator_matrix, CrossBlocks};
use crate::robust_mean::fit_robust_mean;
use crate::synth::{generate, Contamination, Dataset, GeneratorSpec, MgsdSigma, SmsdParams};
use crate::KirwlsOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EtaKco,
    EtaRkco,
    EtaKcor,
    EtaRkcor,
    EtaRho,
    EtaF,
    CvGap,
}

/// Matrix norm for the contamination ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Frobenius,
    /// Largest absolute entry.
    MaxModulus,
}

impl Norm {
    pub fn apply(&self, m: &DMatrix<f64>) -> f64 {
        match self {
            Self::Frobenius => m.norm(),
            Self::MaxModulus => m.amax(),
        }
    }
}

/// Kernels and fitting configuration of a kernel CCA experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcaSetup {
    pub kernel_x: KernelChoice,
    pub kernel_y: KernelChoice,
    pub config: KccaConfig,
}

impl CcaSetup {
    /// Gaussian kernels with median bandwidths and κ = 1e-5.
    pub fn gaussian(method: Method) -> Self {
        let options = KccaOptions::default();
        let config = match method {
            Method::Standard => KccaConfig::standard(options),
            Method::Robust => KccaConfig::robust(options, RobustOptions::default()),
        };
        Self { kernel_x: KernelChoice::gaussian_median(), kernel_y: KernelChoice::gaussian_median(), config }
    }

    pub fn with_method(&self, method: Method) -> Self {
        let mut s = *self;
        s.config.method = method;
        s
    }
}

/// Everything needed to rerun one metric aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: GeneratorSpec,
    pub contamination: Contamination,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel: Option<KernelChoice>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub setup: Option<CcaSetup>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub loss: Option<LossSpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub norm: Option<Norm>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub population: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub folds: Option<usize>,
}

impl RunConfig {
    fn new(dataset: GeneratorSpec, contamination: Contamination, seed: u64) -> Self {
        Self { dataset, contamination, seed, kernel: None, setup: None, loss: None, norm: None, population: None, folds: None }
    }
}

/// A metric over replicates with its summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRun {
    pub metric: Metric,
    pub replicates: usize,
    pub per_replicate: Vec<f64>,
    /// Mean of `per_replicate`, summed in sorted order.
    pub mean: f64,
    /// Sample standard deviation; 0 for a single replicate.
    pub sd: f64,
    pub config: RunConfig,
}

impl MetricRun {
    pub fn new(metric: Metric, per_replicate: Vec<f64>, config: RunConfig) -> Result<Self> {
        if per_replicate.is_empty() {
            return Err(Error::Input("a metric run needs at least one replicate".into()));
        }
        let (mean, sd) = mean_sd(&per_replicate);
        Ok(Self { metric, replicates: per_replicate.len(), per_replicate, mean, sd, config })
    }
}

/// Mean and sample standard deviation, independent of the input order.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = sorted_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (sorted_sum(&dev) / (n - 1.0)).sqrt())
}

/// Seed of replicate `index` under `base`, via the splitmix64 finalizer.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A population sample with its Gram matrix, reused across sample sizes.
#[derive(Debug, Clone)]
pub struct Population {
    pub spec: KernelSpec,
    pub x: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl Population {
    pub fn new(spec: KernelSpec, x: DMatrix<f64>) -> Result<Self> {
        let gram = gram(&spec, &x)?;
        Ok(Self { spec, x, gram })
    }

    pub fn size(&self) -> usize {
        self.x.nrows()
    }
}

/// Squared HS distance between the weighted sample second-moment operator
/// `Σ_i w_i Φ(X_i)⊗Φ(X_i)` and the uniform population operator.
///
/// Uniform weights give η_KCO, robust CO weights give η_RKCO.
pub fn eta_population_distance(sample: &DMatrix<f64>, weights: &[f64], population: &Population) -> Result<f64> {
    if sample.ncols() != population.x.ncols() {
        return Err(contract("sample and population differ in dimension"));
    }
    if population.size() < sample.nrows() {
        return Err(Error::Input("the population must be at least as large as the sample".into()));
    }
    let blocks = CrossBlocks {
        aa: gram(&population.spec, sample)?,
        ab: cross_gram(&population.spec, sample, &population.x)?,
        bb: population.gram.clone(),
    };
    let big_n = population.size();
    hs_distance_sq(weights, &vec![1.0 / big_n as f64; big_n], &blocks, &blocks)
}

/// Weights of the standard (uniform) or robust kernel CO on a Gram matrix.
pub fn co_weights(k: &DMatrix<f64>, method: Method, loss: &LossSpec, opts: &KirwlsOptions) -> Result<Vec<f64>> {
    let n = k.nrows();
    match method {
        Method::Standard => Ok(vec![1.0 / n as f64; n]),
        Method::Robust => Ok(fit_robust_co(&center_uniform(k)?, loss, opts)?.weights),
    }
}

/// The sample-dual matrix `K̃ diag(w) K̃` of the standard or robust kernel CO.
///
/// The robust operator centers at the robust kernel mean and weights by the
/// robust CO fit.
pub fn co_operator(k: &DMatrix<f64>, method: Method, loss: &LossSpec, opts: &KirwlsOptions) -> Result<DMatrix<f64>> {
    match method {
        Method::Standard => {
            let g = center_uniform(k)?;
            operator_matrix(&g.centered, &g.centered, &vec![1.0 / k.nrows() as f64; k.nrows()])
        }
        Method::Robust => {
            let mean = fit_robust_mean(k, loss, opts)?;
            let g = center(k, &mean.weights)?;
            let fit = fit_robust_co(&g, loss, opts)?;
            operator_matrix(&g.centered, &g.centered, &fit.weights)
        }
    }
}

/// `|1 − ‖V_ideal‖ / ‖V_contaminated‖|`.
pub fn eta_contamination_ratio(ideal: &DMatrix<f64>, contaminated: &DMatrix<f64>, norm: Norm) -> Result<f64> {
    ratio_gap(norm.apply(ideal), norm.apply(contaminated))
}

fn ratio_gap(ideal: f64, contaminated: f64) -> Result<f64> {
    if !(contaminated > 0.0) {
        return Err(Error::Degenerate("the contaminated norm is zero".into()));
    }
    Ok((1.0 - ideal / contaminated).abs())
}

/// `(η_ρ, η_f)` from the influence reports of an ideal and a contaminated fit.
///
/// η_ρ compares the Frobenius norms of the ρ² influence vectors; η_f compares
/// those of `EIF(·, f_X) − EIF(·, f_Y)`.
pub fn eta_rho_and_f(ideal: &InfluenceReport, contaminated: &InfluenceReport) -> Result<(f64, f64)> {
    if ideal.component != contaminated.component || ideal.eif_rho.len() != contaminated.eif_rho.len() {
        return Err(contract("reports differ in component or sample size"));
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let eta_rho = ratio_gap(norm(&ideal.eif_rho), norm(&contaminated.eif_rho))?;
    let diff = |r: &InfluenceReport| -> Result<f64> {
        match (&r.eif_fx, &r.eif_fy) {
            (Some(fx), Some(fy)) => Ok((fx - fy).norm()),
            _ => Err(Error::Input("η_f needs reports with variate influence".into())),
        }
    };
    let eta_f = ratio_gap(diff(ideal)?, diff(contaminated)?)?;
    Ok((eta_rho, eta_f))
}

fn paired_grams(data: &Dataset, kx: &KernelSpec, ky: &KernelSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let y = data.y.as_ref().ok_or_else(|| Error::Input("the dataset has a single view".into()))?;
    Ok((gram(kx, &data.x)?, gram(ky, y)?))
}

fn resolve_pair(setup: &CcaSetup, data: &Dataset) -> Result<(KernelSpec, KernelSpec)> {
    let y = data.y.as_ref().ok_or_else(|| Error::Input("the dataset has a single view".into()))?;
    Ok((setup.kernel_x.resolve(&data.x)?, setup.kernel_y.resolve(y)?))
}

fn submatrix(k: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| k[(rows[i], cols[j])])
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Cross-validated `|ρ_1(train) − corr_1(test)|`, one value per fold.
///
/// Kernel bandwidths are resolved on each training fold.
pub fn cv_correlation_gap(data: &Dataset, setup: &CcaSetup, folds: usize, seed: u64) -> Result<MetricRun> {
    let n = data.x.nrows();
    if folds < 2 || n < 2 * folds {
        return Err(Error::Input(format!("{folds}-fold cross-validation needs n ≥ {}", 2 * folds.max(2))));
    }
    let y = data.y.as_ref().ok_or_else(|| Error::Input("the dataset has a single view".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let gaps = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
            let test: Vec<usize> = order[lo..hi].to_vec();
            let mut train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
            train.sort_unstable();
            let (xt, yt) = (select_rows(&data.x, &train), select_rows(y, &train));
            let (sx, sy) = (setup.kernel_x.resolve(&xt)?, setup.kernel_y.resolve(&yt)?);
            let (kx_all, ky_all) = (gram(&sx, &data.x)?, gram(&sy, y)?);
            let (kx, ky) = (submatrix(&kx_all, &train, &train), submatrix(&ky_all, &train, &train));
            let model = fit_kcca(&kx, &ky, &setup.config)?;
            let (tx, ty) = model.center_test(
                &submatrix(&kx_all, &test, &train),
                &submatrix(&ky_all, &test, &train),
                &kx,
                &ky,
            )?;
            let corr = project(&model, &tx, &ty)?.correlations[0]
                .ok_or_else(|| Error::Degenerate(format!("fold {f} has constant test scores")))?;
            Ok((model.rho[0] - corr).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut config = RunConfig::new(data.spec.clone(), data.contamination, data.seed);
    config.setup = Some(*setup);
    config.folds = Some(folds);
    MetricRun::new(Metric::CvGap, gaps, config)
}

/// Experiment sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    pub seed: u64,
    pub contamination: Contamination,
    pub table1_n: usize,
    pub table1_replicates: usize,
    pub table2_sizes: Vec<usize>,
    pub table2_replicates: usize,
    pub table3_n: usize,
    /// Datasets per cell; each contributes one gap per fold.
    pub table3_replicates: usize,
    pub folds: usize,
    pub fig4_populations: Vec<usize>,
    pub fig4_sizes: Vec<usize>,
    pub fig4_replicates: usize,
    pub smsd: SmsdParams,
    pub mgsd_sigma: MgsdSigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Full,
}

const FIG4_SIZES: [usize; 12] = [15, 30, 45, 60, 90, 120, 150, 180, 210, 240, 270, 300];

impl BenchSettings {
    pub fn new(scale: Scale, seed: u64) -> Self {
        match scale {
            Scale::Desk => Self {
                seed,
                contamination: Contamination::mixture5(),
                table1_n: 500,
                table1_replicates: 25,
                table2_sizes: vec![100, 500],
                table2_replicates: 25,
                table3_n: 300,
                table3_replicates: 5,
                folds: 10,
                fig4_populations: vec![1500],
                fig4_sizes: FIG4_SIZES.to_vec(),
                fig4_replicates: 20,
                smsd: SmsdParams::default(),
                mgsd_sigma: MgsdSigma::default(),
            },
            Scale::Full => Self {
                seed,
                contamination: Contamination::mixture5(),
                table1_n: 1500,
                table1_replicates: 100,
                table2_sizes: vec![100, 500, 1000],
                table2_replicates: 100,
                table3_n: 500,
                table3_replicates: 100,
                folds: 10,
                fig4_populations: vec![1500, 3000, 6000, 9000],
                fig4_sizes: FIG4_SIZES.to_vec(),
                fig4_replicates: 100,
                smsd: SmsdParams::default(),
                mgsd_sigma: MgsdSigma::default(),
            },
        }
    }
}

fn tcsd_thirds(n: usize) -> GeneratorSpec {
    GeneratorSpec::Tcsd { n1: n / 3, n2: n / 3, n3: n - 2 * (n / 3) }
}

/// The five kernels compared on the single-view datasets.
pub fn table1_kernels() -> Vec<(&'static str, KernelChoice)> {
    vec![
        ("Poly-1", KernelChoice::Linear),
        ("Poly-2", KernelChoice::Polynomial { degree: 2, offset: 1.0 }),
        ("Poly-3", KernelChoice::Polynomial { degree: 3, offset: 1.0 }),
        ("Gaussian", KernelChoice::gaussian_median()),
        ("Laplacian", KernelChoice::Laplacian { bandwidth: Bandwidth::Fixed(1.0), metric: KernelMetric::L1 }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub dataset: String,
    pub norm: Norm,
    pub kernel: String,
    pub standard: MetricRun,
    pub robust: MetricRun,
}

/// Contamination ratios of the standard and robust kernel CO on one dataset
/// design for one kernel, under both norms: `[F std, F rob, M std, M rob]` per replicate.
pub fn contamination_ratios(
    spec: &GeneratorSpec,
    kernel: &KernelChoice,
    loss: &LossSpec,
    contamination: Contamination,
    seeds: &[u64],
) -> Result<Vec<[f64; 4]>> {
    let opts = KirwlsOptions::default();
    seeds
        .par_iter()
        .map(|&s| {
            let ideal = generate(spec, Contamination::None, s)?;
            let cont = generate(spec, contamination, s)?;
            let k = kernel.resolve(&ideal.x)?;
            let (gi, gc) = (gram(&k, &ideal.x)?, gram(&k, &cont.x)?);
            let mut out = [0.0; 4];
            for (m, method) in [Method::Standard, Method::Robust].into_iter().enumerate() {
                let vi = co_operator(&gi, method, loss, &opts)?;
                let vc = co_operator(&gc, method, loss, &opts)?;
                out[m] = eta_contamination_ratio(&vi, &vc, Norm::Frobenius)?;
                out[2 + m] = eta_contamination_ratio(&vi, &vc, Norm::MaxModulus)?;
            }
            Ok(out)
        })
        .collect()
}

/// Standard versus robust kernel CO contamination ratios on TCSD and SFSD.
pub fn table1(settings: &BenchSettings) -> Result<Vec<Table1Row>> {
    let n = settings.table1_n;
    let loss = LossSpec::huber_median();
    let seeds: Vec<u64> = (0..settings.table1_replicates as u64).map(|r| replicate_seed(settings.seed, r)).collect();
    let mut rows = Vec::new();
    for (name, spec) in [("TCSD", tcsd_thirds(n)), ("SFSD", GeneratorSpec::Sfsd { n })] {
        let mut by_norm: Vec<Vec<Table1Row>> = vec![Vec::new(), Vec::new()];
        for (label, kernel) in table1_kernels() {
            let vals = contamination_ratios(&spec, &kernel, &loss, settings.contamination, &seeds)?;
            for (ni, norm) in [Norm::Frobenius, Norm::MaxModulus].into_iter().enumerate() {
                let mut config = RunConfig::new(spec.clone(), settings.contamination, settings.seed);
                config.kernel = Some(kernel);
                config.loss = Some(loss);
                config.norm = Some(norm);
                let col = |m: usize| vals.iter().map(|v| v[2 * ni + m]).collect::<Vec<f64>>();
                by_norm[ni].push(Table1Row {
                    dataset: name.into(),
                    norm,
                    kernel: label.into(),
                    standard: MetricRun::new(Metric::EtaKcor, col(0), config.clone())?,
                    robust: MetricRun::new(Metric::EtaRkcor, col(1), config)?,
                });
            }
        }
        rows.extend(by_norm.into_iter().flatten());
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub dataset: String,
    pub n: usize,
    pub eta_rho_standard: MetricRun,
    pub eta_rho_robust: MetricRun,
    pub eta_f_standard: MetricRun,
    pub eta_f_robust: MetricRun,
}

/// `[η_ρ std, η_ρ rob, η_f std, η_f rob]` per replicate for one paired design.
///
/// Kernels are resolved on the ideal sample and reused for its contaminated twin.
pub fn influence_ratios(
    spec: &GeneratorSpec,
    setup: &CcaSetup,
    contamination: Contamination,
    seeds: &[u64],
) -> Result<Vec<[f64; 4]>> {
    let opts = InfluenceOptions::default();
    seeds
        .par_iter()
        .map(|&s| {
            let ideal = generate(spec, Contamination::None, s)?;
            let cont = generate(spec, contamination, s)?;
            let (sx, sy) = resolve_pair(setup, &ideal)?;
            let (kxi, kyi) = paired_grams(&ideal, &sx, &sy)?;
            let (kxc, kyc) = paired_grams(&cont, &sx, &sy)?;
            let mut out = [0.0; 4];
            for (m, method) in [Method::Standard, Method::Robust].into_iter().enumerate() {
                let cfg = setup.with_method(method).config;
                let mi = fit_kcca(&kxi, &kyi, &cfg)?;
                let mc = fit_kcca(&kxc, &kyc, &cfg)?;
                let ri = influence_report(&mi, &kxi, &kyi, 0, &opts)?;
                let rc = influence_report(&mc, &kxc, &kyc, 0, &opts)?;
                let (er, ef) = eta_rho_and_f(&ri, &rc)?;
                out[m] = er;
                out[2 + m] = ef;
            }
            Ok(out)
        })
        .collect()
}

/// η_ρ and η_f of standard and robust kernel CCA on MGSD, SCFSD and SMSD.
pub fn table2(settings: &BenchSettings) -> Result<Vec<Table2Row>> {
    let setup = CcaSetup::gaussian(Method::Standard);
    let seeds: Vec<u64> = (0..settings.table2_replicates as u64).map(|r| replicate_seed(settings.seed, r)).collect();
    let mut rows = Vec::new();
    for name in ["MGSD", "SCFSD", "SMSD"] {
        for &n in &settings.table2_sizes {
            let spec = match name {
                "MGSD" => GeneratorSpec::Mgsd { n, sigma: settings.mgsd_sigma.clone() },
                "SCFSD" => GeneratorSpec::Scfsd { n },
                _ => GeneratorSpec::Smsd { n, params: settings.smsd },
            };
            let vals = influence_ratios(&spec, &setup, settings.contamination, &seeds)?;
            let mut config = RunConfig::new(spec, settings.contamination, settings.seed);
            config.setup = Some(setup);
            let col = |k: usize| vals.iter().map(|v| v[k]).collect::<Vec<f64>>();
            rows.push(Table2Row {
                dataset: name.into(),
                n,
                eta_rho_standard: MetricRun::new(Metric::EtaRho, col(0), config.clone())?,
                eta_rho_robust: MetricRun::new(Metric::EtaRho, col(1), config.clone())?,
                eta_f_standard: MetricRun::new(Metric::EtaF, col(2), config.clone())?,
                eta_f_robust: MetricRun::new(Metric::EtaF, col(3), config)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub dataset: String,
    /// `ID` or `CD`.
    pub condition: String,
    pub standard: MetricRun,
    pub robust: MetricRun,
}

/// Cross-validated correlation gaps pooled over several datasets.
pub fn pooled_cv_gap(
    spec: &GeneratorSpec,
    contamination: Contamination,
    setup: &CcaSetup,
    folds: usize,
    seeds: &[u64],
) -> Result<MetricRun> {
    let runs = seeds
        .par_iter()
        .map(|&s| cv_correlation_gap(&generate(spec, contamination, s)?, setup, folds, s))
        .collect::<Result<Vec<MetricRun>>>()?;
    let gaps: Vec<f64> = runs.iter().flat_map(|r| r.per_replicate.iter().copied()).collect();
    let mut config = runs[0].config.clone();
    config.seed = seeds[0];
    MetricRun::new(Metric::CvGap, gaps, config)
}

/// Train/test correlation gaps of standard and robust kernel CCA on MGSD and SCFSD.
pub fn table3(settings: &BenchSettings) -> Result<Vec<Table3Row>> {
    let n = settings.table3_n;
    let seeds: Vec<u64> = (0..settings.table3_replicates as u64).map(|r| replicate_seed(settings.seed, r)).collect();
    if seeds.is_empty() {
        return Err(Error::Input("table 3 needs at least one replicate".into()));
    }
    let base = CcaSetup::gaussian(Method::Standard);
    let mut rows = Vec::new();
    for (name, spec) in [
        ("MGSD", GeneratorSpec::Mgsd { n, sigma: settings.mgsd_sigma.clone() }),
        ("SCFSD", GeneratorSpec::Scfsd { n }),
    ] {
        for (cond, c) in [("ID", Contamination::None), ("CD", settings.contamination)] {
            rows.push(Table3Row {
                dataset: name.into(),
                condition: cond.into(),
                standard: pooled_cv_gap(&spec, c, &base, settings.folds, &seeds)?,
                robust: pooled_cv_gap(&spec, c, &base.with_method(Method::Robust), settings.folds, &seeds)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub population: usize,
    pub n: usize,
    pub kco: MetricRun,
    pub rkco: MetricRun,
}

/// η_KCO and η_RKCO on TCSD against an ideal population, for every sample size.
///
/// Each replicate draws one population and, for each n, one contaminated sample.
pub fn fig4(settings: &BenchSettings) -> Result<Vec<Fig4Row>> {
    let loss = LossSpec::huber_median();
    let opts = KirwlsOptions::default();
    let mut rows = Vec::new();
    for &big_n in &settings.fig4_populations {
        if let Some(&n) = settings.fig4_sizes.iter().find(|&&n| n > big_n) {
            return Err(Error::Input(format!("sample size {n} exceeds the population {big_n}")));
        }
        // values[r][s] = (η_KCO, η_RKCO) for replicate r and size index s.
        let values = (0..settings.fig4_replicates as u64)
            .into_par_iter()
            .map(|r| {
                let s = replicate_seed(settings.seed ^ big_n as u64, r);
                let pop = generate(&tcsd_thirds(big_n), Contamination::None, s)?;
                let spec = KernelChoice::gaussian_median().resolve(&pop.x)?;
                let population = Population::new(spec, pop.x)?;
                settings
                    .fig4_sizes
                    .iter()
                    .map(|&n| {
                        let sample = generate(&tcsd_thirds(n), settings.contamination, replicate_seed(s, n as u64))?;
                        let k = gram(&spec, &sample.x)?;
                        let uniform = co_weights(&k, Method::Standard, &loss, &opts)?;
                        let robust = co_weights(&k, Method::Robust, &loss, &opts)?;
                        Ok((
                            eta_population_distance(&sample.x, &uniform, &population)?,
                            eta_population_distance(&sample.x, &robust, &population)?,
                        ))
                    })
                    .collect::<Result<Vec<(f64, f64)>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (si, &n) in settings.fig4_sizes.iter().enumerate() {
            let mut config = RunConfig::new(tcsd_thirds(n), settings.contamination, settings.seed);
            config.kernel = Some(KernelChoice::gaussian_median());
            config.loss = Some(loss);
            config.population = Some(big_n);
            let kco: Vec<f64> = values.iter().map(|v| v[si].0).collect();
            let rkco: Vec<f64> = values.iter().map(|v| v[si].1).collect();
            rows.push(Fig4Row {
                population: big_n,
                n,
                kco: MetricRun::new(Metric::EtaKco, kco, config.clone())?,
                rkco: MetricRun::new(Metric::EtaRkco, rkco, config)?,
            });
        }
    }
    Ok(rows)
}
