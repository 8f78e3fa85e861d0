//! `rkcca`: generate benchmark data, fit standard or robust kernel CCA,
//! compute influence index plots and run the sensitivity experiments.
//!
//! Exit codes: 0 success, 1 user error, 2 I/O error, 3 numeric failure.

mod commands;
mod error;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rkcca::bench::{BenchSettings, CcaSetup, Scale};
use rkcca::influence::{InfluenceOptions, RhoInfluence};
use rkcca::kcca::{CenteringMode, InnerInverse, Method, RobustWeighting};
use rkcca::kernel::KernelChoice;
use rkcca::loss::LossSpec;
use rkcca::synth::{Contamination, GeneratorSpec, MgsdSigma, SmsdParams};

use commands::bench::{BenchConfig, Table};
use commands::fit::FitConfig;
use commands::gen::GenConfig;
use commands::influence::InfluenceConfig;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "rkcca", version, about = "Robust kernel CCA, influence functions and benchmarks")]
struct Cli {
    /// Worker threads (default: RKCCA_THREADS, else all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Fit standard or robust kernel CCA to paired CSV files.
    Fit(FitArgs),
    /// Influence of each subject on a canonical correlation, with outlier flags.
    Influence(InfluenceArgs),
    /// Run one of the sensitivity experiments.
    Bench(BenchArgs),
    /// Re-run the command recorded in an output file's header.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetName {
    Tcsd,
    Sfsd,
    Mgsd,
    Scfsd,
    Smsd,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    dataset: DatasetName,
    /// Sample size; for tcsd either a total split into thirds or `n1,n2,n3`.
    #[arg(long)]
    n: String,
    /// none, shift, mixture or mixture:RATE.
    #[arg(long, default_value = "mixture:0.05")]
    contamination: Contamination,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes PREFIX.x.csv, PREFIX.y.csv (paired data) and PREFIX.manifest.csv.
    #[arg(long)]
    out: PathBuf,
    /// MGSD within-block correlation.
    #[arg(long, default_value_t = 0.4)]
    sigma_within: f64,
    /// MGSD correlation between matching variables of the two blocks.
    #[arg(long, default_value_t = 0.5)]
    sigma_cross: f64,
    #[arg(long, default_value_t = 1000)]
    snp_dim: usize,
    #[arg(long, default_value_t = 1000)]
    voxel_dim: usize,
    #[arg(long, default_value_t = 0.5)]
    signal: f64,
    /// SMSD noise level of ideal rows.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// SMSD noise level of contaminated rows.
    #[arg(long, default_value_t = 20.0)]
    contaminated_noise: f64,
    /// SMSD fraction of nonzero loadings.
    #[arg(long, default_value_t = 0.1)]
    sparsity: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Standard,
    Robust,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnerArg {
    Inverse,
    InverseSqrt,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Separate,
    Shared,
}

#[derive(Clone, Copy, ValueEnum)]
enum CenteringArg {
    Robust,
    Uniform,
}

#[derive(Args)]
struct FitArgs {
    /// JSON fit configuration (the `config` line of a model file); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// linear, poly:P[:OFFSET], gaussian[:SIGMA|median], laplacian[:SIGMA|median[:l1|l2]].
    #[arg(long)]
    kernel_x: Option<KernelChoice>,
    #[arg(long)]
    kernel_y: Option<KernelChoice>,
    /// quadratic, huber[:C|median], hampel:C1,C2,C3 or tukey[:C]; plain `huber` uses the median residual.
    #[arg(long)]
    loss: Option<LossSpec>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Number of canonical pairs.
    #[arg(long)]
    components: Option<usize>,
    #[arg(long, value_enum)]
    inner: Option<InnerArg>,
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
    #[arg(long, value_enum)]
    centering: Option<CenteringArg>,
    /// KIRWLS relative objective tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Regularized,
    Displayed,
}

#[derive(Args)]
struct InfluenceArgs {
    #[arg(long)]
    model: PathBuf,
    /// Data files (default: the paths recorded in the model).
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    /// One-based component index.
    #[arg(long, default_value_t = 1)]
    component: usize,
    #[arg(long, value_enum, default_value = "regularized")]
    mode: ModeArg,
    /// Flag subjects farther than K scaled MADs from the median.
    #[arg(long, default_value_t = 3.0)]
    mad_k: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    table: Table,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the replicate count of the chosen table.
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the sample size(s) of the chosen table, e.g. `100,500`; t1 and t3 take one size.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Any file written by rkcca.
    source: PathBuf,
    /// Where to write the reproduced output (a prefix for gen).
    #[arg(long)]
    out: PathBuf,
    /// Fail unless every reproduced file is byte-identical to the original.
    #[arg(long)]
    check: bool,
}

fn gen_config(a: &GenArgs) -> CliResult<GenConfig> {
    let sizes: Vec<usize> = a
        .n
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| CliError::User(format!("bad sample size `{}`", a.n))))
        .collect::<CliResult<_>>()?;
    let single = || -> CliResult<usize> {
        match sizes[..] {
            [n] => Ok(n),
            _ => Err(CliError::User("this dataset takes a single sample size".into())),
        }
    };
    let spec = match a.dataset {
        DatasetName::Tcsd => match sizes[..] {
            [n] => GeneratorSpec::Tcsd { n1: n / 3, n2: n / 3, n3: n - 2 * (n / 3) },
            [n1, n2, n3] => GeneratorSpec::Tcsd { n1, n2, n3 },
            _ => return Err(CliError::User("tcsd takes `--n N` or `--n n1,n2,n3`".into())),
        },
        DatasetName::Sfsd => GeneratorSpec::Sfsd { n: single()? },
        DatasetName::Mgsd => GeneratorSpec::Mgsd {
            n: single()?,
            sigma: MgsdSigma::Block { within: a.sigma_within, cross: a.sigma_cross },
        },
        DatasetName::Scfsd => GeneratorSpec::Scfsd { n: single()? },
        DatasetName::Smsd => GeneratorSpec::Smsd {
            n: single()?,
            params: SmsdParams {
                snp_dim: a.snp_dim,
                voxel_dim: a.voxel_dim,
                signal: a.signal,
                noise: a.noise,
                contaminated_noise: a.contaminated_noise,
                sparsity: a.sparsity,
                ..SmsdParams::default()
            },
        },
    };
    Ok(GenConfig { spec, contamination: a.contamination, seed: a.seed })
}

fn fit_config(a: &FitArgs) -> CliResult<FitConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str::<FitConfig>(&text).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?
        }
        None => {
            let (x, y) = match (&a.x, &a.y) {
                (Some(x), Some(y)) => (x.clone(), y.clone()),
                _ => return Err(CliError::User("fit needs --x and --y (or --config)".into())),
            };
            FitConfig { x, y, setup: CcaSetup::gaussian(Method::Standard) }
        }
    };
    if let Some(x) = &a.x {
        cfg.x = x.clone();
    }
    if let Some(y) = &a.y {
        cfg.y = y.clone();
    }
    let setup = &mut cfg.setup;
    if let Some(m) = a.method {
        setup.config.method = match m {
            MethodArg::Standard => Method::Standard,
            MethodArg::Robust => Method::Robust,
        };
    }
    if let Some(k) = a.kernel_x {
        setup.kernel_x = k;
    }
    if let Some(k) = a.kernel_y {
        setup.kernel_y = k;
    }
    let options = &mut setup.config.options;
    if let Some(k) = a.kappa {
        options.kappa = k;
    }
    if let Some(c) = a.components {
        options.components = c;
    }
    if let Some(i) = a.inner {
        options.inner = match i {
            InnerArg::Inverse => InnerInverse::Inverse,
            InnerArg::InverseSqrt => InnerInverse::InverseSqrt,
        };
    }
    let robust = &mut setup.config.robust;
    if let Some(l) = a.loss {
        robust.loss = l;
    }
    if let Some(w) = a.weighting {
        robust.weighting = match w {
            WeightingArg::Separate => RobustWeighting::Separate,
            WeightingArg::Shared => RobustWeighting::Shared,
        };
    }
    if let Some(c) = a.centering {
        robust.centering = match c {
            CenteringArg::Robust => CenteringMode::Robust,
            CenteringArg::Uniform => CenteringMode::Uniform,
        };
    }
    if let Some(t) = a.tol {
        robust.kirwls.tol = t;
    }
    if let Some(m) = a.max_iter {
        robust.kirwls.max_iter = m;
    }
    Ok(cfg)
}

fn influence_config(a: &InfluenceArgs) -> CliResult<InfluenceConfig> {
    if a.component == 0 {
        return Err(CliError::User("components are numbered from 1".into()));
    }
    let mode = match a.mode {
        ModeArg::Regularized => RhoInfluence::Regularized,
        ModeArg::Displayed => RhoInfluence::Displayed,
    };
    Ok(InfluenceConfig {
        model: a.model.clone(),
        x: a.x.clone(),
        y: a.y.clone(),
        component: a.component - 1,
        options: InfluenceOptions { mode, variates: false, mad_k: a.mad_k },
    })
}

fn bench_config(a: &BenchArgs) -> CliResult<BenchConfig> {
    let scale = match a.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Full => Scale::Full,
    };
    let mut settings = BenchSettings::new(scale, a.seed);
    if let Some(r) = a.replicates {
        match a.table {
            Table::T1 => settings.table1_replicates = r,
            Table::T2 => settings.table2_replicates = r,
            Table::T3 => settings.table3_replicates = r,
            Table::Fig4 => settings.fig4_replicates = r,
        }
    }
    if let Some(sizes) = &a.sizes {
        let single = || match sizes[..] {
            [n] => Ok(n),
            _ => Err(CliError::User("this table takes a single size".into())),
        };
        match a.table {
            Table::T1 => settings.table1_n = single()?,
            Table::T2 => settings.table2_sizes = sizes.clone(),
            Table::T3 => settings.table3_n = single()?,
            Table::Fig4 => settings.fig4_sizes = sizes.clone(),
        }
    }
    Ok(BenchConfig { table: a.table, settings })
}

fn set_threads(threads: Option<usize>) -> CliResult<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("RKCCA_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| CliError::User(format!("RKCCA_THREADS=`{v}` is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::User(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

fn replay(a: &ReplayArgs) -> CliResult<()> {
    let pairs = commands::replay::run(&a.source, &a.out)?;
    if a.check {
        let differing = commands::replay::check(&pairs)?;
        if !differing.is_empty() {
            let names: Vec<String> = differing.iter().map(|p| p.display().to_string()).collect();
            return Err(CliError::Numeric(format!("replay differs from {}", names.join(", "))));
        }
        println!("replay identical to {}", display_all(pairs.iter().map(|(a, _)| a.as_path())));
    }
    Ok(())
}

fn display_all<'a>(paths: impl Iterator<Item = &'a Path>) -> String {
    paths.map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}

fn dispatch(cli: Cli) -> CliResult<()> {
    set_threads(cli.threads)?;
    match cli.command {
        Command::Gen(a) => commands::gen::run(&gen_config(&a)?, &a.out).map(|_| ()),
        Command::Fit(a) => commands::fit::run(&fit_config(&a)?, &a.out),
        Command::Influence(a) => commands::influence::run(&influence_config(&a)?, &a.out),
        Command::Bench(a) => commands::bench::run(&bench_config(&a)?, &a.out),
        Command::Replay(a) => replay(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
