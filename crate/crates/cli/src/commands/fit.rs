use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rkcca::bench::CcaSetup;
use rkcca::kcca::{fit_kcca, CcaModel, Method};
use rkcca::kernel::{gram, KernelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{self, num};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    pub setup: CcaSetup,
}

/// Facts about a fit stored next to the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub n: usize,
    pub components: usize,
    pub kernel_x: KernelSpec,
    pub kernel_y: KernelSpec,
    pub x_fingerprint: String,
    pub y_fingerprint: String,
    pub rank_x: usize,
    pub rank_y: usize,
    pub kirwls_converged: bool,
    pub rho_excursion: Option<f64>,
}

/// Paired training data with Gram matrices under the resolved kernels.
pub struct Fitted {
    pub model: CcaModel,
    pub meta: ModelMeta,
    pub kx: DMatrix<f64>,
    pub ky: DMatrix<f64>,
}

pub fn load_pair(x: &Path, y: &Path) -> CliResult<(DMatrix<f64>, DMatrix<f64>)> {
    let (x, y) = (io::read_matrix(x)?, io::read_matrix(y)?);
    if x.nrows() != y.nrows() {
        return Err(CliError::User(format!("the views have {} and {} rows", x.nrows(), y.nrows())));
    }
    Ok((x, y))
}

pub fn fit(cfg: &FitConfig) -> CliResult<Fitted> {
    let (x, y) = load_pair(&cfg.x, &cfg.y)?;
    let (sx, sy) = (cfg.setup.kernel_x.resolve(&x)?, cfg.setup.kernel_y.resolve(&y)?);
    let (kx, ky) = (gram(&sx, &x)?, gram(&sy, &y)?);
    let model = fit_kcca(&kx, &ky, &cfg.setup.config)?;
    let meta = ModelMeta {
        n: x.nrows(),
        components: model.components(),
        kernel_x: sx,
        kernel_y: sy,
        x_fingerprint: io::fingerprint(&x),
        y_fingerprint: io::fingerprint(&y),
        rank_x: model.diagnostics.rank_x,
        rank_y: model.diagnostics.rank_y,
        kirwls_converged: model.diagnostics.kirwls_converged,
        rho_excursion: model.diagnostics.rho_excursion,
    };
    Ok(Fitted { model, meta, kx, ky })
}

/// The `section,row,col,value` body of a model file.
pub fn model_body(m: &CcaModel) -> String {
    let mut s = String::from("section,row,col,value\n");
    for (j, r) in m.rho.iter().enumerate() {
        writeln!(s, "rho,{j},0,{}", num(*r)).unwrap();
    }
    for (name, a) in [("alpha_x", &m.alpha_x), ("alpha_y", &m.alpha_y)] {
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                writeln!(s, "{name},{i},{j},{}", num(a[(i, j)])).unwrap();
            }
        }
    }
    for (name, w) in [
        ("weights_xx", &m.weights.xx),
        ("weights_yy", &m.weights.yy),
        ("weights_xy", &m.weights.xy),
        ("centering_x", &m.centering_x),
        ("centering_y", &m.centering_y),
    ] {
        for (i, v) in w.iter().enumerate() {
            writeln!(s, "{name},{i},0,{}", num(*v)).unwrap();
        }
    }
    s
}

pub fn summary(cfg: &FitConfig, f: &Fitted) -> String {
    let m = &f.model;
    let mut s = String::new();
    let method = match m.method {
        Method::Standard => "standard",
        Method::Robust => "robust",
    };
    writeln!(s, "method: {method}").unwrap();
    writeln!(s, "n: {}", f.meta.n).unwrap();
    writeln!(s, "kernels: x = {}, y = {}", f.meta.kernel_x, f.meta.kernel_y).unwrap();
    writeln!(s, "kappa: {}", num(m.kappa)).unwrap();
    if m.method == Method::Robust {
        writeln!(s, "loss: {}", cfg.setup.config.robust.loss).unwrap();
    }
    for (j, r) in m.rho.iter().enumerate() {
        writeln!(s, "rho_{}: {}", j + 1, num(*r)).unwrap();
    }
    if let Some(r) = &m.robust {
        writeln!(
            s,
            "kirwls iterations: mean_x {}, mean_y {}, co_x {}, co_y {}, cco {}",
            r.mean_x.iterations, r.mean_y.iterations, r.co_x.iterations, r.co_y.iterations, r.cco.iterations
        )
        .unwrap();
        writeln!(s, "kirwls converged: {}", r.all_converged()).unwrap();
    }
    if let Some(e) = m.diagnostics.rho_excursion {
        writeln!(s, "warning: largest singular value {} was clipped to 1", num(e)).unwrap();
    }
    s
}

pub fn run(cfg: &FitConfig, out: &Path) -> CliResult<()> {
    let f = fit(cfg)?;
    let meta = serde_json::to_string(&f.meta).map_err(|e| CliError::User(e.to_string()))?;
    let head = io::header("fit", cfg, &[("meta", meta)])?;
    io::write(out, &format!("{head}{}", model_body(&f.model)))?;
    print!("{}", summary(cfg, &f));
    Ok(())
}

/// Re-fit the model recorded in `path` and check it against the stored values.
///
/// `data` replaces the recorded data paths; the files must hold the same values.
pub fn load(path: &Path, data: Option<(&Path, &Path)>) -> CliResult<(FitConfig, Fitted)> {
    let h = io::read_header(path)?;
    if h.command != "fit" {
        return Err(CliError::User(format!("{} is not a model file", path.display())));
    }
    let mut cfg: FitConfig = serde_json::from_value(h.config.clone()).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    if let Some((x, y)) = data {
        cfg.x = x.to_path_buf();
        cfg.y = y.to_path_buf();
    }
    let stored: ModelMeta = h
        .get("meta")
        .and_then(|m| serde_json::from_str(m).ok())
        .ok_or_else(|| CliError::User(format!("{}: missing model meta", path.display())))?;
    let f = fit(&cfg)?;
    if f.meta.x_fingerprint != stored.x_fingerprint || f.meta.y_fingerprint != stored.y_fingerprint {
        return Err(CliError::User(format!("the data files changed since {} was written", path.display())));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    if body != model_body(&f.model) {
        return Err(CliError::User(format!("{} does not match a refit of its recorded configuration", path.display())));
    }
    Ok((cfg, f))
}
