use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rkcca::influence::{influence_report, InfluenceOptions};
use serde::{Deserialize, Serialize};

use crate::commands::fit;
use crate::error::{CliError, CliResult};
use crate::io::{self, num};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceConfig {
    pub model: PathBuf,
    /// Data files; the paths recorded in the model when absent.
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    /// Zero-based component index.
    pub component: usize,
    pub options: InfluenceOptions,
}

pub fn run(cfg: &InfluenceConfig, out: &Path) -> CliResult<()> {
    let data = match (&cfg.x, &cfg.y) {
        (Some(x), Some(y)) => Some((x.as_path(), y.as_path())),
        (None, None) => None,
        _ => return Err(CliError::User("give both --x and --y or neither".into())),
    };
    let (_, f) = fit::load(&cfg.model, data)?;
    if cfg.component >= f.model.components() {
        return Err(CliError::User(format!(
            "component {} is out of range; the model has {}",
            cfg.component + 1,
            f.model.components()
        )));
    }
    let opts = InfluenceOptions { variates: false, ..cfg.options };
    let report = influence_report(&f.model, &f.kx, &f.ky, cfg.component, &opts)?;
    let rule = serde_json::to_string(&report.threshold_rule).map_err(|e| CliError::User(e.to_string()))?;
    let mut extra = vec![("rule", rule)];
    if report.near_singular {
        extra.push(("warning", "rho is within 1e-8 of 1; the influence is unstable".to_string()));
    }
    let mut s = io::header("influence", cfg, &extra)?;
    s.push_str("subject_index,eif_rho,outlier\n");
    for (i, (v, flag)) in report.eif_rho.iter().zip(&report.outlier_flags).enumerate() {
        writeln!(s, "{i},{},{}", num(*v), u8::from(*flag)).unwrap();
    }
    io::write(out, &s)?;
    let flagged: Vec<String> = report
        .outlier_flags
        .iter()
        .enumerate()
        .filter(|(_, f)| **f)
        .map(|(i, _)| i.to_string())
        .collect();
    println!("component {}: {} of {} subjects flagged", cfg.component + 1, flagged.len(), report.eif_rho.len());
    if !flagged.is_empty() {
        println!("flagged: {}", flagged.join(" "));
    }
    Ok(())
}
