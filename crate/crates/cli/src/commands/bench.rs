use std::fmt::Write as _;
use std::path::Path;

use rkcca::bench::{fig4, table1, table2, table3, BenchSettings, MetricRun, Norm};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::io::{self, num};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    T1,
    T2,
    T3,
    Fig4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub table: Table,
    pub settings: BenchSettings,
}

fn cell(r: &MetricRun) -> String {
    format!("{},{}", num(r.mean), num(r.sd))
}

pub fn render(cfg: &BenchConfig) -> CliResult<String> {
    let mut s = String::new();
    let settings = &cfg.settings;
    match cfg.table {
        Table::T1 => {
            s.push_str("dataset,measure,kernel,standard_mean,standard_sd,robust_mean,robust_sd\n");
            for r in table1(settings)? {
                let measure = match r.norm {
                    Norm::Frobenius => "F",
                    Norm::MaxModulus => "M",
                };
                writeln!(s, "{},{measure},{},{},{}", r.dataset, r.kernel, cell(&r.standard), cell(&r.robust)).unwrap();
            }
        }
        Table::T2 => {
            s.push_str("dataset,n,eta_rho_standard_mean,eta_rho_standard_sd,eta_rho_robust_mean,eta_rho_robust_sd,eta_f_standard_mean,eta_f_standard_sd,eta_f_robust_mean,eta_f_robust_sd\n");
            for r in table2(settings)? {
                writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.dataset,
                    r.n,
                    cell(&r.eta_rho_standard),
                    cell(&r.eta_rho_robust),
                    cell(&r.eta_f_standard),
                    cell(&r.eta_f_robust)
                )
                .unwrap();
            }
        }
        Table::T3 => {
            s.push_str("dataset,condition,standard_mean,standard_sd,robust_mean,robust_sd\n");
            for r in table3(settings)? {
                writeln!(s, "{},{},{},{}", r.dataset, r.condition, cell(&r.standard), cell(&r.robust)).unwrap();
            }
        }
        Table::Fig4 => {
            s.push_str("population,n,estimator,mean,sd\n");
            for r in fig4(settings)? {
                writeln!(s, "{},{},kco,{}", r.population, r.n, cell(&r.kco)).unwrap();
                writeln!(s, "{},{},rkco,{}", r.population, r.n, cell(&r.rkco)).unwrap();
            }
        }
    }
    Ok(s)
}

pub fn run(cfg: &BenchConfig, out: &Path) -> CliResult<()> {
    let body = render(cfg)?;
    io::write(out, &format!("{}{body}", io::header("bench", cfg, &[])?))?;
    print!("{body}");
    Ok(())
}
