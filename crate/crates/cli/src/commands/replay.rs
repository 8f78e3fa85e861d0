use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::commands::{bench, fit, gen, influence};
use crate::error::{CliError, CliResult};
use crate::io;

fn config<T: DeserializeOwned>(h: &io::Header) -> CliResult<T> {
    serde_json::from_value(h.config.clone()).map_err(|e| CliError::User(format!("bad {} config: {e}", h.command)))
}

/// Re-run the command recorded in `source`, writing to `out`.
///
/// Returns (original, reproduced) path pairs.
pub fn run(source: &Path, out: &Path) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    let h = io::read_header(source)?;
    match h.command.as_str() {
        "gen" => {
            let cfg: gen::GenConfig = config(&h)?;
            let prefix = gen::prefix_of(source)
                .ok_or_else(|| CliError::User(format!("{} is not named like a gen output", source.display())))?;
            let produced = gen::run(&cfg, out)?;
            let originals = gen::outputs(&prefix, produced.len() == 3);
            Ok(originals.into_iter().zip(produced).collect())
        }
        "fit" => {
            fit::run(&config(&h)?, out)?;
            Ok(vec![(source.to_path_buf(), out.to_path_buf())])
        }
        "influence" => {
            influence::run(&config(&h)?, out)?;
            Ok(vec![(source.to_path_buf(), out.to_path_buf())])
        }
        "bench" => {
            bench::run(&config(&h)?, out)?;
            Ok(vec![(source.to_path_buf(), out.to_path_buf())])
        }
        other => Err(CliError::User(format!("unknown command `{other}` in {}", source.display()))),
    }
}

/// Byte-compare each reproduced file with its original.
pub fn check(pairs: &[(PathBuf, PathBuf)]) -> CliResult<Vec<PathBuf>> {
    let mut differing = Vec::new();
    for (a, b) in pairs {
        let x = std::fs::read(a).map_err(|e| CliError::io(a, e))?;
        let y = std::fs::read(b).map_err(|e| CliError::io(b, e))?;
        if x != y {
            differing.push(a.clone());
        }
    }
    Ok(differing)
}
