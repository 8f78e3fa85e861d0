use std::path::{Path, PathBuf};

use rkcca::synth::{generate, Contamination, GeneratorSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub spec: GeneratorSpec,
    pub contamination: Contamination,
    pub seed: u64,
}

/// Output files of a generator run sharing `prefix`.
pub fn outputs(prefix: &Path, paired: bool) -> Vec<PathBuf> {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    let mut v = vec![with(".x.csv")];
    if paired {
        v.push(with(".y.csv"));
    }
    v.push(with(".manifest.csv"));
    v
}

/// The prefix of a file written by `gen`.
pub fn prefix_of(path: &Path) -> Option<PathBuf> {
    let s = path.to_str()?;
    [".x.csv", ".y.csv", ".manifest.csv"].iter().find_map(|ext| s.strip_suffix(ext).map(PathBuf::from))
}

pub fn run(cfg: &GenConfig, prefix: &Path) -> CliResult<Vec<PathBuf>> {
    let data = generate(&cfg.spec, cfg.contamination, cfg.seed)?;
    let n = data.x.nrows();
    let head = io::header("gen", cfg, &[])?;
    let paths = outputs(prefix, data.y.is_some());
    io::write(&paths[0], &format!("{head}{}", io::matrix_csv(&data.x, "x")))?;
    if let Some(y) = &data.y {
        io::write(&paths[1], &format!("{head}{}", io::matrix_csv(y, "y")))?;
    }
    let mut manifest = format!("{head}# contamination: {}\nrow,contaminated\n", cfg.contamination);
    let mut flags = vec![false; n];
    for &i in &data.contaminated_indices {
        flags[i] = true;
    }
    for (i, f) in flags.iter().enumerate() {
        manifest.push_str(&format!("{i},{}\n", u8::from(*f)));
    }
    io::write(paths.last().unwrap(), &manifest)?;
    println!(
        "wrote {} rows ({} contaminated) to {}",
        n,
        data.contaminated_indices.len(),
        paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
    );
    Ok(paths)
}
