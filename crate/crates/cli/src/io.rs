//! CSV files with a `# `-prefixed header block.
//!
//! Every output file starts with
//!
//! ```text
//! # rkcca <version>
//! # command: <name>
//! # config: <json>
//! ```
//!
//! optionally followed by more `# key: value` lines. The config line holds
//! the fully resolved configuration, which is all `replay` needs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parsed header of an output file.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: String,
    pub config: serde_json::Value,
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn header<T: Serialize>(command: &str, config: &T, extra: &[(&str, String)]) -> CliResult<String> {
    let json = serde_json::to_string(config).map_err(|e| CliError::User(format!("cannot serialize config: {e}")))?;
    let mut s = format!("# rkcca {VERSION}\n# command: {command}\n# config: {json}\n");
    for (k, v) in extra {
        writeln!(s, "# {k}: {v}").unwrap();
    }
    Ok(s)
}

pub fn read_header(path: &Path) -> CliResult<Header> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut command = None;
    let mut config = None;
    let mut extra = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let Some((k, v)) = line[1..].trim_start().split_once(": ") else { continue };
        match k {
            "command" => command = Some(v.to_string()),
            "config" => {
                config = Some(serde_json::from_str(v).map_err(|e| CliError::User(format!("{}: bad config line: {e}", path.display())))?)
            }
            _ => extra.push((k.to_string(), v.to_string())),
        }
    }
    match (command, config) {
        (Some(command), Some(config)) => Ok(Header { command, config, extra }),
        _ => Err(CliError::User(format!("{} has no rkcca header", path.display()))),
    }
}

pub fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// A numeric matrix with a header row; `#` lines are skipped.
pub fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).from_reader(file);
    let width = reader.headers().map_err(|e| bad_csv(path, e))?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad_csv(path, e))?;
        if rec.len() != width {
            return Err(CliError::User(format!("{}: row {} has {} fields, expected {width}", path.display(), i + 1, rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| CliError::User(format!("{}: row {}: `{field}` is not a number", path.display(), i + 1)))?;
            if !v.is_finite() {
                return Err(CliError::User(format!("{}: row {}: non-finite value", path.display(), i + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 || width == 0 {
        return Err(CliError::User(format!("{}: no data rows", path.display())));
    }
    Ok(DMatrix::from_row_slice(rows, width, &values))
}

fn bad_csv(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => CliError::io(path, e),
        _ => CliError::User(format!("{}: {e}", path.display())),
    }
}

/// Matrix as CSV with columns `{prefix}1..{prefix}d`.
pub fn matrix_csv(m: &DMatrix<f64>, prefix: &str) -> String {
    let mut s = (1..=m.ncols()).map(|j| format!("{prefix}{j}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| num(v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// FNV-1a over the shape and the bit patterns of the entries.
pub fn fingerprint(m: &DMatrix<f64>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&(m.nrows() as u64).to_le_bytes());
    eat(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            eat(&m[(i, j)].to_bits().to_le_bytes());
        }
    }
    format!("{h:016x}")
}
