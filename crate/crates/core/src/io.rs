//! CSV input and report output.
//!
//! Every output file starts with `#`-prefixed manifest lines followed by the
//! CSV body. Only the header carries the timestamp, so bodies of reruns
//! with the same config and seed compare equal byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::regression::Dataset;

/// Reads a CSV with a header row; the first column is `y`, the rest are regressors.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let width = reader.headers()?.len();
    if width < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: need a response column and at least one regressor, found {width} column(s)",
            path.display()
        )));
    }
    let mut y = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); width - 1];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "{}: line {line}, column {}: cannot parse {cell:?} as a number",
                    path.display(),
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{}: line {line}, column {}: non-finite value",
                    path.display(),
                    j + 1
                )));
            }
            if j == 0 {
                y.push(v);
            } else {
                cols[j - 1].push(v);
            }
        }
    }
    Dataset::new(y, cols)
}

/// Writes `y` and the regressors as supplied, in shortest round-trip form.
pub fn write_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["y".to_string()];
    header.extend((1..=d.p()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..d.n() {
        let mut row = vec![d.y()[i].to_string()];
        row.extend((0..d.p()).map(|j| d.raw_column(j)[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Provenance block written at the top of every output file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical resolved config and the base seed.
    pub config_hash: String,
    pub base_seed: u64,
    pub library_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, resolved_config: &str, base_seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config_hash: config_hash(resolved_config, base_seed),
            base_seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn header(&self) -> String {
        format!(
            "# command: {}\n# config_hash: {}\n# base_seed: {}\n# library_version: {}\n# timestamp: {}\n",
            self.command, self.config_hash, self.base_seed, self.library_version, self.timestamp
        )
    }
}

pub fn config_hash(resolved_config: &str, base_seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(resolved_config.as_bytes());
    h.update(b"\nbase_seed=");
    h.update(base_seed.to_string().as_bytes());
    hex::encode(h.finalize())
}

/// Writes `manifest` followed by `body` to `dir/name`, creating `dir`.
pub fn write_report_file(dir: &Path, name: &str, manifest: &RunManifest, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, manifest.header() + body)?;
    Ok(path)
}

/// The file contents without manifest lines.
pub fn report_body(contents: &str) -> String {
    contents
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config_and_seed() {
        assert_eq!(config_hash("a = 1", 3), config_hash("a = 1", 3));
        assert_ne!(config_hash("a = 1", 3), config_hash("a = 1", 4));
        assert_ne!(config_hash("a = 1", 3), config_hash("a = 2", 3));
        assert_eq!(config_hash("", 0).len(), 64);
    }

    #[test]
    fn body_strips_manifest() {
        let m = RunManifest::new("table1", "x", 1);
        let text = m.header() + "a,b\n1,2\n";
        assert_eq!(report_body(&text), "a,b\n1,2\n");
    }

    #[test]
    fn load_examples() {
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("ok.csv");
        fs::write(&ok, "y,x1,x2\n1,0.5,2\n2,1.5,1\n2.5,2,0\n4,3.5,1\n5,4,3\n").unwrap();
        let d = load_dataset(&ok).unwrap();
        assert_eq!((d.n(), d.p()), (5, 2));

        let missing = dir.path().join("missing.csv");
        fs::write(&missing, "y,x1\n1,2\n2,\n3,1\n4,5\n").unwrap();
        assert!(matches!(load_dataset(&missing), Err(Error::InvalidInput(_))));

        let ragged = dir.path().join("ragged.csv");
        fs::write(&ragged, "y,x1\n1,2\n2,3,4\n3,1\n").unwrap();
        assert_eq!(load_dataset(&ragged).unwrap_err().exit_code(), 2);

        let square = dir.path().join("square.csv");
        fs::write(&square, "y,x1,x2,x3\n1,2,3,1\n2,1,0,4\n3,5,1,1\n").unwrap();
        assert!(matches!(load_dataset(&square), Err(Error::InvalidRegime(_))));
    }
}
