//! Regression datasets: CSV loading, validation and the packaged examples.
//!
//! Files are UTF-8, comma separated, with a mandatory header row. The response
//! is picked by name; every other column becomes a covariate, in header order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model_space::{Gamma, MAX_COVARIATES};

/// Environment variable that points the builtins at a different data folder.
pub const DATA_DIR_ENV: &str = "LOSSPRIOR_DATA_DIR";

const HALD_CSV: &str = include_str!("../data/hald.csv");
const USCRIME_CSV: &str = include_str!("../data/uscrime.csv");
const MANIFEST: &str = include_str!("../data/MANIFEST");

/// Transformation applied to every column while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    None,
    /// Natural log of every column; all values must be positive.
    LogAll,
    /// Natural log of every column except 0/1 indicators.
    LogContinuous,
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Transform::None),
            "log-all" => Ok(Transform::LogAll),
            "log-continuous" => Ok(Transform::LogContinuous),
            other => Err(Error::invalid(
                "transform",
                format!("'{other}' (expected none, log-all or log-continuous)"),
            )),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::None => "none",
            Transform::LogAll => "log-all",
            Transform::LogContinuous => "log-continuous",
        })
    }
}

/// A response vector and covariate matrix with their labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub covariate_names: Vec<String>,
    pub response_name: String,
    pub transform: Transform,
    pub transform_log: bool,
    /// SHA-256 of the source bytes, hex encoded.
    pub checksum: String,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// The rows listed in `rows`, in that order.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(rows.len(), self.d(), |i, j| self.x[(rows[i], j)]);
        let y = DVector::from_fn(rows.len(), |i, _| self.y[rows[i]]);
        Dataset {
            x,
            y,
            ..self.clone()
        }
    }

    /// Writes the (already transformed) data back out as CSV, covariates first.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        let mut header: Vec<&str> = self.covariate_names.iter().map(String::as_str).collect();
        header.push(&self.response_name);
        w.write_record(&header).expect("write to memory");
        for i in 0..self.n() {
            let mut row: Vec<String> = (0..self.d()).map(|j| self.x[(i, j)].to_string()).collect();
            row.push(self.y[i].to_string());
            w.write_record(&row).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
    }
}

/// Reads a dataset from disk.
pub fn load_csv(path: impl AsRef<Path>, response: &str, transform: Transform) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let label = path.display().to_string();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| label.clone());
    parse_csv(&bytes, &label, &name, response, transform)
}

/// Parses CSV bytes; `label` names the source in error messages.
pub fn parse_csv(bytes: &[u8], label: &str, name: &str, response: &str, transform: Transform) -> Result<Dataset> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Csv {
        path: label.to_string(),
        message: format!("not valid UTF-8: {e}"),
    })?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: label.to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let header_err = |message: String| Error::Header {
        path: label.to_string(),
        message,
    };
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(header_err("missing header row".into()));
    }
    if let Some(blank) = header.iter().position(String::is_empty) {
        return Err(header_err(format!("column {} has an empty name", blank + 1)));
    }
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(header_err(format!("duplicate column name '{h}'")));
        }
    }
    let response_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| header_err(format!("response column '{response}' not found")))?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for (c, column) in columns.iter_mut().enumerate() {
            let raw = record.get(c).unwrap_or("");
            let value = raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                path: label.to_string(),
                row: r + 1,
                column: header[c].clone(),
                value: raw.to_string(),
            })?;
            column.push(value);
        }
    }

    for (c, column) in columns.iter_mut().enumerate() {
        let indicator = column.iter().all(|&v| v == 0.0 || v == 1.0);
        let apply = match transform {
            Transform::None => false,
            Transform::LogAll => true,
            Transform::LogContinuous => !indicator,
        };
        if !apply {
            continue;
        }
        if let Some(row) = column.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositive {
                path: label.to_string(),
                row: row + 1,
                column: header[c].clone(),
                value: column[row],
            });
        }
        column.iter_mut().for_each(|v| *v = v.ln());
    }

    let n = columns[0].len();
    let covariates: Vec<usize> = (0..header.len()).filter(|&c| c != response_col).collect();
    let d = covariates.len();
    if d > MAX_COVARIATES {
        return Err(Error::Capacity {
            d,
            cap: MAX_COVARIATES,
        });
    }
    if n < d + 2 {
        return Err(Error::invalid(
            "dataset",
            format!("{label}: n = {n} observations must exceed d + 1 = {}", d + 1),
        ));
    }
    let x = DMatrix::from_fn(n, d, |i, j| columns[covariates[j]][i]);
    let y = DVector::from_vec(columns[response_col].clone());
    check_full_rank(&x)?;

    Ok(Dataset {
        name: name.to_string(),
        y,
        x,
        covariate_names: covariates.iter().map(|&c| header[c].clone()).collect(),
        response_name: response.to_string(),
        transform,
        transform_log: transform != Transform::None,
        checksum: sha256_hex(bytes),
    })
}

/// Intercept plus all covariates must have full column rank.
fn check_full_rank(x: &DMatrix<f64>) -> Result<()> {
    let d = x.ncols();
    if d == 0 {
        return Ok(());
    }
    let n = x.nrows();
    let centered = DMatrix::from_fn(n, d, |i, j| {
        let mean = x.column(j).mean();
        x[(i, j)] - mean
    });
    let norms: Vec<f64> = centered.column_iter().map(|c| c.norm()).collect();
    let r = centered.qr().r();
    for j in 0..d {
        if !(r[(j, j)].abs() > 1e-10 * norms[j].max(f64::MIN_POSITIVE)) {
            return Err(Error::SingularDesign { gamma: Gamma::full(d) });
        }
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One line of `data/MANIFEST`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub rows: usize,
    pub columns: usize,
    pub sha256: String,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Integrity {
                file: "MANIFEST".into(),
                message: format!("malformed line '{line}'"),
            };
            if parts.len() != 4 {
                return Err(bad());
            }
            Ok(ManifestEntry {
                file: parts[0].to_string(),
                rows: parts[1].parse().map_err(|_| bad())?,
                columns: parts[2].parse().map_err(|_| bad())?,
                sha256: parts[3].to_string(),
            })
        })
        .collect()
}

/// The manifest shipped with the crate.
pub fn packaged_manifest() -> Vec<ManifestEntry> {
    parse_manifest(MANIFEST).expect("packaged manifest is well formed")
}

/// Checks file bytes against their manifest entry.
pub fn verify_against_manifest(file: &str, bytes: &[u8], manifest: &[ManifestEntry]) -> Result<()> {
    let entry = manifest.iter().find(|e| e.file == file).ok_or_else(|| Error::Integrity {
        file: file.into(),
        message: "no manifest entry".into(),
    })?;
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let columns = lines.next().map_or(0, |h| h.split(',').count());
    let rows = lines.count();
    if rows != entry.rows || columns != entry.columns {
        return Err(Error::Integrity {
            file: file.into(),
            message: format!(
                "expected {} rows x {} columns, found {rows} x {columns}",
                entry.rows, entry.columns
            ),
        });
    }
    let digest = sha256_hex(bytes);
    if digest != entry.sha256 {
        return Err(Error::Integrity {
            file: file.into(),
            message: format!("checksum {digest} does not match manifest {}", entry.sha256),
        });
    }
    Ok(())
}

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 3] = ["hald", "uscrime", "uscrime-log"];

/// One of the packaged datasets.
///
/// * `hald`: Hald cement data, 13 observations of heat evolved against four
///   clinker compounds.
/// * `uscrime`: 1960 US state crime data, 47 states and 15 covariates,
///   untransformed.
/// * `uscrime-log`: the same data with every non-indicator column logged.
///
/// When `LOSSPRIOR_DATA_DIR` is set the CSV files are read from there and
/// checked against the `MANIFEST` in that folder (or the packaged one).
pub fn builtin(name: &str) -> Result<Dataset> {
    let (file, response, transform) = match name {
        "hald" => ("hald.csv", "heat", Transform::None),
        "uscrime" => ("uscrime.csv", "crime_rate", Transform::None),
        "uscrime-log" => ("uscrime.csv", "crime_rate", Transform::LogContinuous),
        other => {
            return Err(Error::invalid(
                "builtin dataset",
                format!("'{other}' (expected one of {})", BUILTINS.join(", ")),
            ))
        }
    };
    let (bytes, manifest) = match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => {
            let dir = Path::new(&dir);
            let bytes = std::fs::read(dir.join(file)).map_err(|e| Error::Integrity {
                file: dir.join(file).display().to_string(),
                message: e.to_string(),
            })?;
            let manifest = match std::fs::read_to_string(dir.join("MANIFEST")) {
                Ok(text) => parse_manifest(&text)?,
                Err(_) => packaged_manifest(),
            };
            (bytes, manifest)
        }
        None => {
            let text = if file == "hald.csv" { HALD_CSV } else { USCRIME_CSV };
            (text.as_bytes().to_vec(), packaged_manifest())
        }
    };
    verify_against_manifest(file, &bytes, &manifest)?;
    parse_csv(&bytes, file, name, response, transform)
}
