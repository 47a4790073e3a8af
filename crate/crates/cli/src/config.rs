//! Generator documents such as `{"generator": "negative-entropy-simplex", "dim": 2}`
//! or `{"generator": "mahalanobis", "matrix_file": "A.csv"}`.

use std::fs;
use std::path::{Path, PathBuf};

use bregman_core::{log_barrier_generator, make_generator, ConvexGenerator, GeneratorSpec};
use serde::Deserialize;

use crate::error::CliError;

/// Powers of the `−log(1 − t^p)` pieces when none are given.
pub const DEFAULT_BARRIER_POWERS: [u32; 2] = [2, 4];

pub const GENERATOR_NAMES: [&str; 4] = [
    "squared-euclidean",
    "mahalanobis",
    "negative-entropy-simplex",
    "log-barrier",
];

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub generator: String,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub matrix_file: Option<PathBuf>,
    #[serde(default)]
    pub powers: Option<Vec<u32>>,
}

impl GeneratorConfig {
    /// Reads a JSON document. A relative `matrix_file` is taken relative to
    /// the document.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if let (Some(m), Some(dir)) = (&cfg.matrix_file, path.parent()) {
            if m.is_relative() {
                cfg.matrix_file = Some(dir.join(m));
            }
        }
        Ok(cfg)
    }

    pub fn build(&self) -> Result<ConvexGenerator, CliError> {
        let dim = || {
            self.dim
                .ok_or_else(|| CliError::input(format!("generator {} needs --dim", self.generator)))
        };
        let check_dim = |got: usize| match self.dim {
            Some(d) if d != got => Err(CliError::input(format!(
                "--dim {d} disagrees with the {got}-dimensional {}",
                self.generator
            ))),
            _ => Ok(()),
        };
        let spec = match self.generator.as_str() {
            "squared-euclidean" => GeneratorSpec::SquaredEuclidean { dim: dim()? },
            "negative-entropy-simplex" => GeneratorSpec::NegativeEntropySimplex { dim: dim()? },
            "mahalanobis" => {
                let matrix = match (&self.matrix, &self.matrix_file) {
                    (Some(m), None) => m.clone(),
                    (None, Some(path)) => read_matrix(path)?,
                    _ => {
                        return Err(CliError::input(
                            "mahalanobis needs exactly one of a matrix or a matrix file",
                        ))
                    }
                };
                check_dim(matrix.len())?;
                GeneratorSpec::Mahalanobis { matrix }
            }
            "log-barrier" => {
                let powers = self
                    .powers
                    .clone()
                    .unwrap_or_else(|| DEFAULT_BARRIER_POWERS.to_vec());
                check_dim(powers.len())?;
                return Ok(log_barrier_generator(&powers)?);
            }
            other => {
                return Err(CliError::input(format!(
                    "unknown generator {other:?}; expected one of {}",
                    GENERATOR_NAMES.join(", ")
                )))
            }
        };
        Ok(make_generator(spec)?)
    }
}

/// Plain row-major CSV, no header.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let file = fs::File::open(path).map_err(CliError::io(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let source = path.display().to_string();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i as u64 + 1;
        let record = record.map_err(|e| CliError::Row {
            file: source.clone(),
            row,
            message: e.to_string(),
        })?;
        let values = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| CliError::Row {
                    file: source.clone(),
                    row,
                    message: format!("{cell:?} is not a number"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(CliError::input(format!("{source}: empty matrix")));
    }
    Ok(rows)
}
