//! Sample files.
//!
//! CSV files have a header row naming the coordinates `x0 … x{d−1}`, an
//! optional `weight` column and an optional group column chosen by the
//! caller. JSON files look like
//! `{"points": [[…], …], "weights": […], "groups": […]}` with the last two
//! optional. Weights default to uniform and are normalized.
//!
//! Row numbers in errors are file lines for CSV (the header is line 1) and
//! 1-based point indices for JSON.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use bregman_core::{ConvexGenerator, GroupedSampleSet, Point, SampleSet};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const WEIGHT_COLUMN: &str = "weight";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` is JSON; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Parsed but not yet normalized samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSamples {
    pub source: String,
    pub points: Vec<Point>,
    pub weights: Option<Vec<f64>>,
    pub groups: Option<Vec<String>>,
    pub rows: Vec<u64>,
}

/// Either shape a file can take.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Flat(SampleSet),
    Grouped(GroupedSampleSet),
}

impl RawSamples {
    fn row_error(&self, i: usize, message: impl Into<String>) -> CliError {
        CliError::Row {
            file: self.source.clone(),
            row: self.rows[i],
            message: message.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Point::dim)
    }

    /// Checks every point against the generator's domain. With
    /// `allow_boundary`, simplex points may sit on a face (one-hot labels).
    pub fn check_domain(&self, g: &ConvexGenerator, allow_boundary: bool) -> Result<(), CliError> {
        if self.dim() != g.dim() {
            return Err(CliError::input(format!(
                "{}: points have {} coordinates but the {} generator has {}",
                self.source,
                self.dim(),
                g.name(),
                g.dim()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            let checked = if allow_boundary {
                g.domain().check_first_argument(p.coords())
            } else {
                g.domain().check(p.coords())
            };
            checked.map_err(|e| self.row_error(i, e.to_string()))?;
        }
        Ok(())
    }

    fn weights_or_uniform(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.points.len()])
    }

    /// Drops any grouping.
    pub fn into_flat(self) -> Result<SampleSet, CliError> {
        let weights = self.weights_or_uniform();
        Ok(SampleSet::new(self.points, weights)?)
    }

    pub fn into_grouped(self) -> Result<GroupedSampleSet, CliError> {
        let weights = self.weights_or_uniform();
        let Some(keys) = self.groups else {
            return Err(CliError::input(format!(
                "{}: no groups (pass --group-col for CSV, or a \"groups\" array in JSON)",
                self.source
            )));
        };
        Ok(GroupedSampleSet::from_labeled(self.points, weights, keys)?)
    }

    pub fn into_samples(self) -> Result<Samples, CliError> {
        if self.groups.is_some() {
            self.into_grouped().map(Samples::Grouped)
        } else {
            self.into_flat().map(Samples::Flat)
        }
    }
}

fn check_weight(w: f64) -> Result<f64, String> {
    if !w.is_finite() {
        Err(format!("weight {w} is not finite"))
    } else if w <= 0.0 {
        Err(format!("weight {w} is not positive"))
    } else {
        Ok(w)
    }
}

/// Reads CSV samples. `group_col` names the grouping column; a file without
/// that column is read ungrouped.
pub fn read_csv<R: Read>(
    reader: R,
    source: &str,
    group_col: Option<&str>,
) -> Result<RawSamples, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let row_err = |row: u64, message: String| CliError::Row {
        file: source.to_string(),
        row,
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| row_err(1, e.to_string()))?
        .clone();

    let mut coord_cols: HashMap<usize, usize> = HashMap::new();
    let mut weight_col = None;
    let mut group_idx = None;
    for (c, name) in headers.iter().enumerate() {
        let duplicate = || row_err(1, format!("duplicate column {name:?}"));
        if Some(name) == group_col {
            if group_idx.replace(c).is_some() {
                return Err(duplicate());
            }
        } else if name == WEIGHT_COLUMN {
            if weight_col.replace(c).is_some() {
                return Err(duplicate());
            }
        } else if let Some(j) = name.strip_prefix('x').and_then(|j| j.parse::<usize>().ok()) {
            if coord_cols.insert(j, c).is_some() {
                return Err(duplicate());
            }
        } else {
            return Err(row_err(1, format!("unexpected column {name:?}")));
        }
    }
    let dim = coord_cols.len();
    if dim == 0 {
        return Err(row_err(1, "no coordinate columns x0, x1, ...".into()));
    }
    let order: Vec<usize> = (0..dim)
        .map(|j| {
            coord_cols
                .get(&j)
                .copied()
                .ok_or_else(|| row_err(1, format!("coordinate columns must be x0..x{}", dim - 1)))
        })
        .collect::<Result<_, _>>()?;

    let mut out = RawSamples {
        source: source.to_string(),
        points: Vec::new(),
        weights: weight_col.map(|_| Vec::new()),
        groups: group_idx.map(|_| Vec::new()),
        rows: Vec::new(),
    };
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let row = e.position().map_or(0, |p| p.line());
                let message = match e.kind() {
                    csv::ErrorKind::UnequalLengths {
                        expected_len, len, ..
                    } => {
                        format!("ragged row: {len} fields, expected {expected_len}")
                    }
                    _ => e.to_string(),
                };
                return Err(row_err(row, message));
            }
        };
        let row = record.position().map_or(0, |p| p.line());
        let number = |c: usize, what: &str| -> Result<f64, CliError> {
            let cell = &record[c];
            let v: f64 = cell
                .parse()
                .map_err(|_| row_err(row, format!("{what} {cell:?} is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(row_err(row, format!("{what} {cell:?} is not finite")))
            }
        };
        let coords = order
            .iter()
            .enumerate()
            .map(|(j, &c)| number(c, &format!("x{j}")))
            .collect::<Result<Vec<f64>, _>>()?;
        out.points.push(Point::new(coords));
        if let (Some(c), Some(ws)) = (weight_col, out.weights.as_mut()) {
            let w: f64 = record[c]
                .parse()
                .map_err(|_| row_err(row, format!("weight {:?} is not a number", &record[c])))?;
            ws.push(check_weight(w).map_err(|m| row_err(row, m))?);
        }
        if let (Some(c), Some(gs)) = (group_idx, out.groups.as_mut()) {
            gs.push(record[c].to_string());
        }
        out.rows.push(row);
    }
    if out.points.is_empty() {
        return Err(CliError::input(format!("{source}: no samples")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSamples {
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    groups: Option<Vec<String>>,
}

pub fn read_json<R: Read>(reader: R, source: &str) -> Result<RawSamples, CliError> {
    let doc: JsonSamples =
        serde_json::from_reader(reader).map_err(|e| CliError::input(format!("{source}: {e}")))?;
    let n = doc.points.len();
    if n == 0 {
        return Err(CliError::input(format!("{source}: no samples")));
    }
    for (what, len) in [
        ("weights", doc.weights.as_ref().map(Vec::len)),
        ("groups", doc.groups.as_ref().map(Vec::len)),
    ] {
        if let Some(len) = len.filter(|&l| l != n) {
            return Err(CliError::input(format!(
                "{source}: {len} {what} for {n} points"
            )));
        }
    }
    let row_err = |i: usize, message: String| CliError::Row {
        file: source.to_string(),
        row: i as u64 + 1,
        message,
    };
    let dim = doc.points[0].len();
    for (i, p) in doc.points.iter().enumerate() {
        if p.len() != dim || dim == 0 {
            return Err(row_err(
                i,
                format!("ragged point: {} coordinates, expected {dim}", p.len()),
            ));
        }
    }
    if let Some(ws) = &doc.weights {
        for (i, &w) in ws.iter().enumerate() {
            check_weight(w).map_err(|m| row_err(i, m))?;
        }
    }
    Ok(RawSamples {
        source: source.to_string(),
        points: doc.points.into_iter().map(Point::new).collect(),
        weights: doc.weights,
        groups: doc.groups,
        rows: (1..=n as u64).collect(),
    })
}

/// Reads a sample file, picking the format from its extension.
pub fn read_path(path: &Path, group_col: Option<&str>) -> Result<RawSamples, CliError> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let source = path.display().to_string();
    match Format::from_path(path) {
        Format::Csv => read_csv(io::BufReader::new(file), &source, group_col),
        Format::Json => read_json(io::BufReader::new(file), &source),
    }
}

/// Reads and validates a sample file against `g`.
pub fn ingest(
    path: &Path,
    g: &ConvexGenerator,
    group_col: Option<&str>,
    allow_boundary: bool,
) -> Result<Samples, CliError> {
    let raw = read_path(path, group_col)?;
    raw.check_domain(g, allow_boundary)?;
    raw.into_samples()
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv_rows<W: Write>(
    w: W,
    dim: usize,
    group_col: Option<&str>,
    rows: impl Iterator<Item = (Option<String>, Vec<f64>, f64)>,
) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    header.push(WEIGHT_COLUMN.to_string());
    header.extend(group_col.map(str::to_string));
    wtr.write_record(&header).map_err(csv_error)?;
    for (group, coords, weight) in rows {
        let mut record: Vec<String> = coords.iter().map(f64::to_string).collect();
        record.push(weight.to_string());
        record.extend(group);
        wtr.write_record(&record).map_err(csv_error)?;
    }
    wtr.flush()
}

/// Writes `s` in the CSV layout [`read_csv`] accepts. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(w: W, s: &SampleSet) -> io::Result<()> {
    write_csv_rows(
        w,
        s.dim(),
        None,
        s.iter().map(|(p, wt)| (None, p.coords().to_vec(), wt)),
    )
}

/// Grouped CSV; row weights are group weight times within-group weight.
pub fn write_grouped_csv<W: Write>(w: W, gs: &GroupedSampleSet, group_col: &str) -> io::Result<()> {
    write_csv_rows(
        w,
        gs.dim(),
        Some(group_col),
        gs.iter().flat_map(|(key, set, gw)| {
            set.iter()
                .map(move |(p, wt)| (Some(key.to_string()), p.coords().to_vec(), gw * wt))
        }),
    )
}

pub fn write_json<W: Write>(w: W, s: &SampleSet) -> io::Result<()> {
    let doc = JsonSamples {
        points: s.points().iter().map(|p| p.coords().to_vec()).collect(),
        weights: Some(s.weights().to_vec()),
        groups: None,
    };
    serde_json::to_writer(w, &doc).map_err(io::Error::other)
}

pub fn write_grouped_json<W: Write>(w: W, gs: &GroupedSampleSet) -> io::Result<()> {
    let mut doc = JsonSamples {
        points: Vec::new(),
        weights: Some(Vec::new()),
        groups: Some(Vec::new()),
    };
    for (key, set, gw) in gs.iter() {
        for (p, wt) in set.iter() {
            doc.points.push(p.coords().to_vec());
            doc.weights.as_mut().unwrap().push(gw * wt);
            doc.groups.as_mut().unwrap().push(key.to_string());
        }
    }
    serde_json::to_writer(w, &doc).map_err(io::Error::other)
}
