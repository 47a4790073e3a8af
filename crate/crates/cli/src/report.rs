//! Report serialization: pretty JSON with every number written to 17
//! significant digits, so identical runs give byte-identical files.

use std::io::{self, Write};

use bregman_core::FieldRow;
use serde::ser::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Pretty printing, with `f64` written as `{:.16e}`.
struct Precise<'a>(PrettyFormatter<'a>);

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `value` as pretty JSON with a trailing newline. Non-finite
/// numbers become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// One pass/fail line of a report.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// `|residual| ≤ tol · max(1, |scale|)`.
    pub fn identity(name: impl Into<String>, residual: f64, scale: f64, tol: f64) -> Self {
        let bound = tol * scale.abs().max(1.0);
        Self {
            name: name.into(),
            value: residual,
            bound,
            passed: residual.abs() <= bound,
        }
    }

    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value <= bound,
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "{}: {} (value {:.16e}, bound {:.16e})",
            self.name,
            if self.passed { "ok" } else { "FAILED" },
            self.value,
            self.bound
        )
    }
}

#[derive(Debug, serde::Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub generator: &'a str,
    pub passed: bool,
    pub checks: &'a [Check],
    pub result: T,
}

/// Divergence field as CSV: `x0, …, div_from_center, div_to_center`, with
/// empty cells where a value is undefined.
pub fn field_csv(dim: usize, rows: &[FieldRow]) -> String {
    let num = |v: f64| format!("{v:.16e}");
    let mut out = (0..dim)
        .map(|j| format!("x{j}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push_str(",div_from_center,div_to_center\n");
    for row in rows {
        let mut cells: Vec<String> = row.coords.iter().map(|&c| num(c)).collect();
        cells.push(row.div_from_center.map(num).unwrap_or_default());
        cells.push(row.div_to_center.map(num).unwrap_or_default());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let json = to_json(&serde_json::json!({"a": 0.1, "b": [1.0, f64::NAN], "c": 3}));
        assert!(json.contains("\"a\": 1.0000000000000001e-1"));
        assert!(json.contains("1.0000000000000000e0"));
        assert!(json.contains("null"));
        assert!(json.contains("\"c\": 3"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn checks() {
        assert!(Check::identity("r", 5e-9, 10.0, 1e-9).passed);
        assert!(!Check::identity("r", 5e-9, 1.0, 1e-9).passed);
        assert!(!Check::identity("r", f64::NAN, 1.0, 1e-9).passed);
        assert!(Check::at_most("v", -1.0, 0.0).passed);
        assert!(!Check::at_most("v", f64::NAN, 0.0).passed);
    }

    #[test]
    fn field_rows_leave_undefined_cells_empty() {
        let rows = [FieldRow {
            coords: vec![0.5, 2.0],
            div_from_center: None,
            div_to_center: Some(0.25),
        }];
        assert_eq!(
            field_csv(2, &rows),
            "x0,x1,div_from_center,div_to_center\n\
             5.0000000000000000e-1,2.0000000000000000e0,,2.5000000000000000e-1\n"
        );
    }
}
