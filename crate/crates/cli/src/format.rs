//! Output rendering: JSON and CSV with 17 significant digits, aligned tables
//! with 6.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

/// Significant digits in machine-readable output.
pub const MACHINE_DIGITS: usize = 17;
/// Significant digits in tables.
pub const TABLE_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(format!("unknown format `{other}` (expected json, csv or table)")),
        }
    }
}

/// `%.{digits}g`: shortest of positional or scientific notation, trailing
/// zeros removed. The result is always a valid JSON number for finite `v`.
pub fn sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let s = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let ds: String = mantissa.chars().filter(|c| *c != '.').collect();

    if exp < -4 || exp >= digits as i32 {
        let (head, tail) = ds.split_at(1);
        let tail = tail.trim_end_matches('0');
        let dot = if tail.is_empty() { "" } else { "." };
        return format!("{sign}{head}{dot}{tail}e{exp}");
    }
    let (int, frac) = if exp >= 0 {
        let k = exp as usize + 1;
        (ds[..k].to_string(), ds[k..].to_string())
    } else {
        ("0".to_string(), format!("{}{ds}", "0".repeat((-exp - 1) as usize)))
    };
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Pretty JSON formatter that writes floats with [`MACHINE_DIGITS`].
pub struct SigFormatter {
    inner: PrettyFormatter<'static>,
}

impl SigFormatter {
    pub fn new() -> Self {
        SigFormatter {
            inner: PrettyFormatter::new(),
        }
    }
}

impl Default for SigFormatter {
    fn default() -> Self {
        Self::new()
    }
}

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(sig(value, MACHINE_DIGITS).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter::new());
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    let mut s = String::from_utf8(buf).expect("JSON is UTF-8");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self, digits: usize) -> String {
        match self {
            Cell::Num(v) => sig(*v, digits),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A command result in both shapes: a JSON record and a table.
#[derive(Debug, Clone)]
pub struct Output {
    pub json: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Output {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(&self.json),
            Format::Csv => self.csv(),
            Format::Table => self.table(),
        }
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory CSV");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render(MACHINE_DIGITS)))
                .expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }

    fn table(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c.render(TABLE_DIGITS)).collect())
            .collect();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: Vec<&str>| -> String {
            let padded: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(self.header.clone());
        out += &line(
            widths
                .iter()
                .map(|w| "-".repeat(*w))
                .collect::<Vec<_>>()
                .iter()
                .map(String::as_str)
                .collect(),
        );
        for row in &cells {
            out += &line(row.iter().map(String::as_str).collect());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            2.0f64.sqrt() * 1e-9,
            2.0 * std::f64::consts::E,
            -123456.789,
            1e300,
            4.9e-324,
        ] {
            let s = sig(v, MACHINE_DIGITS);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert!(serde_json::from_str::<f64>(&s).is_ok(), "{s}");
        }
    }

    #[test]
    fn g_style_layout() {
        assert_eq!(sig(2.0, 17), "2");
        assert_eq!(sig(0.1, 17), "0.10000000000000001");
        assert_eq!(sig(std::f64::consts::E, 17), "2.7182818284590451");
        assert_eq!(sig(1.5e-7, 6), "1.5e-7");
        assert_eq!(sig(0.00012345, 6), "0.00012345");
        assert_eq!(sig(123456789.0, 6), "1.23457e8");
        assert_eq!(sig(-0.5, 6), "-0.5");
        assert_eq!(sig(f64::NAN, 6), "NaN");
    }

    #[test]
    fn json_uses_formatter_and_null_for_nan() {
        let v = serde_json::json!({"a": 0.1, "b": [f64::NAN, 2.0], "c": 3});
        let s = to_json(&v);
        assert!(s.contains("0.10000000000000001"));
        assert!(s.contains("null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_and_table() {
        let out = Output {
            json: Value::Null,
            header: vec!["t", "value", "converged"],
            rows: vec![vec![1.0.into(), (1.0 / 3.0).into(), true.into()]],
        };
        assert_eq!(
            out.render(Format::Csv),
            "t,value,converged\n1,0.33333333333333331,true\n"
        );
        let table = out.render(Format::Table);
        assert!(table.contains("0.333333"));
        assert_eq!(table.lines().count(), 3);
    }
}
