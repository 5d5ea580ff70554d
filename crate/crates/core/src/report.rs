//! Deterministic JSON and CSV export.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`. Non-finite values wrapped in [`Num`] are written
//! as the strings `"nan"`, `"inf"`, `"-inf"` rather than dropped.

use std::io::{self, Write};
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Format a float with 17 significant digits; non-finite values as words.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A float that serializes non-finite values as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&fmt_f64(self.0))
        }
    }
}

pub fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize to JSON with fixed float precision and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser).map_err(|e| io::Error::other(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("JSON is UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

/// A table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> CsvTable {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::F(v) => fmt_f64(*v),
                    Cell::I(v) => v.to_string(),
                    Cell::S(v) if v.contains(',') || v.contains('"') => format!("\"{}\"", v.replace('"', "\"\"")),
                    Cell::S(v) => v.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Lower-case hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        schema_version: u32,
        value: f64,
        bad: Num,
        list: Vec<Num>,
    }

    #[test]
    fn json_precision_and_nan_policy() {
        let s = Sample { schema_version: 1, value: 0.1, bad: Num(f64::NAN), list: nums(&[1.0, f64::INFINITY]) };
        let text = to_json_string(&s).unwrap();
        assert_eq!(
            text,
            "{\"schema_version\":1,\"value\":1.0000000000000001e-1,\"bad\":\"nan\",\
             \"list\":[1.0000000000000000e0,\"inf\"]}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["value"].as_f64().unwrap(), 0.1);
        assert_eq!(to_json_string(&s).unwrap(), text);
    }

    #[test]
    fn csv_rows_and_header() {
        let mut t = CsvTable::new(&["i", "x", "note"]);
        for i in 0..3 {
            t.push(vec![Cell::from(i as usize), Cell::from(i as f64 / 3.0), Cell::from("a,b")]);
        }
        let text = t.to_csv_string();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("i,x,note\n0,0.0000000000000000e0,\"a,b\"\n"));
        t.push(vec![Cell::from(9usize), Cell::from(f64::NAN), Cell::from("x")]);
        assert!(t.to_csv_string().ends_with("9,nan,x\n"));
    }

    #[test]
    fn sha_hex() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
