//! Deterministic tabular output.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::Format;

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Rounds to `digits` significant digits.
pub fn round_significant(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), v);
    let r: f64 = s.parse().expect("formatted float parses");
    if r == 0.0 { 0.0 } else { r }
}

/// Shortest round-trip text of `v` rounded to `digits` significant digits;
/// `-0` prints as `0`.
pub fn format_float(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_significant(v, digits);
    let a = r.abs();
    if r == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn cell_text(c: &Cell, digits: usize) -> String {
    match c {
        Cell::Num(v) => format_float(*v, digits),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

fn cell_json(c: &Cell, digits: usize) -> Value {
    match c {
        Cell::Num(v) if v.is_finite() => json!(round_significant(*v, digits)),
        Cell::Num(v) => json!(format_float(*v, digits)),
        Cell::Bool(b) => json!(b),
        Cell::Text(s) => json!(s),
        Cell::Missing => Value::Null,
    }
}

pub fn write_csv<W: Write>(out: W, table: &Table, digits: usize) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| cell_text(c, digits)))?;
    }
    w.flush()
}

/// One object with a `metadata` block, the column names, the rows and any
/// extra per-run summary.
pub fn to_json(table: &Table, digits: usize, metadata: Value, summary: Option<Value>) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(|c| cell_json(c, digits)).collect()))
        .collect();
    let mut obj = Map::new();
    obj.insert("metadata".into(), metadata);
    obj.insert("columns".into(), json!(table.columns));
    obj.insert("rows".into(), Value::Array(rows));
    if let Some(s) = summary {
        obj.insert("summary".into(), s);
    }
    Value::Object(obj)
}

pub fn render(table: &Table, format: Format, digits: usize, metadata: Value, summary: Option<Value>) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(&mut buf, table, digits)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &to_json(table, digits, metadata, summary))?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn negative_zero_is_normalised() {
        assert_eq!(format_float(-0.0, 12), "0");
        assert_eq!(format_float(-1e-300 * 1e-300, 12), "0");
    }

    #[test]
    fn rounding_to_significant_digits() {
        assert_eq!(format_float(std::f64::consts::PI, 6), "3.14159");
        assert_eq!(format_float(0.1 + 0.2, 12), "0.3");
        assert_eq!(format_float(1234567.0, 6), "1234570");
        assert_eq!(format_float(1.5e-9, 12), "1.5e-9");
    }

    #[test]
    fn missing_is_empty_field() {
        let mut t = Table::new(["bias", "t_star"]);
        t.push(vec![Cell::Num(1.0), Cell::Missing]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &t, 12).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bias,t_star\n1,\n");
    }

    #[test]
    fn json_missing_is_null() {
        let mut t = Table::new(["x"]);
        t.push(vec![Cell::Missing]);
        let v = to_json(&t, 12, json!({}), None);
        assert_eq!(v["rows"][0][0], Value::Null);
    }

    proptest! {
        #[test]
        fn formatted_values_round_trip(v in proptest::num::f64::NORMAL, digits in 6usize..=17) {
            let s = format_float(v, digits);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(format_float(back, digits), s);
            prop_assert!(((back - v) / v).abs() <= 10f64.powi(1 - digits as i32));
        }
    }
}
