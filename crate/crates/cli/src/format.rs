//! Numeric rendering shared by every command.
//!
//! Output is either `Significant(d)` (default 6 digits) or `Decimals(d)`.
//! Both go through the standard formatter, which rounds exact binary ties
//! to even, so `Decimals(4)` is the half-even rounding used for the golden
//! tables.

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Significant(usize),
    Decimals(usize),
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Significant(6)
    }
}

impl Precision {
    /// Round to the displayed precision and return the value that would be printed.
    pub fn round(self, x: f64) -> f64 {
        if !x.is_finite() {
            return x;
        }
        self.render(x).parse().unwrap_or(x)
    }

    pub fn render(self, x: f64) -> String {
        if x.is_nan() {
            return "NaN".into();
        }
        if x.is_infinite() {
            return if x > 0.0 { "inf".into() } else { "-inf".into() };
        }
        let s = match self {
            Precision::Decimals(d) => format!("{x:.d$}"),
            Precision::Significant(d) => {
                let d = d.max(1);
                let sci = format!("{:.*e}", d - 1, x);
                let v: f64 = sci.parse().expect("formatter emits parseable floats");
                format!("{v}")
            }
        };
        strip_negative_zero(s)
    }

    pub fn json(self, x: f64) -> Value {
        Number::from_f64(self.round(x)).map(Value::Number).unwrap_or(Value::Null)
    }
}

fn strip_negative_zero(s: String) -> String {
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

/// A flat record with a fixed key order, rendered as plain text, one CSV row, or a JSON object.
#[derive(Debug, Clone, Default)]
pub struct Record {
    fields: Vec<(String, Cell)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<Option<String>> for Cell {
    fn from(x: Option<String>) -> Self {
        x.map_or(Cell::Empty, Cell::Text)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    pub fn render(&self, precision: Precision) -> String {
        match self {
            Cell::Num(x) => precision.render(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn json(&self, precision: Precision) -> Value {
        match self {
            Cell::Num(x) => precision.json(*x),
            Cell::Int(k) => Value::from(*k),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, cell: impl Into<Cell>) -> &mut Self {
        self.fields.push((key.to_string(), cell.into()));
        self
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(k, _)| k.as_str())
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.fields.iter().map(|(_, c)| c)
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, c)| c)
    }

    pub fn to_json(&self, precision: Precision) -> Value {
        let mut map = Map::new();
        for (k, c) in &self.fields {
            map.insert(k.clone(), c.json(precision));
        }
        Value::Object(map)
    }
}

/// CSV with a header taken from the first record. All records must share its keys.
pub fn write_csv<W: std::io::Write>(out: W, records: &[Record], precision: Precision) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = records.first() {
        w.write_record(first.keys())?;
    }
    for r in records {
        w.write_record(r.cells().map(|c| c.render(precision)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn json_array(records: &[Record], precision: Precision) -> Value {
    Value::Array(records.iter().map(|r| r.to_json(precision)).collect())
}
