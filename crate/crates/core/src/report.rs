//! Flat key/value reports printed as JSON or CSV with 17 significant digits.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Nums(Vec<f64>),
    Null,
}

/// Formats `x` with 17 significant digits (round-trips every f64).
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "Infinity".into()
    } else {
        "-Infinity".into()
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        fmt17(x)
    } else {
        "null".into()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    fields: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, key: &str, value: Value) -> Self {
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn num(self, key: &str, x: f64) -> Self {
        self.field(key, Value::Num(x))
    }

    pub fn int(self, key: &str, x: u64) -> Self {
        self.field(key, Value::Int(x))
    }

    pub fn text(self, key: &str, s: impl Into<String>) -> Self {
        self.field(key, Value::Text(s.into()))
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        for (i, (k, v)) in self.fields.iter().enumerate() {
            let rendered = match v {
                Value::Num(x) => json_num(*x),
                Value::Int(x) => x.to_string(),
                Value::Text(s) => json_string(s),
                Value::Bool(b) => b.to_string(),
                Value::Nums(xs) => {
                    let items: Vec<String> = xs.iter().map(|&x| json_num(x)).collect();
                    format!("[{}]", items.join(", "))
                }
                Value::Null => "null".into(),
            };
            let sep = if i + 1 < self.fields.len() { "," } else { "" };
            let _ = writeln!(out, "  {}: {rendered}{sep}", json_string(k));
        }
        out.push_str("}\n");
        out
    }

    /// Header row of keys, then one row of values; lists are `;`-joined.
    pub fn to_csv(&self) -> String {
        let header: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
        let row: Vec<String> = self
            .fields
            .iter()
            .map(|(_, v)| match v {
                Value::Num(x) => fmt17(*x),
                Value::Int(x) => x.to_string(),
                Value::Text(s) if s.contains([',', '"', '\n']) => {
                    format!("\"{}\"", s.replace('"', "\"\""))
                }
                Value::Text(s) => s.clone(),
                Value::Bool(b) => b.to_string(),
                Value::Nums(xs) => xs.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(";"),
                Value::Null => String::new(),
            })
            .collect();
        format!("{}\n{}\n", header.join(","), row.join(","))
    }
}
