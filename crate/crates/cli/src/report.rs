//! Key/value reports rendered as text or CSV.
//!
//! Floats use Rust's shortest round-trip form, so `1.0` prints as `1.0` and
//! two runs over identical inputs render byte-identical output.

use std::fmt::Write as _;

use essbasis_core::NormValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    /// Present on norm values only.
    method: Option<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    entries: Vec<Entry>,
}

pub fn float(x: f64) -> String {
    format!("{x:?}")
}

pub fn floats(xs: &[f64]) -> String {
    xs.iter().map(|x| float(*x)).collect::<Vec<_>>().join(" ")
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.text("command", command);
        r
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push(Entry {
            key: key.into(),
            value: value.to_string(),
            method: None,
        });
        self
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.text(key, float(value))
    }

    pub fn norm(&mut self, key: impl Into<String>, v: &NormValue) -> &mut Self {
        self.measured(key, v.value, &v.method.to_string(), v.uncertainty)
    }

    /// A value with an explicit method label and uncertainty.
    pub fn measured(&mut self, key: impl Into<String>, value: f64, method: &str, uncertainty: f64) -> &mut Self {
        self.entries.push(Entry {
            key: key.into(),
            value: float(value),
            method: Some((method.to_string(), uncertainty)),
        });
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Text => {
                for e in &self.entries {
                    let _ = writeln!(out, "{} = {}", e.key, e.value);
                    if let Some((m, u)) = &e.method {
                        let _ = writeln!(out, "{}.method = {m}", e.key);
                        let _ = writeln!(out, "{}.uncertainty = {}", e.key, float(*u));
                    }
                }
            }
            Format::Csv => {
                out.push_str("key,value,method,uncertainty\n");
                for e in &self.entries {
                    let (m, u) = match &e.method {
                        Some((m, u)) => (m.as_str(), float(*u)),
                        None => ("", String::new()),
                    };
                    let _ = writeln!(out, "{},{},{m},{u}", csv_field(&e.key), csv_field(&e.value));
                }
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
