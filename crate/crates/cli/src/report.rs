//! Report assembly and serialization.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Scalar results at the top level, an optional per-sample table and the
/// overall verdict.
#[derive(Debug)]
pub struct Report {
    fields: Map<String, Value>,
    table: Option<Vec<Value>>,
    pass: bool,
}

impl Report {
    pub fn new(command: &str, inputs: Value) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), Value::from(command));
        fields.insert("version".into(), Value::from(minkdiff::VERSION));
        fields.insert("inputs".into(), inputs);
        Self {
            fields,
            table: None,
            pass: true,
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.into(), value);
    }

    /// Copy every field of a serialized result object.
    pub fn merge(&mut self, value: Value) {
        if let Value::Object(m) = value {
            for (k, v) in m {
                self.fields.insert(k, v);
            }
        }
    }

    pub fn table(&mut self, rows: Vec<Value>) {
        self.table = Some(rows);
    }

    pub fn verdict(&mut self, pass: bool) {
        self.pass = pass;
        self.fields.insert("pass".into(), Value::from(pass));
    }

    pub fn pass(&self) -> bool {
        self.pass
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut m = self.fields.clone();
                if let Some(t) = &self.table {
                    m.insert("samples".into(), Value::Array(t.clone()));
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => match &self.table {
                Some(rows) => table_csv(rows),
                None => {
                    let mut flat = Vec::new();
                    flatten("", &Value::Object(self.fields.clone()), &mut flat);
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["key", "value"]).expect("in-memory csv");
                    for (k, v) in flat {
                        w.write_record([k, v]).expect("in-memory csv");
                    }
                    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
                }
            },
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn table_csv(rows: &[Value]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match rows.first() {
        Some(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    };
    w.write_record(&header).expect("in-memory csv");
    for r in rows {
        let rec: Vec<String> = header.iter().map(|k| r.get(k).map(cell).unwrap_or_default()).collect();
        w.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}
