use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TYPEB_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "jsonl",
            Format::Csv => "csv",
        }
    }
}

/// A double with 17 significant digits, or `null` when not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(fmt_f64(x).parse::<Number>().expect("formatted float is a JSON number"))
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Run metadata embedded in every artifact.
pub struct Meta {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub parameters: Map<String, Value>,
}

impl Meta {
    pub fn new(command: &'static str, seed: Option<u64>) -> Self {
        Meta {
            command,
            seed,
            parameters: Map::new(),
        }
    }

    pub fn param(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), "metadata".into());
        m.insert("command".into(), self.command.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        m.insert("parameters".into(), Value::Object(self.parameters.clone()));
        Value::Object(m)
    }
}

/// Where an artifact goes: an explicit path, `$TYPEB_OUT_DIR/<name>`, or
/// standard output.
pub fn resolve_path(explicit: Option<&Path>, default_name: &str, format: Format) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUT_DIR_ENV).map(|dir| Path::new(&dir).join(format!("{default_name}.{}", format.extension())))
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            let f = File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

/// A table of records rendered either as JSON lines (metadata line first)
/// or as CSV with `#` metadata comments above the header.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// Extra JSON-only lines such as summaries, written after the rows.
    pub trailer: Vec<Value>,
    pub kind: &'static str,
}

impl Table {
    pub fn new(kind: &'static str, columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
            trailer: Vec::new(),
            kind,
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, meta: &Meta, format: Format, path: Option<&Path>) -> Result<(), CliError> {
        let mut out = open(path)?;
        let io_err = |e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e);
        match format {
            Format::Json => {
                writeln!(out, "{}", meta.to_json()).map_err(io_err)?;
                for row in &self.rows {
                    let mut m = Map::new();
                    m.insert("kind".into(), self.kind.into());
                    for (c, v) in self.columns.iter().zip(row) {
                        m.insert((*c).into(), v.clone());
                    }
                    writeln!(out, "{}", Value::Object(m)).map_err(io_err)?;
                }
                for line in &self.trailer {
                    writeln!(out, "{line}").map_err(io_err)?;
                }
            }
            Format::Csv => {
                writeln!(out, "# command: {}", meta.command).map_err(io_err)?;
                writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION")).map_err(io_err)?;
                let seed = meta.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
                writeln!(out, "# seed: {seed}").map_err(io_err)?;
                writeln!(out, "# parameters: {}", Value::Object(meta.parameters.clone())).map_err(io_err)?;
                for line in &self.trailer {
                    writeln!(out, "# {line}").map_err(io_err)?;
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(CliError::csv)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(csv_cell)).map_err(CliError::csv)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
                out.write_all(&bytes).map_err(io_err)?;
            }
        }
        out.flush().map_err(io_err)
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        let back: f64 = num(std::f64::consts::PI).to_string().parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_cells() {
        assert_eq!(csv_cell(&Value::from("a,b")), "a,b");
        assert_eq!(csv_cell(&num(1.5)), "1.5000000000000000e+0");
        assert_eq!(csv_cell(&Value::from(3)), "3");
    }
}
