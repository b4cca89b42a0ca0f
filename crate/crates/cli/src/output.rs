//! Run artifacts: CSV tables and one JSON summary per command.
//!
//! Files are named `<config name>.<command>[.<table>].{csv,json}` inside the
//! output directory. Nothing time- or host-dependent is written, so reruns
//! are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use transwalk::rational::{self, Rational};

use crate::config::Config;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "transwalk";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
    }
}

/// What a command produced. `passed = false` maps to exit code 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub passed: bool,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    passed: bool,
    config: &'a Config,
    result: &'a Value,
}

/// Exact value and its float rendering, side by side.
pub fn rat_pair(r: &Rational) -> [String; 2] {
    [rational::format(r), rational::to_f64(r).to_string()]
}

pub fn rat_json(r: &Rational) -> Value {
    serde_json::json!({ "exact": rational::format(r), "float": rational::to_f64(r) })
}

pub fn file_stem(config: &Config, command: &str) -> String {
    let safe: String = config
        .name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}.{command}")
}

/// Writes the JSON summary and every table; returns the written paths.
pub fn write(
    dir: &Path,
    config: &Config,
    command: &str,
    outcome: &Outcome,
) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = file_stem(config, command);
    let mut paths = Vec::new();
    for t in &outcome.tables {
        let p = dir.join(format!("{stem}.{}.csv", t.name));
        fs::write(&p, t.to_csv()?)?;
        paths.push(p);
    }
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        passed: outcome.passed,
        config,
        result: &outcome.result,
    };
    let mut json = serde_json::to_string_pretty(&env).expect("serializable envelope");
    json.push('\n');
    let p = dir.join(format!("{stem}.json"));
    fs::write(&p, json)?;
    paths.push(p);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_lattice_elements() {
        let mut t = Table::new("m", &["element", "weight"]);
        t.push(vec!["(1,0,0)".into(), "1/8".into()]);
        assert_eq!(t.to_csv().unwrap(), "element,weight\n\"(1,0,0)\",1/8\n");
    }

    #[test]
    fn rational_pairs() {
        assert_eq!(
            rat_pair(&rational::ratio(3, 8)),
            ["3/8".to_string(), "0.375".to_string()]
        );
    }
}
