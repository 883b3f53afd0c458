//! `summary.json` plus CSV tables, written to the output directory.

use std::fs;
use std::path::Path;

use lifting::exact::{fmt_q, q_to_f64};
use lifting::Q;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Failures listed in the summary per assertion.
const FAILURES_SHOWN: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub invariant: String,
    pub passed: bool,
    pub checked: u64,
    pub failures: u64,
    pub first_failures: Vec<String>,
}

pub struct Table {
    name: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    config: &'a ExperimentConfig,
    passed: bool,
    assertions: &'a [Assertion],
    results: &'a Value,
    files: Vec<String>,
}

pub struct Report {
    command: &'static str,
    config: ExperimentConfig,
    pub assertions: Vec<Assertion>,
    pub results: Value,
    tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &'static str, config: &ExperimentConfig) -> Self {
        // The output directory is not part of the experiment.
        let config = ExperimentConfig {
            out: None,
            ..config.clone()
        };
        Report {
            command,
            config,
            assertions: Vec::new(),
            results: Value::Null,
            tables: Vec::new(),
        }
    }

    pub fn assert(&mut self, invariant: &str, checked: u64, failures: Vec<String>) {
        self.assertions.push(Assertion {
            invariant: invariant.to_string(),
            passed: failures.is_empty(),
            checked,
            failures: failures.len() as u64,
            first_failures: failures.into_iter().take(FAILURES_SHOWN).collect(),
        });
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn first_failure(&self) -> Option<&Assertion> {
        self.assertions.iter().find(|a| !a.passed)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let csv_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
            w.write_record(&t.header).map_err(csv_err)?;
            for r in &t.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        let summary = Summary {
            command: self.command,
            config: &self.config,
            passed: self.first_failure().is_none(),
            assertions: &self.assertions,
            results: &self.results,
            files: self.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        };
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        text.push('\n');
        fs::write(dir.join("summary.json"), text).map_err(io)?;
        Ok(())
    }
}

/// Exact value and its float rendering, for adjacent CSV columns.
pub fn q_cols(q: &Q) -> [String; 2] {
    [fmt_q(q), format!("{:.9}", q_to_f64(q))]
}

pub fn q_json(q: &Q) -> Value {
    serde_json::json!({ "exact": fmt_q(q), "float": q_to_f64(q) })
}

pub fn z_str(z: &[bool]) -> String {
    z.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn median(values: &mut [Q]) -> Q {
    values.sort();
    let k = values.len();
    if k == 0 {
        return Q::default();
    }
    if k % 2 == 1 {
        values[k / 2].clone()
    } else {
        (&values[k / 2 - 1] + &values[k / 2]) / Q::from_integer(2.into())
    }
}
