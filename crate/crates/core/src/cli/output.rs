//! JSON reports and CSV tables.

use std::path::Path;

use serde_json::Value;

use super::Format;
use crate::error::{LabError, Result};

/// A named CSV table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| LabError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> LabError {
    LabError::Io(e.to_string())
}

/// Coordinates joined with `;` for a single CSV cell.
pub fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Everything a command produces.
#[derive(Debug, Default)]
pub struct Artifact {
    pub name: String,
    /// The result; wrapped in the versioned envelope by [`super::execute`].
    pub envelope: Value,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
    /// Print the summary on stdout as well (for purely informational commands).
    pub stdout_summary: bool,
    pub numerical_failure: bool,
}

impl Artifact {
    pub fn new(result: Value, summary: Vec<String>) -> Self {
        Artifact { envelope: result, summary, ..Default::default() }
    }

    /// The report without the `metadata` field; identical across runs with the same config.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut v = self.envelope.clone();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("metadata");
        }
        serde_json::to_string_pretty(&v).map_err(|e| LabError::Io(e.to_string()))
    }

    pub fn json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.envelope).map_err(|e| LabError::Io(e.to_string()))
    }

    pub fn emit(&self, out: Option<&Path>, format: Format) -> Result<()> {
        let want_json = matches!(format, Format::Json | Format::Both);
        let want_csv = matches!(format, Format::Csv | Format::Both);
        if self.stdout_summary {
            for line in &self.summary {
                println!("{line}");
            }
        }
        match out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                if want_json {
                    std::fs::write(dir.join(format!("{}.json", self.name)), self.json()? + "\n")?;
                }
                if want_csv {
                    for t in &self.tables {
                        std::fs::write(dir.join(format!("{}-{}.csv", self.name, t.name)), t.to_csv()?)?;
                    }
                }
            }
            None => {
                if want_json {
                    println!("{}", self.json()?);
                }
                if want_csv {
                    for t in &self.tables {
                        print!("{}", t.to_csv()?);
                    }
                }
            }
        }
        Ok(())
    }
}
