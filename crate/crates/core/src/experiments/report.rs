//! Structured scenario reports: JSON, CSV and plot-ready column files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Assertion {
        Assertion { name: name.into(), passed, detail: detail.into() }
    }
}

/// A named series of plot columns.
#[derive(Clone, Debug, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub config: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    pub records: Vec<serde_json::Value>,
    pub assertions: Vec<Assertion>,
    #[serde(skip)]
    pub csv: Vec<(String, String)>,
    #[serde(skip)]
    pub plots: Vec<PlotSeries>,
    #[serde(skip)]
    pub extra_files: Vec<(String, String)>,
}

impl Report {
    pub fn new(scenario: &str, config: &super::config::ExperimentConfig) -> Report {
        let mut echo: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
        for (section, entries) in config.to_doc().sections {
            let sec = echo.entry(section).or_default();
            for (k, v) in entries {
                sec.entry(k).or_default().push(v);
            }
        }
        Report {
            scenario: scenario.to_string(),
            config: echo,
            records: Vec::new(),
            assertions: Vec::new(),
            csv: Vec::new(),
            plots: Vec::new(),
            extra_files: Vec::new(),
        }
    }

    pub fn push_record<T: Serialize>(&mut self, record: &T) {
        self.records.push(serde_json::to_value(record).expect("serializable record"));
    }

    pub fn assert_that(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion::check(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    /// Register a CSV table (file stem, full contents).
    pub fn add_csv(&mut self, stem: &str, header: &str, rows: &[String]) {
        let mut body = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>());
        body.push_str(header);
        body.push('\n');
        for r in rows {
            body.push_str(r);
            body.push('\n');
        }
        self.csv.push((stem.to_string(), body));
    }

    pub fn add_plot(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<f64>>) {
        self.plots.push(PlotSeries {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        });
    }

    /// Write the requested outputs; returns the paths written.
    pub fn write_outputs(
        &self,
        out_dir: &Path,
        emit_csv: bool,
        emit_json: bool,
    ) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out_dir)?;
        let mut written = Vec::new();
        if emit_csv {
            for (stem, body) in &self.csv {
                let path = out_dir.join(format!("{stem}.csv"));
                fs::write(&path, body)?;
                written.push(path);
            }
            for (name, body) in &self.extra_files {
                let path = out_dir.join(name);
                fs::write(&path, body)?;
                written.push(path);
            }
            written.extend(emit_plotdata(self, out_dir)?);
        }
        if emit_json {
            let path = out_dir.join(format!("{}.json", self.scenario));
            fs::write(&path, serde_json::to_string_pretty(self).expect("report serializes") + "\n")?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Write plot-ready data: whitespace-separated columns with a header
/// comment naming each column, one file per series.
pub fn emit_plotdata(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.plots.is_empty() && report.records.is_empty() {
        return Err(Error::Domain("empty report: nothing to plot".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for series in &report.plots {
        let mut body = format!("# {}\n", series.columns.join(" "));
        for row in &series.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            body.push_str(&line.join(" "));
            body.push('\n');
        }
        let path = dir.join(format!("{}-{}.dat", report.scenario, series.name));
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
