//! Suite results and the files written for them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::KitError;
use crate::formats::write_csv;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), pass, detail: detail.into() }
    }

    /// Passes when `value < limit`.
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Check::new(name, value < limit, format!("{value:.6e} < {limit:.3e}"))
    }

    /// Passes when `value > limit`.
    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Check::new(name, value > limit, format!("{value:.6e} > {limit:.3e}"))
    }

    pub fn count_zero(name: &str, failures: usize, of: usize) -> Self {
        Check::new(name, failures == 0, format!("{failures} failures in {of}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem of the CSV.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: &str, header: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Table { name: name.to_string(), header, rows }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| x.to_string()).collect());
    }

    pub fn push_cells(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub suite: String,
    pub group: String,
    pub checks: Vec<Check>,
    pub results: Map<String, Value>,
    pub tables: Vec<Table>,
    /// Extra JSON files, by file stem.
    pub documents: Vec<(String, Value)>,
    /// SVG figures, by file stem.
    pub figures: Vec<(String, String)>,
}

impl SuiteReport {
    pub fn new(suite: &str, group: &str) -> Self {
        SuiteReport { suite: suite.to_string(), group: group.to_string(), ..Default::default() }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.results.insert(key.to_string(), v);
    }

    pub fn document(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.documents.push((name.to_string(), v));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn result_f64(&self, key: &str) -> Option<f64> {
        self.results.get(key).and_then(Value::as_f64)
    }

    /// Writes `summary.json`, the CSV tables, JSON documents and SVGs.
    /// `header` is merged into the summary and repeated in every other file.
    pub fn write(&self, dir: &Path, header: &Map<String, Value>) -> Result<Vec<PathBuf>, KitError> {
        fs::create_dir_all(dir)?;
        let stamp = header
            .iter()
            .map(|(k, v)| format!("{k}={}", v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())))
            .collect::<Vec<_>>()
            .join(" ");
        let mut written = Vec::new();
        let mut files = Vec::new();
        for t in &self.tables {
            let name = format!("{}.csv", t.name);
            let path = dir.join(&name);
            write_csv(fs::File::create(&path)?, Some(&stamp), &t.header, &t.rows)?;
            files.push(name);
            written.push(path);
        }
        for (stem, doc) in &self.documents {
            let name = format!("{stem}.json");
            let path = dir.join(&name);
            let mut body = header.clone();
            body.insert("content".into(), doc.clone());
            fs::write(&path, serde_json::to_string_pretty(&Value::Object(body))? + "\n")?;
            files.push(name);
            written.push(path);
        }
        for (stem, svg) in &self.figures {
            let name = format!("{stem}.svg");
            let path = dir.join(&name);
            fs::write(&path, crate::svg::stamp(svg, &stamp))?;
            files.push(name);
            written.push(path);
        }
        let mut summary = header.clone();
        summary.insert("pass".into(), Value::Bool(self.passed()));
        summary.insert("checks".into(), serde_json::to_value(&self.checks)?);
        summary.insert("results".into(), Value::Object(self.results.clone()));
        files.sort();
        summary.insert("files".into(), serde_json::to_value(files)?);
        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&Value::Object(summary))? + "\n")?;
        written.push(path);
        Ok(written)
    }
}
