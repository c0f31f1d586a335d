//! File formats: group definitions, tiles, norms, words, point lists and the
//! CSV tables for clouds and fragments.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use carnot_core::norm::{BoxNorm, NormCertificate};
use carnot_core::tiling::TileSpec;
use carnot_core::{BracketEntry, CarnotGroup, StratificationSpec};
use serde::{Deserialize, Serialize};

use crate::error::KitError;

fn input_error(path: &Path, reason: impl ToString) -> KitError {
    KitError::Input { path: path.display().to_string(), reason: reason.to_string() }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, KitError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| input_error(path, e))
}

/// `{"name", "strata", "brackets": [[i, j, k, c], ...]}` with 1-based indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    pub name: String,
    pub strata: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<(usize, usize, usize, f64)>,
}

impl GroupFile {
    pub fn from_spec(spec: &StratificationSpec) -> Self {
        GroupFile {
            name: spec.name().to_string(),
            strata: spec.strata().to_vec(),
            brackets: spec.entries().iter().map(|e| (e.i, e.j, e.k, e.c)).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, KitError> {
        serde_json::from_str(text).map_err(|e| KitError::Group(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, KitError> {
        read_json(path)
    }

    pub fn to_spec(&self) -> Result<StratificationSpec, KitError> {
        let entries = self.brackets.iter().map(|&(i, j, k, c)| BracketEntry::new(i, j, k, c)).collect();
        StratificationSpec::new(self.name.clone(), self.strata.clone(), entries)
            .map_err(|e| KitError::Group(e.to_string()))
    }

    /// Builds the group, rejecting specs that violate an algebra invariant.
    pub fn to_group(&self) -> Result<CarnotGroup, KitError> {
        let spec = self.to_spec()?;
        let violations = spec.validate();
        if let Some(v) = violations.first() {
            return Err(KitError::Group(format!("{}: {v}", self.name)));
        }
        CarnotGroup::new(spec).map_err(|e| KitError::Group(e.to_string()))
    }
}

/// `{"group", "centers", "provenance"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileFile {
    pub group: String,
    pub centers: Vec<Vec<f64>>,
    #[serde(default)]
    pub provenance: String,
}

impl TileFile {
    pub fn from_spec(spec: &TileSpec, provenance: &str) -> Self {
        TileFile {
            group: spec.group().name().to_string(),
            centers: spec.centers().to_vec(),
            provenance: provenance.to_string(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, KitError> {
        read_json(path)
    }

    pub fn to_spec(&self, group: &CarnotGroup) -> Result<TileSpec, KitError> {
        TileSpec::new(group, self.centers.clone()).map_err(|e| KitError::Suite(format!("{e:?}")))
    }
}

/// A box norm: its `ε` vector and, when calibrated, the certificate
/// (which carries the calibration seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormFile {
    pub group: String,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub certificate: Option<NormCertificate>,
}

impl NormFile {
    pub fn from_norm(norm: &BoxNorm) -> Self {
        NormFile {
            group: norm.group().name().to_string(),
            epsilons: norm.epsilons().to_vec(),
            certificate: norm.certificate().cloned(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, KitError> {
        read_json(path)
    }

    pub fn to_norm(&self, group: &CarnotGroup) -> Result<BoxNorm, KitError> {
        let norm = BoxNorm::new(group, &self.epsilons).map_err(|e| KitError::Suite(format!("{e:?}")))?;
        Ok(match &self.certificate {
            Some(c) => norm.with_certificate(c.clone()),
            None => norm,
        })
    }
}

/// Points as a JSON array of coordinate arrays.
pub fn load_points(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, KitError> {
    let pts: Vec<Vec<f64>> = read_json(path)?;
    if let Some(p) = pts.iter().find(|p| p.len() != dim) {
        return Err(input_error(path, format!("point {p:?} does not have {dim} coordinates")));
    }
    Ok(pts)
}

/// Writes rows of numbers with an optional `#` comment line on top.
pub fn write_csv<W: Write>(out: W, comment: Option<&str>, header: &[String], rows: &[Vec<String>]) -> Result<(), KitError> {
    let mut out = out;
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input)
}

fn parse_rows<R: Read>(input: R, path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), KitError> {
    let mut r = csv_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| input_error(path, format!("`{f}`: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Weighted cloud as CSV with columns `x1..xn, w`.
#[derive(Clone, Debug, PartialEq)]
pub struct CloudCsv {
    pub dim: usize,
    /// Flat coordinates.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CloudCsv {
    pub fn header(dim: usize) -> Vec<String> {
        let mut h: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        h.push("w".into());
        h
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        self.points
            .chunks(self.dim)
            .zip(&self.weights)
            .map(|(p, w)| p.iter().chain(std::iter::once(w)).map(|x| x.to_string()).collect())
            .collect()
    }

    pub fn read_from<R: Read>(input: R, path: &Path) -> Result<Self, KitError> {
        let (header, rows) = parse_rows(input, path)?;
        if header.len() < 2 || header.last().map(String::as_str) != Some("w") {
            return Err(input_error(path, "expected columns x1..xn, w"));
        }
        let dim = header.len() - 1;
        let mut points = Vec::with_capacity(rows.len() * dim);
        let mut weights = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != dim + 1 {
                return Err(input_error(path, "ragged row"));
            }
            points.extend_from_slice(&row[..dim]);
            weights.push(row[dim]);
        }
        Ok(CloudCsv { dim, points, weights })
    }

    pub fn load(path: &Path) -> Result<Self, KitError> {
        Self::read_from(fs::File::open(path)?, path)
    }
}

/// Sampled fragment as CSV with columns `t, x1..xn`.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentCsv {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl FragmentCsv {
    pub fn header(dim: usize) -> Vec<String> {
        std::iter::once("t".to_string()).chain((1..=dim).map(|i| format!("x{i}"))).collect()
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        self.times
            .iter()
            .zip(&self.points)
            .map(|(t, p)| std::iter::once(t).chain(p).map(|x| x.to_string()).collect())
            .collect()
    }

    pub fn read_from<R: Read>(input: R, path: &Path) -> Result<Self, KitError> {
        let (header, rows) = parse_rows(input, path)?;
        if header.first().map(String::as_str) != Some("t") || header.len() < 2 {
            return Err(input_error(path, "expected columns t, x1..xn"));
        }
        let mut times = Vec::with_capacity(rows.len());
        let mut points = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != header.len() {
                return Err(input_error(path, "ragged row"));
            }
            times.push(row[0]);
            points.push(row[1..].to_vec());
        }
        Ok(FragmentCsv { times, points })
    }

    pub fn load(path: &Path) -> Result<Self, KitError> {
        Self::read_from(fs::File::open(path)?, path)
    }
}
