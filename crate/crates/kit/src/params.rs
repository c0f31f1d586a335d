//! `--params k=v` suite parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::Mutex;

use crate::error::KitError;

#[derive(Debug, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
    used: Mutex<BTreeSet<String>>,
}

impl Params {
    pub fn new(values: BTreeMap<String, String>) -> Self {
        Params { values, used: Mutex::new(BTreeSet::new()) }
    }

    /// Parses `k=v` pairs.
    pub fn parse<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Self, KitError> {
        let mut values = BTreeMap::new();
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| KitError::bad_param(p, "expected key=value"))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params::new(values))
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.used.lock().unwrap().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, KitError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| KitError::bad_param(key, e.to_string())),
        }
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, KitError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e: T::Err| KitError::bad_param(key, e.to_string())),
        }
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, KitError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| KitError::bad_param(key, e.to_string())))
                .collect(),
        }
    }

    /// Keys that no suite asked for.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.lock().unwrap();
        self.values.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }
}
