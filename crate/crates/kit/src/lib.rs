//! Batch experiment runner for `carnot-core`: group and tile catalogs, file
//! formats, the verification suites and their report files.

pub mod catalog;
pub mod error;
pub mod formats;
pub mod params;
pub mod report;
pub mod runner;
pub mod suites;
pub mod svg;

pub use error::KitError;
pub use report::{Check, SuiteReport, Table};
pub use runner::{execute, run_suite, ExperimentConfig};
