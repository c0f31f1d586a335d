//! Group and tile definitions shipped with the tool.

use std::path::Path;

use carnot_core::tiling::catalog_tile;
use carnot_core::{catalog, CarnotGroup, StratificationSpec};

use crate::error::KitError;
use crate::formats::{GroupFile, TileFile};

pub const GROUP_FILES: [(&str, &str); 7] = [
    ("euclidean1", include_str!("../catalog/groups/euclidean1.json")),
    ("euclidean2", include_str!("../catalog/groups/euclidean2.json")),
    ("euclidean3", include_str!("../catalog/groups/euclidean3.json")),
    ("heisenberg1", include_str!("../catalog/groups/heisenberg1.json")),
    ("heisenberg2", include_str!("../catalog/groups/heisenberg2.json")),
    ("engel", include_str!("../catalog/groups/engel.json")),
    ("free-2-3", include_str!("../catalog/groups/free-2-3.json")),
];

pub const TILE_FILES: [(&str, &str); 3] = [
    ("euclidean1", include_str!("../catalog/tiles/euclidean1.json")),
    ("euclidean2", include_str!("../catalog/tiles/euclidean2.json")),
    ("heisenberg1", include_str!("../catalog/tiles/heisenberg1.json")),
];

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub dim: usize,
    pub q: usize,
}

pub fn group_file(name: &str) -> Option<GroupFile> {
    GROUP_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| GroupFile::parse(text).expect("shipped group files parse"))
}

/// Shipped group names with their homogeneous dimension.
pub fn list_catalog() -> Vec<CatalogEntry> {
    GROUP_FILES
        .iter()
        .map(|(name, _)| {
            let spec = group_file(name).unwrap().to_spec().unwrap();
            CatalogEntry { name: name.to_string(), dim: spec.dim(), q: spec.homogeneous_dimension() }
        })
        .collect()
}

/// A shipped file by name, then the generated families (`euclideanN`,
/// `heisenbergN`).
pub fn resolve_name(name: &str) -> Result<GroupFile, KitError> {
    if let Some(f) = group_file(name) {
        return Ok(f);
    }
    catalog::by_name(name)
        .map(|s: StratificationSpec| GroupFile::from_spec(&s))
        .ok_or_else(|| KitError::UnknownGroup(name.to_string()))
}

/// `--spec` path wins over `--group`; with neither, `fallback` is used.
pub fn resolve(group: Option<&str>, spec: Option<&Path>, fallback: &str) -> Result<(GroupFile, CarnotGroup), KitError> {
    let file = match (spec, group) {
        (Some(path), _) => GroupFile::load(path)?,
        (None, Some(name)) => resolve_name(name)?,
        (None, None) => resolve_name(fallback)?,
    };
    let group = file.to_group()?;
    Ok((file, group))
}

pub fn tile_file(name: &str) -> Option<TileFile> {
    TILE_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| serde_json::from_str(text).expect("shipped tile files parse"))
}

/// Analytic `λ` of a shipped tile, when known.
pub fn tile_lambda(name: &str) -> Option<f64> {
    catalog_tile(name).and_then(|t| t.lambda)
}
