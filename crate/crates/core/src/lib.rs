#![no_std]
#![doc = include_str!("../README.md")]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
mod bch;
pub mod catalog;
pub mod cone;
pub mod decompose;
pub mod density;
pub mod drift;
pub mod fragment;
pub mod group;
pub mod hom;
pub mod index;
pub mod ledger;
pub mod linalg;
pub mod norm;
pub mod pansu;
pub mod sample;
pub mod scalar;
pub mod tiling;

pub use algebra::{
    AlgebraError, BracketEntry, DimensionMismatch, LieAlgebra, StratificationSpec, StructureError,
    Violation,
};
pub use group::{CarnotGroup, GroupError};
pub use scalar::{Exact, Scalar};
pub use hom::{HomError, HomValidation, HomogeneousHom};
pub use norm::{calibrate_box_norm, BoxNorm, CalibrationError, CalibrationOptions, NormCertificate};
