//! Stratified algebras used throughout the examples and tests.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{BracketEntry, StratificationSpec};

/// Abelian `ℝⁿ`, a single stratum.
pub fn euclidean(n: usize) -> StratificationSpec {
    StratificationSpec::new(format!("euclidean{n}"), vec![n], Vec::new())
        .expect("n must be positive")
}

/// Heisenberg group of topological dimension `2n+1`: `[X_i, X_{n+i}] = X_{2n+1}`.
pub fn heisenberg(n: usize) -> StratificationSpec {
    let entries = (1..=n).map(|i| BracketEntry::new(i, n + i, 2 * n + 1, 1.0)).collect();
    StratificationSpec::new(format!("heisenberg{n}"), vec![2 * n, 1], entries)
        .expect("n must be positive")
}

/// Engel group: `[X1,X2] = X3`, `[X1,X3] = X4`.
pub fn engel() -> StratificationSpec {
    StratificationSpec::new(
        "engel",
        vec![2, 1, 1],
        vec![BracketEntry::new(1, 2, 3, 1.0), BracketEntry::new(1, 3, 4, 1.0)],
    )
    .unwrap()
}

/// Free nilpotent group of step 2 on three generators.
pub fn free_step2_rank3() -> StratificationSpec {
    StratificationSpec::new(
        "free-2-3",
        vec![3, 3],
        vec![
            BracketEntry::new(1, 2, 4, 1.0),
            BracketEntry::new(1, 3, 5, 1.0),
            BracketEntry::new(2, 3, 6, 1.0),
        ],
    )
    .unwrap()
}

/// Looks up a built-in algebra by name (`euclidean<n>`, `heisenberg<n>`,
/// `engel`, `free-2-3`).
pub fn by_name(name: &str) -> Option<StratificationSpec> {
    let parse = |prefix: &str| -> Option<usize> {
        name.strip_prefix(prefix)?.parse().ok().filter(|&n: &usize| (1..=64).contains(&n))
    };
    match name {
        "engel" => Some(engel()),
        "free-2-3" => Some(free_step2_rank3()),
        _ => parse("euclidean")
            .map(euclidean)
            .or_else(|| parse("heisenberg").map(heisenberg)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        assert_eq!(by_name("heisenberg1").unwrap().homogeneous_dimension(), 4);
        assert_eq!(by_name("heisenberg3").unwrap().homogeneous_dimension(), 8);
        assert_eq!(by_name("euclidean3").unwrap().homogeneous_dimension(), 3);
        assert_eq!(by_name("free-2-3").unwrap().homogeneous_dimension(), 9);
        assert!(by_name("bogus").is_none());
        assert!(by_name("euclidean0").is_none());
    }

    #[test]
    fn catalog_validates() {
        for spec in [euclidean(3), heisenberg(1), heisenberg(2), engel(), free_step2_rank3()] {
            assert!(spec.validate().is_empty(), "{}", spec.name());
        }
    }
}
