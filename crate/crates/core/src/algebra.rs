//! Stratified Lie algebras given by structure constants.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::linalg;
use crate::scalar::Scalar;

/// Tolerance used when validating structure constants.
pub const VALIDATION_TOL: f64 = 1e-12;

/// One structure constant: `[X_i, X_j]` has coefficient `c` on `X_k`.
/// Indices are 1-based, as in group definition files.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: f64,
}

impl BracketEntry {
    pub fn new(i: usize, j: usize, k: usize, c: f64) -> Self {
        BracketEntry { i, j, k, c }
    }
}

/// Malformed input that prevents the invariants from even being checked.
#[derive(Clone, Debug, PartialEq)]
pub enum StructureError {
    NoStrata,
    EmptyStratum { stratum: usize },
    IndexOutOfRange { entry: usize, index: usize, dim: usize },
    NonFiniteConstant { entry: usize },
}

impl fmt::Display for StructureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureError::NoStrata => write!(f, "stratification has no strata"),
            StructureError::EmptyStratum { stratum } => {
                write!(f, "stratum {stratum} has dimension 0")
            }
            StructureError::IndexOutOfRange { entry, index, dim } => write!(
                f,
                "bracket entry {entry}: basis index {index} outside [1, {dim}]"
            ),
            StructureError::NonFiniteConstant { entry } => {
                write!(f, "bracket entry {entry}: non-finite structure constant")
            }
        }
    }
}

/// A violated algebra invariant. Indices are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// `[X_i, X_j]` and `[X_j, X_i]` disagree on `X_k`.
    Antisymmetry { i: usize, j: usize, k: usize, c_ij: f64, c_ji: f64 },
    /// `[X_i, X_i]` has a nonzero component.
    SelfBracket { i: usize, k: usize, c: f64 },
    /// `[X_i, X_j]` has a component outside `V_{a+b}`.
    Grading { i: usize, j: usize, k: usize, c: f64 },
    /// Jacobi identity fails on the basis triple.
    Jacobi { i: usize, j: usize, k: usize, defect: f64 },
    /// `[V_1, V_stratum]` does not span `V_{stratum+1}`.
    Generation { stratum: usize, rank: usize, expected: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Antisymmetry { i, j, k, c_ij, c_ji } => write!(
                f,
                "antisymmetry: [X{i},X{j}] has {c_ij} on X{k} but [X{j},X{i}] has {c_ji}"
            ),
            Violation::SelfBracket { i, k, c } => {
                write!(f, "antisymmetry: [X{i},X{i}] has {c} on X{k}")
            }
            Violation::Grading { i, j, k, c } => {
                write!(f, "grading: [X{i},X{j}] has {c} on X{k}, outside the expected stratum")
            }
            Violation::Jacobi { i, j, k, defect } => {
                write!(f, "jacobi: triple (X{i},X{j},X{k}) has defect {defect:e}")
            }
            Violation::Generation { stratum, rank, expected } => write!(
                f,
                "generation: [V1,V{stratum}] has rank {rank}, expected {expected}"
            ),
        }
    }
}

/// Raw description of a stratified algebra, as read from a definition file.
#[derive(Clone, Debug, PartialEq)]
pub struct StratificationSpec {
    name: String,
    strata: Vec<usize>,
    entries: Vec<BracketEntry>,
}

impl StratificationSpec {
    pub fn new(
        name: impl Into<String>,
        strata: Vec<usize>,
        entries: Vec<BracketEntry>,
    ) -> Result<Self, StructureError> {
        if strata.is_empty() {
            return Err(StructureError::NoStrata);
        }
        if let Some(pos) = strata.iter().position(|&d| d == 0) {
            return Err(StructureError::EmptyStratum { stratum: pos + 1 });
        }
        let dim: usize = strata.iter().sum();
        for (idx, e) in entries.iter().enumerate() {
            for index in [e.i, e.j, e.k] {
                if index == 0 || index > dim {
                    return Err(StructureError::IndexOutOfRange { entry: idx, index, dim });
                }
            }
            if !e.c.is_finite() {
                return Err(StructureError::NonFiniteConstant { entry: idx });
            }
        }
        Ok(StratificationSpec { name: name.into(), strata, entries })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn strata(&self) -> &[usize] {
        &self.strata
    }

    pub fn entries(&self) -> &[BracketEntry] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.strata.iter().sum()
    }

    pub fn step(&self) -> usize {
        self.strata.len()
    }

    /// `Q = Σ j·n_j`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.strata.iter().enumerate().map(|(j, n)| (j + 1) * n).sum()
    }

    /// Checks antisymmetry, grading, Jacobi and generation.
    /// An empty list means the spec defines a stratified algebra.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let table = self.closure(&mut out);
        let n = self.dim();
        let stratum_of = stratum_index(&self.strata);
        let s = self.step();

        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = table[(i * n + j) * n + k];
                    if c.abs() <= VALIDATION_TOL || i > j {
                        continue;
                    }
                    // 0-based index of V_{a+b}
                    let want = stratum_of[i] + stratum_of[j] + 1;
                    if want >= s || stratum_of[k] != want {
                        out.push(Violation::Grading { i: i + 1, j: j + 1, k: k + 1, c });
                    }
                }
            }
        }

        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let defect = jacobi_defect(&table, n, a, b, c);
                    if defect > VALIDATION_TOL {
                        out.push(Violation::Jacobi { i: a + 1, j: b + 1, k: c + 1, defect });
                    }
                }
            }
        }

        let offsets = offsets(&self.strata);
        for st in 1..s {
            let next = offsets[st]..offsets[st + 1];
            let mut rows = Vec::new();
            for a in offsets[0]..offsets[1] {
                for b in offsets[st - 1]..offsets[st] {
                    let row: Vec<f64> = next.clone().map(|k| table[(a * n + b) * n + k]).collect();
                    rows.push(row);
                }
            }
            let rank = linalg::rank(&rows, next.len(), 1e-9);
            if rank != self.strata[st] {
                out.push(Violation::Generation {
                    stratum: st,
                    rank,
                    expected: self.strata[st],
                });
            }
        }
        out
    }

    /// Dense antisymmetric table built from entries with `i < j`; entries
    /// with `i > j` only fill gaps and are otherwise checked for consistency.
    fn closure(&self, violations: &mut Vec<Violation>) -> Vec<f64> {
        let n = self.dim();
        let mut table = vec![0.0; n * n * n];
        let at = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
        let mut given = vec![false; n * n * n];
        for e in &self.entries {
            let (i, j, k) = (e.i - 1, e.j - 1, e.k - 1);
            if i == j {
                if e.c.abs() > VALIDATION_TOL {
                    violations.push(Violation::SelfBracket { i: e.i, k: e.k, c: e.c });
                }
                continue;
            }
            if i < j {
                table[at(i, j, k)] += e.c;
                given[at(i, j, k)] = true;
            }
        }
        for e in &self.entries {
            let (i, j, k) = (e.i - 1, e.j - 1, e.k - 1);
            if i <= j {
                continue;
            }
            if given[at(j, i, k)] {
                let c_ji = table[at(j, i, k)];
                if (c_ji + e.c).abs() > VALIDATION_TOL {
                    violations.push(Violation::Antisymmetry {
                        i: e.j,
                        j: e.i,
                        k: e.k,
                        c_ij: c_ji,
                        c_ji: e.c,
                    });
                }
            } else {
                table[at(j, i, k)] = -e.c;
                given[at(j, i, k)] = true;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    table[at(j, i, k)] = -table[at(i, j, k)];
                }
            }
        }
        table
    }
}

fn jacobi_defect(table: &[f64], n: usize, a: usize, b: usize, c: usize) -> f64 {
    let t = |i: usize, j: usize, k: usize| table[(i * n + j) * n + k];
    let mut worst = 0.0f64;
    for m in 0..n {
        let mut sum = 0.0;
        for k in 0..n {
            sum += t(a, b, k) * t(k, c, m) + t(b, c, k) * t(k, a, m) + t(c, a, k) * t(k, b, m);
        }
        worst = worst.max(sum.abs());
    }
    worst
}

fn offsets(strata: &[usize]) -> Vec<usize> {
    let mut out = vec![0];
    for d in strata {
        out.push(out.last().unwrap() + d);
    }
    out
}

fn stratum_index(strata: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for (j, &d) in strata.iter().enumerate() {
        out.extend(core::iter::repeat(j).take(d));
    }
    out
}

/// Rejected specification.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgebraError {
    Structure(StructureError),
    Invalid(Vec<Violation>),
}

impl fmt::Display for AlgebraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraError::Structure(e) => write!(f, "{e}"),
            AlgebraError::Invalid(v) => {
                write!(f, "{} invariant violation(s)", v.len())?;
                for item in v {
                    write!(f, "; {item}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<StructureError> for AlgebraError {
    fn from(e: StructureError) -> Self {
        AlgebraError::Structure(e)
    }
}

/// Length mismatch between a vector and the algebra or group it is used with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimensionMismatch {
    pub expected: usize,
    pub found: usize,
}

impl fmt::Display for DimensionMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expected a vector of length {}, got {}", self.expected, self.found)
    }
}

pub(crate) fn check_len(v: &[impl Sized], n: usize) -> Result<(), DimensionMismatch> {
    if v.len() == n {
        Ok(())
    } else {
        Err(DimensionMismatch { expected: n, found: v.len() })
    }
}

/// A validated stratified Lie algebra.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    spec: StratificationSpec,
    offsets: Vec<usize>,
    stratum_of: Vec<usize>,
    table: Vec<f64>,
    /// For each `(a, b)` the nonzero `(k, c)` with `[X_a, X_b] = Σ c X_k`.
    sparse: Vec<Vec<(usize, f64)>>,
}

impl LieAlgebra {
    pub fn new(spec: StratificationSpec) -> Result<Self, AlgebraError> {
        let violations = spec.validate();
        if !violations.is_empty() {
            return Err(AlgebraError::Invalid(violations));
        }
        let table = spec.closure(&mut Vec::new());
        let n = spec.dim();
        let mut sparse = vec![Vec::new(); n * n];
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let c = table[(a * n + b) * n + k];
                    if c != 0.0 {
                        sparse[a * n + b].push((k, c));
                    }
                }
            }
        }
        Ok(LieAlgebra {
            offsets: offsets(spec.strata()),
            stratum_of: stratum_index(spec.strata()),
            spec,
            table,
            sparse,
        })
    }

    pub fn spec(&self) -> &StratificationSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        self.spec.name()
    }

    pub fn dim(&self) -> usize {
        self.stratum_of.len()
    }

    pub fn step(&self) -> usize {
        self.spec.step()
    }

    pub fn rank(&self) -> usize {
        self.spec.strata()[0]
    }

    pub fn strata(&self) -> &[usize] {
        self.spec.strata()
    }

    pub fn homogeneous_dimension(&self) -> usize {
        self.spec.homogeneous_dimension()
    }

    /// Coordinate range of stratum `j` (1-based).
    pub fn stratum_range(&self, j: usize) -> Range<usize> {
        self.offsets[j - 1]..self.offsets[j]
    }

    /// Stratum (1-based) holding basis vector `idx` (0-based).
    pub fn stratum_of(&self, idx: usize) -> usize {
        self.stratum_of[idx] + 1
    }

    /// Structure constant of `[X_a, X_b]` on `X_k` (0-based).
    pub fn structure_constant(&self, a: usize, b: usize, k: usize) -> f64 {
        let n = self.dim();
        self.table[(a * n + b) * n + k]
    }

    pub(crate) fn nonzero(&self, a: usize, b: usize) -> &[(usize, f64)] {
        &self.sparse[a * self.dim() + b]
    }

    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>, DimensionMismatch> {
        check_len(u, self.dim())?;
        check_len(v, self.dim())?;
        Ok(self.bracket_generic(u, v))
    }

    pub fn bracket_generic<S: Scalar>(&self, u: &[S], v: &[S]) -> Vec<S> {
        let n = self.dim();
        let mut out = vec![S::zero(); n];
        for a in 0..n {
            for b in a + 1..n {
                let terms = self.nonzero(a, b);
                if terms.is_empty() {
                    continue;
                }
                let w = u[a].clone() * v[b].clone() - u[b].clone() * v[a].clone();
                if w.is_zero() {
                    continue;
                }
                for &(k, c) in terms {
                    out[k] = out[k].clone() + S::from_f64(c) * w.clone();
                }
            }
        }
        out
    }

    /// `π_j(v)`: keeps stratum `j` (1-based) and zeroes the rest.
    pub fn project(&self, v: &[f64], j: usize) -> Vec<f64> {
        let r = self.stratum_range(j);
        v.iter()
            .enumerate()
            .map(|(i, &x)| if r.contains(&i) { x } else { 0.0 })
            .collect()
    }
}
