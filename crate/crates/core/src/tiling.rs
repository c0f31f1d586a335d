//! Self-similar tiles `T = ⋃ p_j·δ_{1/2}(T)` as attractors of `2^Q`
//! contractions, their verification, translation and the reachability of
//! subcube centres by horizontal words.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decompose::{DecomposeError, Decomposer};
use crate::group::CarnotGroup;
use crate::index::BallIndex;
use crate::norm::BoxNorm;
use crate::sample;

/// Tiles verified by box counting have at most this many coordinates.
pub const MAX_GRID_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum TileError {
    CenterCount { expected: usize, found: usize },
    Dimension { expected: usize, found: usize },
    TooManyCoordinates(usize),
}

impl fmt::Display for TileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TileError::CenterCount { expected, found } => {
                write!(f, "a tile needs 2^Q = {expected} centres, got {found}")
            }
            TileError::Dimension { expected, found } => {
                write!(f, "centre has {found} coordinates, the group has {expected}")
            }
            TileError::TooManyCoordinates(n) => {
                write!(f, "box counting supports at most {MAX_GRID_DIM} coordinates, got {n}")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TileSpec {
    group: CarnotGroup,
    centers: Vec<Vec<f64>>,
}

impl TileSpec {
    pub fn new(group: &CarnotGroup, centers: Vec<Vec<f64>>) -> Result<Self, TileError> {
        let expected = 1usize << group.homogeneous_dimension();
        if centers.len() != expected {
            return Err(TileError::CenterCount { expected, found: centers.len() });
        }
        if let Some(c) = centers.iter().find(|c| c.len() != group.dim()) {
            return Err(TileError::Dimension { expected: group.dim(), found: c.len() });
        }
        Ok(TileSpec { group: group.clone(), centers })
    }

    /// Centres `δ_{1/2}(d)` for a digit set `d` of a dilation-invariant lattice.
    pub fn from_digits(group: &CarnotGroup, digits: &[Vec<f64>]) -> Result<Self, TileError> {
        let centers = digits
            .iter()
            .map(|d| {
                let mut c = d.clone();
                group.dilate_in_place(0.5, &mut c);
                c
            })
            .collect();
        Self::new(group, centers)
    }

    pub fn group(&self) -> &CarnotGroup {
        &self.group
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Number of points at `depth`.
    pub fn cloud_size(&self, depth: u32) -> u64 {
        (self.centers.len() as u64).saturating_pow(depth)
    }

    /// All depth-`k` address points as a flat array, in lexicographic order
    /// of addresses: cloud_k = ⋃_j p_j·δ_{1/2}(cloud_{k−1}), cloud_0 = {0}.
    pub fn attractor(&self, depth: u32) -> Vec<f64> {
        let g = &self.group;
        let dim = g.dim();
        let mut cloud = g.identity();
        for _ in 0..depth {
            cloud = self.next_level(&cloud);
        }
        debug_assert_eq!(cloud.len() % dim, 0);
        cloud
    }

    fn next_level(&self, cloud: &[f64]) -> Vec<f64> {
        let g = &self.group;
        let dim = g.dim();
        let mut out = vec![0.0; cloud.len() * self.centers.len()];
        let mut half = vec![0.0; dim];
        let mut k = 0;
        for c in &self.centers {
            for x in cloud.chunks_exact(dim) {
                half.copy_from_slice(x);
                g.dilate_in_place(0.5, &mut half);
                g.mul_into(c, &half, &mut out[k * dim..(k + 1) * dim]);
                k += 1;
            }
        }
        out
    }

    /// Streams the depth-`k` cloud (same order as [`TileSpec::attractor`])
    /// as `(first letter, point)`, keeping only depth `k − 1` in memory.
    pub fn for_each_point(&self, depth: u32, mut f: impl FnMut(usize, &[f64])) {
        let g = &self.group;
        let dim = g.dim();
        if depth == 0 {
            f(0, &g.identity());
            return;
        }
        let mut prev = self.attractor(depth - 1);
        for x in prev.chunks_exact_mut(dim) {
            g.dilate_in_place(0.5, x);
        }
        let mut p = vec![0.0; dim];
        for (j, c) in self.centers.iter().enumerate() {
            for x in prev.chunks_exact(dim) {
                g.mul_into(c, x, &mut p);
                f(j, &p);
            }
        }
    }

    /// Point of the address `w₁…w_k`, accumulated from the left as
    /// `p_{w₁}·δ_{1/2}(p_{w₂})·δ_{1/4}(p_{w₃})⋯`.
    pub fn address_point(&self, word: &[usize]) -> Vec<f64> {
        let g = &self.group;
        let mut acc = g.identity();
        let mut scale = 1.0;
        for &w in word {
            let mut c = self.centers[w].clone();
            g.dilate_in_place(scale, &mut c);
            acc = g.mul(&acc, &c);
            scale *= 0.5;
        }
        acc
    }

    /// Distance between the streamed depth-`k` cloud and the union
    /// `⋃ p_j·δ_{1/2}(cloud_{k−1})` assembled point by point; matched by
    /// address, so an upper bound for the two-sided Hausdorff distance.
    pub fn self_similarity_defect(&self, norm: &BoxNorm, depth: u32) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        let g = &self.group;
        let dim = g.dim();
        let prev = self.attractor(depth - 1);
        let per = prev.len() / dim;
        let mut idx = 0usize;
        let mut defect = 0.0f64;
        self.for_each_point(depth, |j, p| {
            let m = idx - j * per;
            let mut x = prev[m * dim..(m + 1) * dim].to_vec();
            g.dilate_in_place(0.5, &mut x);
            defect = defect.max(norm.distance(p, &g.mul(&self.centers[j], &x)));
            idx += 1;
        });
        defect
    }

    /// Largest box-norm distance between the depth-`k` cloud and the same
    /// addresses accumulated from the left as in [`TileSpec::address_point`].
    /// Zero for dyadic centres; otherwise of the order of rounding.
    pub fn address_drift(&self, norm: &BoxNorm, depth: u32) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        let g = &self.group;
        let dim = g.dim();
        let m = self.centers.len();
        let scaled: Vec<Vec<Vec<f64>>> = (0..depth)
            .map(|i| {
                self.centers
                    .iter()
                    .map(|c| {
                        let mut c = c.clone();
                        g.dilate_in_place(libm::pow(0.5, i as f64), &mut c);
                        c
                    })
                    .collect()
            })
            .collect();
        let mut leaves: Vec<f64> = Vec::with_capacity(self.cloud_size(depth) as usize * dim);
        let mut stack: Vec<(usize, Vec<f64>)> = vec![(0, g.identity())];
        while let Some((level, acc)) = stack.pop() {
            if level as u32 == depth {
                leaves.extend_from_slice(&acc);
                continue;
            }
            for j in (0..m).rev() {
                stack.push((level + 1, g.mul(&acc, &scaled[level][j])));
            }
        }
        let mut k = 0usize;
        let mut drift = 0.0f64;
        self.for_each_point(depth, |_, p| {
            drift = drift.max(norm.distance(p, &leaves[k * dim..(k + 1) * dim]));
            k += 1;
        });
        drift
    }

    /// Box-counted overlap at `depth`: grid cells of side `h^j` on stratum
    /// `j` (`h = 2^{−grid_depth}`, aligned at the origin) that contain points
    /// of two or more first-level subcubes, over all occupied cells.
    pub fn overlap(&self, depth: u32, grid_depth: u32) -> Result<Overlap, TileError> {
        let g = &self.group;
        let dim = g.dim();
        if dim > MAX_GRID_DIM {
            return Err(TileError::TooManyCoordinates(dim));
        }
        let h = libm::pow(0.5, grid_depth as f64);
        let sides: Vec<f64> = g.weights().iter().map(|&w| libm::pow(h, w as f64)).collect();
        const MULTI: u32 = u32::MAX;
        let mut cells: HashMap<[i64; MAX_GRID_DIM], u32> = HashMap::new();
        self.for_each_point(depth, |label, p| {
            let mut key = [0i64; MAX_GRID_DIM];
            for c in 0..dim {
                key[c] = libm::floor(p[c] / sides[c]) as i64;
            }
            cells
                .entry(key)
                .and_modify(|s| {
                    if *s != label as u32 {
                        *s = MULTI;
                    }
                })
                .or_insert(label as u32);
        });
        let occupied = cells.len();
        let shared = cells.values().filter(|&&s| s == MULTI).count();
        Ok(Overlap { depth, grid_depth, occupied, shared, fraction: shared as f64 / occupied as f64 })
    }

    /// Deepest level with at most `cap` points.
    fn capped_depth(&self, depth: u32, cap: u64) -> u32 {
        let mut d = 0;
        while d < depth && self.cloud_size(d + 1) <= cap {
            d += 1;
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Overlap {
    pub depth: u32,
    pub grid_depth: u32,
    pub occupied: usize,
    pub shared: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Grid level for box counting; defaults to `depth − 1`.
    pub grid_depth: Option<u32>,
    /// Random sphere points per tested radius.
    pub sphere_samples: usize,
    pub radii: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { grid_depth: None, sphere_samples: 64, radii: 400, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TileReport {
    pub depth: u32,
    pub points: u64,
    pub self_similarity_defect: f64,
    pub overlap: Overlap,
    /// Largest tested radius `r` with `B(0, r)` inside the `η`-neighbourhood of the cloud.
    pub lambda_emp: f64,
    pub hull_radius: f64,
    pub diam_emp: f64,
    pub valid: bool,
}

/// Largest pairwise distance in a flat cloud.
pub fn cloud_diameter(norm: &BoxNorm, cloud: &[f64]) -> f64 {
    let dim = norm.group().dim();
    let pts: Vec<&[f64]> = cloud.chunks_exact(dim).collect();
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(norm.distance(pts[i], pts[j]));
        }
    }
    d
}

/// Largest of `radii` equally spaced radii up to the cloud's extent for which
/// every tested point of the sphere (coordinate directions and random
/// points) lies within `hull` of the cloud, scanning outwards.
pub fn interior_radius(norm: &BoxNorm, cloud: &[f64], hull: f64, radii: usize, samples: usize, seed: u64) -> f64 {
    let g = norm.group();
    let dim = g.dim();
    let extent = cloud.chunks_exact(dim).map(|p| norm.norm(p)).fold(0.0, f64::max);
    if extent == 0.0 || hull == 0.0 {
        return 0.0;
    }
    let index = BallIndex::new(norm, cloud, hull.max(1e-9));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for c in 0..dim {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; dim];
            p[c] = sign;
            let r = norm.norm(&p);
            g.dilate_in_place(1.0 / r, &mut p);
            directions.push(p);
        }
    }
    directions.extend((0..samples).map(|_| sample::unit_sphere(norm, &mut rng)));
    if !index.any_within(&g.identity(), hull) {
        return 0.0;
    }
    let mut last = 0.0;
    for i in 1..=radii {
        let r = extent * i as f64 / radii as f64;
        let inside = directions.iter().all(|d| {
            let mut p = d.clone();
            g.dilate_in_place(r, &mut p);
            index.any_within(&p, hull)
        });
        if !inside {
            break;
        }
        last = r;
    }
    last
}

/// Self-similarity defect, overlap, interior radius and diameter of a tile at `depth`.
pub fn verify_tile(spec: &TileSpec, norm: &BoxNorm, depth: u32, options: &VerifyOptions) -> Result<TileReport, TileError> {
    let grid_depth = options.grid_depth.unwrap_or(depth.saturating_sub(1));
    let overlap = spec.overlap(depth, grid_depth)?;
    let defect = spec.self_similarity_defect(norm, depth);
    let small = spec.attractor(spec.capped_depth(depth, 4096));
    let diam_emp = cloud_diameter(norm, &small);
    let hull_depth = spec.capped_depth(depth, 1 << 16);
    let cloud = spec.attractor(hull_depth);
    let hull_radius = libm::pow(0.5, hull_depth as f64) * diam_emp;
    let lambda_emp = interior_radius(norm, &cloud, hull_radius, options.radii, options.sphere_samples, options.seed);
    Ok(TileReport {
        depth,
        points: spec.cloud_size(depth),
        self_similarity_defect: defect,
        overlap,
        lambda_emp,
        hull_radius,
        diam_emp,
        valid: defect == 0.0 && lambda_emp > 0.0,
    })
}

/// A shipped tile: its centres and how they were obtained.
#[derive(Clone, Debug)]
pub struct CatalogTile {
    pub spec: TileSpec,
    pub provenance: &'static str,
    /// Radius of the largest ball about the identity inside the limit tile, when known.
    pub lambda: Option<f64>,
}

/// Built-in tiles: `euclidean1`, `euclidean2` and `heisenberg1`.
pub fn catalog_tile(name: &str) -> Option<CatalogTile> {
    let spec = crate::catalog::by_name(name)?;
    let g = CarnotGroup::new(spec).ok()?;
    match name {
        "euclidean1" => Some(CatalogTile {
            spec: TileSpec::new(&g, vec![vec![-1.0 / 6.0], vec![1.0 / 3.0]]).ok()?,
            provenance: "interval [-1/3, 2/3] split at 1/6",
            lambda: Some(1.0 / 3.0),
        }),
        "euclidean2" => {
            let centers = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
                .iter()
                .map(|&(a, b)| vec![a * 0.25, b * 0.25])
                .collect();
            Some(CatalogTile {
                spec: TileSpec::new(&g, centers).ok()?,
                provenance: "square [-1/2, 1/2]^2 split into quadrants",
                lambda: Some(0.5),
            })
        }
        "heisenberg1" => {
            let mut digits = Vec::new();
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..4 {
                        digits.push(vec![a as f64, b as f64, c as f64 / 2.0]);
                    }
                }
            }
            let base = TileSpec::from_digits(&g, &digits).ok()?;
            let norm = BoxNorm::new(&g, &[1.0]).ok()?;
            let tile = translate_tile(&base, &norm, &[-0.5, -0.5, -0.25], None);
            Some(CatalogTile {
                spec: tile.spec,
                provenance: "digits (a, b, c/2), a,b in {0,1}, c in {0..3}, of the lattice Z x Z x Z/2, \
                             contracted by 1/2 and left-translated by (-1/2, -1/2, -1/4)",
                lambda: None,
            })
        }
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationWarning {
    pub tau_norm: f64,
    /// `λ/4`, the intended bound on `∥τ∥`.
    pub limit: f64,
}

#[derive(Clone, Debug)]
pub struct TranslatedTile {
    pub spec: TileSpec,
    pub warning: Option<TranslationWarning>,
}

/// Centres `τ·p_j·δ_{1/2}(τ)⁻¹`, whose attractor is `τ·T`. Warns when
/// `∥τ∥ ≥ λ/4` for the supplied interior radius.
pub fn translate_tile(spec: &TileSpec, norm: &BoxNorm, tau: &[f64], lambda: Option<f64>) -> TranslatedTile {
    let g = spec.group();
    let mut half = tau.to_vec();
    g.dilate_in_place(0.5, &mut half);
    let half_inv = g.inverse(&half);
    let centers = spec.centers().iter().map(|p| g.mul(&g.mul(tau, p), &half_inv)).collect();
    let tau_norm = norm.norm(tau);
    let warning = lambda
        .filter(|&l| tau_norm >= l / 4.0)
        .map(|l| TranslationWarning { tau_norm, limit: l / 4.0 });
    TranslatedTile { spec: TileSpec { group: g.clone(), centers }, warning }
}

/// Largest sup-coordinate difference between the translated cloud and
/// `τ·cloud_k·δ_{2^{−k}}(τ)⁻¹` (the depth-`k` form of `τ·T`).
pub fn translation_defect(original: &TileSpec, translated: &TileSpec, tau: &[f64], depth: u32) -> f64 {
    let g = original.group();
    let dim = g.dim();
    let mut tail = tau.to_vec();
    g.dilate_in_place(libm::pow(0.5, depth as f64), &mut tail);
    let tail_inv = g.inverse(&tail);
    let old = original.attractor(depth);
    let mut k = 0;
    let mut defect = 0.0f64;
    translated.for_each_point(depth, |_, p| {
        let x = &old[k * dim..(k + 1) * dim];
        let expected = g.mul(&g.mul(tau, x), &tail_inv);
        for (a, b) in p.iter().zip(&expected) {
            defect = defect.max((a - b).abs());
        }
        k += 1;
    });
    defect
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachParams {
    /// Lower bound for nonzero letters.
    pub xi: f64,
    /// Scale `Λ` in the upper bound `max|s| ≤ (nΛ/diam T)∥y⁻¹p∥`.
    pub big_lambda: f64,
    pub diam: f64,
    /// Radius of the ball sampled for `y`.
    pub rho: f64,
    /// Points `y` per centre, the first one being `0`.
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CenterReach {
    pub passed: usize,
    pub total: usize,
    pub min_nonzero: f64,
    /// Largest `max|s| / ((nΛ/diam T)∥y⁻¹p∥)`; at most 1 when the upper bound holds.
    pub max_bound_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReachReport {
    pub pairs: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    pub decomposition_failures: usize,
    pub min_nonzero: f64,
    pub max_bound_ratio: f64,
    pub per_center: Vec<CenterReach>,
}

/// Relative size below which a merged letter counts as zero.
const ZERO_LETTER: f64 = 1e-12;

/// Nonzero letters of the reduced word for `y⁻¹p`.
pub fn reduced_scalars(dec: &Decomposer, target: &[f64]) -> Result<Vec<f64>, DecomposeError> {
    let word = dec.decompose(target)?;
    let merged = word.merged();
    let top = merged.iter().fold(0.0f64, |m, l| m.max(l.1.abs()));
    Ok(merged.into_iter().map(|l| l.1).filter(|s| s.abs() > ZERO_LETTER * top.max(1.0)).collect())
}

fn reach_targets(spec: &TileSpec, norm: &BoxNorm, rho: f64, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let g = norm.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples.max(1))
        .map(|i| {
            if i == 0 {
                g.identity()
            } else {
                let mut y = sample::unit_ball(norm, &mut rng);
                g.dilate_in_place(rho, &mut y);
                y
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flat_map(|y| {
            let y_inv = g.inverse(&y);
            spec.centers().iter().map(move |p| g.mul(&y_inv, p)).collect::<Vec<_>>()
        })
        .collect()
}

/// Best reduced word for `target` over several decomposers: among words
/// meeting `max|s| ≤ factor·∥target∥`, the one whose smallest nonzero
/// letter is largest; otherwise the word with the smallest `max|s|`.
/// Returns `(min nonzero, max|s| / (factor·∥target∥))`.
fn best_word(decs: &[Decomposer], target: &[f64], factor: f64) -> Option<(f64, f64)> {
    let size = decs.first()?.norm().norm(target);
    let mut best: Option<(f64, f64)> = None;
    for dec in decs {
        let Ok(scalars) = reduced_scalars(dec, target) else { continue };
        let min = scalars.iter().fold(f64::INFINITY, |m, s| m.min(s.abs()));
        let max = scalars.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let ratio = if size > 0.0 { max / (factor * size) } else if max == 0.0 { 0.0 } else { f64::INFINITY };
        let better = match best {
            None => true,
            Some((bmin, bratio)) => match (ratio <= 1.0, bratio <= 1.0) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => min > bmin,
                (false, false) => ratio < bratio,
            },
        };
        if better {
            best = Some((min, ratio));
        }
    }
    best
}

/// For each centre `p_j` and sampled `y ∈ B(0, ρ)` (the first being `0`),
/// decomposes `y⁻¹p_j` with each decomposer in `decs` (same basis, different
/// patterns or anchors), keeps the best reduced word and checks
/// `min{|s| : s ≠ 0} > ξ` and `max|s| ≤ (nΛ/diam T)∥y⁻¹p_j∥`.
pub fn reachability_check(spec: &TileSpec, decs: &[Decomposer], params: &ReachParams) -> ReachReport {
    let mut report = ReachReport {
        pairs: 0,
        passed: 0,
        pass_fraction: 0.0,
        decomposition_failures: 0,
        min_nonzero: f64::INFINITY,
        max_bound_ratio: 0.0,
        per_center: spec
            .centers()
            .iter()
            .map(|_| CenterReach { passed: 0, total: 0, min_nonzero: f64::INFINITY, max_bound_ratio: 0.0 })
            .collect(),
    };
    let Some(first) = decs.first() else { return report };
    let norm = first.norm();
    let factor = norm.group().dim() as f64 * params.big_lambda / params.diam;
    let targets = reach_targets(spec, norm, params.rho, params.samples, params.seed);
    let m = spec.centers().len();
    for (k, target) in targets.iter().enumerate() {
        let c = &mut report.per_center[k % m];
        c.total += 1;
        report.pairs += 1;
        let Some((min, ratio)) = best_word(decs, target, factor) else {
            report.decomposition_failures += 1;
            continue;
        };
        c.min_nonzero = c.min_nonzero.min(min);
        c.max_bound_ratio = c.max_bound_ratio.max(ratio);
        if min > params.xi && ratio <= 1.0 {
            c.passed += 1;
            report.passed += 1;
        }
    }
    for c in &report.per_center {
        report.min_nonzero = report.min_nonzero.min(c.min_nonzero);
        report.max_bound_ratio = report.max_bound_ratio.max(c.max_bound_ratio);
    }
    report.pass_fraction = report.passed as f64 / report.pairs.max(1) as f64;
    report
}

/// `ξ = min{1/10, m/2}` where `m` is the smallest nonzero letter of the best
/// words over a calibration sample (`params.xi` is ignored).
pub fn calibrate_xi(spec: &TileSpec, decs: &[Decomposer], params: &ReachParams) -> f64 {
    let report = reachability_check(spec, decs, &ReachParams { xi: 0.0, ..params.clone() });
    (0.5 * report.min_nonzero).min(0.1)
}
