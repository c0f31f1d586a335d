//! Density, Ahlfors regularity and David-condition diagnostics on weighted
//! point clouds in a Carnot group.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::drift::geometric_radii;
use crate::index::BallIndex;
use crate::norm::BoxNorm;
use crate::pansu::GroupMap;

/// Cells are keyed by fixed-size arrays; images live in at most this many coordinates.
pub const MAX_CELL_DIM: usize = 8;

/// Resolution floor in units of the median nearest-neighbour distance.
pub const FLOOR_FACTOR: f64 = 5.0;

/// Points used to estimate the median nearest-neighbour distance.
const NN_SAMPLE: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub enum DensityError {
    Empty,
    Shape { points: usize, weights: usize },
    BadWeight { index: usize },
    /// Radii must be geometric and span at least three decades.
    BadRadii,
    AllBelowFloor { floor: f64 },
    GridTooCoarse { cells: usize, needed: usize },
    TooManyCoordinates(usize),
    BadParameter(&'static str),
}

impl fmt::Display for DensityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityError::Empty => write!(f, "empty cloud"),
            DensityError::Shape { points, weights } => write!(f, "{points} points but {weights} weights"),
            DensityError::BadWeight { index } => write!(f, "weight {index} is not positive and finite"),
            DensityError::BadRadii => write!(f, "radii must be geometric and span at least three decades"),
            DensityError::AllBelowFloor { floor } => write!(f, "every radius is below the resolution floor {floor}"),
            DensityError::GridTooCoarse { cells, needed } => {
                write!(f, "smallest ball holds {cells} grid cells, {needed} needed")
            }
            DensityError::TooManyCoordinates(n) => write!(f, "cell counting supports {MAX_CELL_DIM} coordinates, got {n}"),
            DensityError::BadParameter(name) => write!(f, "parameter {name} out of range"),
        }
    }
}

/// Atoms `w_i δ_{x_i}` with a ball index over the points.
#[derive(Clone, Debug)]
pub struct WeightedCloud {
    index: BallIndex,
    /// Weights in storage order.
    weights: Vec<f64>,
    total: f64,
    nn_median: f64,
}

impl WeightedCloud {
    pub fn new(norm: &BoxNorm, points: &[f64], weights: &[f64]) -> Result<Self, DensityError> {
        let g = norm.group();
        let dim = g.dim();
        if points.len() % dim != 0 || points.len() / dim != weights.len() {
            return Err(DensityError::Shape { points: points.len() / dim, weights: weights.len() });
        }
        if weights.is_empty() {
            return Err(DensityError::Empty);
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(DensityError::BadWeight { index: i });
        }
        let n = weights.len();
        let extent = points.chunks_exact(dim).map(|p| norm.norm(p)).fold(0.0, f64::max).max(1e-12);
        let q = g.homogeneous_dimension() as f64;
        let scale = 2.0 * extent * libm::pow(n as f64, -1.0 / q);
        let index = BallIndex::new(norm, points, scale);
        let weights: Vec<f64> = (0..n).map(|i| weights[index.original_index(i)]).collect();
        let total = weights.iter().sum();
        let mut cloud = WeightedCloud { index, weights, total, nn_median: 0.0 };
        cloud.nn_median = cloud.estimate_nn_median(scale);
        Ok(cloud)
    }

    /// Equal weights `1/N`.
    pub fn uniform(norm: &BoxNorm, points: &[f64]) -> Result<Self, DensityError> {
        let n = points.len() / norm.group().dim();
        Self::new(norm, points, &vec![1.0 / n as f64; n])
    }

    fn estimate_nn_median(&self, scale: f64) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let step = (n / NN_SAMPLE).max(1);
        let mut d: Vec<f64> = (0..n)
            .step_by(step)
            .filter_map(|i| self.index.nearest(self.index.point(i), Some(i), scale / 4.0, f64::INFINITY))
            .map(|(_, d)| d)
            .collect();
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> &BoxNorm {
        self.index.norm()
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// Point `i` in storage order.
    pub fn point(&self, i: usize) -> &[f64] {
        self.index.point(i)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Input position of the point stored at `i`.
    pub fn original_index(&self, i: usize) -> usize {
        self.index.original_index(i)
    }

    pub fn nn_median(&self) -> f64 {
        self.nn_median
    }

    /// Radii below this are refused by the estimators.
    pub fn resolution_floor(&self) -> f64 {
        FLOOR_FACTOR * self.nn_median
    }

    pub fn mass_within(&self, x: &[f64], r: f64) -> f64 {
        let mut m = 0.0;
        self.index.for_each_within(x, r, |i, _| m += self.weights[i]);
        m
    }

    /// `μ(B(x, r))` for increasing `radii`, from a single ball query.
    pub fn masses(&self, x: &[f64], radii: &[f64]) -> Vec<f64> {
        let Some(&top) = radii.last() else { return Vec::new() };
        let mut hits: Vec<(f64, f64)> = Vec::new();
        self.index.for_each_within(x, top, |i, d| hits.push((d, self.weights[i])));
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Vec::with_capacity(radii.len());
        let mut k = 0;
        let mut acc = 0.0;
        for &r in radii {
            while k < hits.len() && hits[k].0 <= r {
                acc += hits[k].1;
                k += 1;
            }
            out.push(acc);
        }
        out
    }

    /// The cloud `δ_λ(x_i)` with weights multiplied by `weight_factor`.
    pub fn dilated(&self, lambda: f64, weight_factor: f64) -> Result<Self, DensityError> {
        let g = self.norm().group();
        let dim = g.dim();
        let mut pts = Vec::with_capacity(self.len() * dim);
        for i in 0..self.len() {
            let mut p = self.point(i).to_vec();
            g.dilate_in_place(lambda, &mut p);
            pts.extend_from_slice(&p);
        }
        let w: Vec<f64> = self.weights.iter().map(|w| w * weight_factor).collect();
        Self::new(&self.norm().clone(), &pts, &w)
    }
}


#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DensityEstimate {
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub floor: f64,
    /// Radii the extremes were taken over.
    pub radii: Vec<f64>,
}

fn check_radii(radii: &[f64]) -> Result<(), DensityError> {
    if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(DensityError::BadRadii);
    }
    let ratio = radii[1] / radii[0];
    let geometric = ratio > 1.0 && radii.windows(2).all(|w| (w[1] / w[0] / ratio - 1.0).abs() < 1e-6);
    if !geometric || radii[radii.len() - 1] / radii[0] < 1000.0 * (1.0 - 1e-9) {
        return Err(DensityError::BadRadii);
    }
    Ok(())
}

/// `μ(B(x, r))/r^Q` at every radius at or above the resolution floor.
pub fn density_profile(cloud: &WeightedCloud, x: &[f64], radii: &[f64], q: f64) -> Vec<(f64, f64)> {
    let kept: Vec<f64> = radii.iter().copied().filter(|&r| r >= cloud.resolution_floor()).collect();
    let masses = cloud.masses(x, &kept);
    kept.iter().zip(masses).map(|(&r, m)| (r, m / libm::pow(r, q))).collect()
}

/// Extremes of `μ(B(x, r))/r^Q` over each decade of radii above the
/// resolution floor, finest decade first.
pub fn decade_estimates(cloud: &WeightedCloud, x: &[f64], radii: &[f64], q: f64) -> Result<Vec<DensityEstimate>, DensityError> {
    check_radii(radii)?;
    let floor = cloud.resolution_floor();
    let profile = density_profile(cloud, x, radii, q);
    let Some(&(start, _)) = profile.first() else {
        return Err(DensityError::AllBelowFloor { floor });
    };
    let mut out: Vec<DensityEstimate> = Vec::new();
    for (r, theta) in profile {
        let decade = libm::floor(libm::log10(r / start) + 1e-9) as usize;
        if out.len() <= decade {
            out.resize(decade + 1, DensityEstimate { theta_lower: f64::INFINITY, theta_upper: 0.0, floor, radii: Vec::new() });
        }
        let e = &mut out[decade];
        e.theta_lower = e.theta_lower.min(theta);
        e.theta_upper = e.theta_upper.max(theta);
        e.radii.push(r);
    }
    Ok(out)
}

/// Lower and upper `Q`-densities at `x`, estimated over the finest decade of
/// radii above the resolution floor.
pub fn density_estimates(cloud: &WeightedCloud, x: &[f64], radii: &[f64], q: f64) -> Result<DensityEstimate, DensityError> {
    Ok(decade_estimates(cloud, x, radii, q)?.swap_remove(0))
}

/// Radii sampled between the resolution floor and `big_r` (exclusive).
pub const AHLFORS_RADII_PER_DECADE: usize = 8;

/// Mask (input order) of points with `l⁻¹r^Q ≤ μ(B(x, r)) ≤ l r^Q` at every
/// sampled radius in `[floor, R)`.
pub fn ahlfors_set(cloud: &WeightedCloud, l: f64, big_r: f64, q: f64) -> Vec<bool> {
    let radii = geometric_radii(cloud.resolution_floor(), big_r, AHLFORS_RADII_PER_DECADE);
    let mut mask = vec![false; cloud.len()];
    for i in 0..cloud.len() {
        let masses = cloud.masses(cloud.point(i), &radii);
        mask[cloud.original_index(i)] = radii.iter().zip(&masses).all(|(&r, &m)| {
            let v = libm::pow(r, q);
            m >= v / l && m <= l * v
        });
    }
    mask
}

/// Homogeneous grid: side `h^j` on stratum `j`, aligned at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DcGrid {
    pub cell: f64,
}

type CellKey = [i64; MAX_CELL_DIM];

impl DcGrid {
    fn sides(&self, norm: &BoxNorm) -> Vec<f64> {
        let w = norm.group().weights();
        w.iter().map(|&j| libm::pow(self.cell, j as f64)).collect()
    }

    fn key(sides: &[f64], p: &[f64]) -> CellKey {
        let mut k = [0i64; MAX_CELL_DIM];
        for (c, (x, s)) in p.iter().zip(sides).enumerate() {
            k[c] = libm::floor(x / s) as i64;
        }
        k
    }

    /// Cells whose centre lies in `B(c, ρ)`.
    fn ball_cells(&self, norm: &BoxNorm, sides: &[f64], c: &[f64], rho: f64, mut f: impl FnMut(&CellKey)) {
        let g = norm.group();
        let dim = g.dim();
        let abs: Vec<f64> = c.iter().map(|x| x.abs()).collect();
        let reach: Vec<f64> = g.product_bound(&abs, &norm.ball_box(rho)).iter().zip(&abs).map(|(b, a)| b - a).collect();
        let lo: Vec<i64> = (0..dim).map(|k| libm::floor((c[k] - reach[k]) / sides[k]) as i64).collect();
        let hi: Vec<i64> = (0..dim).map(|k| libm::floor((c[k] + reach[k]) / sides[k]) as i64).collect();
        let mut key = [0i64; MAX_CELL_DIM];
        key[..dim].copy_from_slice(&lo);
        let mut centre = vec![0.0; dim];
        loop {
            for k in 0..dim {
                centre[k] = (key[k] as f64 + 0.5) * sides[k];
            }
            if norm.distance(c, &centre) <= rho {
                f(&key);
            }
            let mut k = 0;
            loop {
                if k == dim {
                    return;
                }
                key[k] += 1;
                if key[k] <= hi[k] {
                    break;
                }
                key[k] = lo[k];
                k += 1;
            }
        }
    }
}

/// A cloud together with the images of its points under a chart `φ`,
/// bucketed by the cells of a homogeneous grid.
pub struct ChartedCloud<'a> {
    cloud: &'a WeightedCloud,
    target: BoxNorm,
    grid: DcGrid,
    sides: Vec<f64>,
    /// Images in storage order.
    images: Vec<f64>,
    cells: HashMap<CellKey, Vec<u32>>,
}

impl<'a> ChartedCloud<'a> {
    pub fn new(cloud: &'a WeightedCloud, phi: &dyn GroupMap, target: &BoxNorm, grid: DcGrid) -> Result<Self, DensityError> {
        let dim = target.group().dim();
        if dim > MAX_CELL_DIM {
            return Err(DensityError::TooManyCoordinates(dim));
        }
        if !(grid.cell > 0.0 && grid.cell.is_finite()) {
            return Err(DensityError::BadParameter("grid"));
        }
        let sides = grid.sides(target);
        let mut images = Vec::with_capacity(cloud.len() * dim);
        let mut cells: HashMap<CellKey, Vec<u32>> = HashMap::new();
        for i in 0..cloud.len() {
            let y = phi.eval(cloud.point(i));
            cells.entry(DcGrid::key(&sides, &y)).or_default().push(i as u32);
            images.extend_from_slice(&y);
        }
        Ok(ChartedCloud { cloud, target: target.clone(), grid, sides, images, cells })
    }

    pub fn cloud(&self) -> &WeightedCloud {
        self.cloud
    }

    pub fn grid(&self) -> DcGrid {
        self.grid
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let d = self.target.group().dim();
        &self.images[i * d..(i + 1) * d]
    }

    /// Occupied grid cells.
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DcParams {
    pub beta: f64,
    pub eps: f64,
    pub big_r: f64,
    /// Smallest sampled radius.
    pub r_min: f64,
    /// Radii sampled geometrically in `[r_min, R)`.
    pub radii: usize,
    /// Cells `B(φ(x), β r_min)` must contain.
    pub min_cells: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DcReport {
    pub member: bool,
    /// Smallest covered fraction over the sampled radii.
    pub worst_fraction: f64,
    pub radii_tested: usize,
    /// Box-norm size of a grid cell relative to `β r_min`.
    pub slack: f64,
}

/// Whether the point stored at `i` is in `DC(β, ε, R)`: at every sampled
/// `r < R`, grid cells of `B(φ(x), βr)` hit by images of cloud points in
/// `B(x, r)` make up at least a `1 − ε` share of the cells of that ball.
pub fn dc_membership(charted: &ChartedCloud<'_>, i: usize, params: &DcParams) -> Result<DcReport, DensityError> {
    let DcParams { beta, eps, big_r, r_min, radii, min_cells } = *params;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(DensityError::BadParameter("beta"));
    }
    if !(eps > 0.0) || !(r_min > 0.0 && r_min < big_r) || radii == 0 {
        return Err(DensityError::BadParameter("eps or radii"));
    }
    let norm = &charted.target;
    let sides = &charted.sides;
    let slack = norm.norm(sides) / (beta * r_min);
    if eps >= 1.0 {
        return Ok(DcReport { member: true, worst_fraction: 1.0, radii_tested: 0, slack });
    }
    let centre = charted.image(i);
    let x = charted.cloud.point(i);
    let source = charted.cloud.norm();
    let mut worst = 1.0f64;
    for k in 0..radii {
        let r = r_min * libm::pow(big_r / r_min, k as f64 / radii as f64);
        let (mut total, mut covered) = (0usize, 0usize);
        charted.grid.ball_cells(norm, sides, centre, beta * r, |key| {
            total += 1;
            let hit = charted
                .cells
                .get(key)
                .is_some_and(|pts| pts.iter().any(|&j| source.distance(x, charted.cloud.point(j as usize)) <= r));
            if hit {
                covered += 1;
            }
        });
        if k == 0 && total < min_cells {
            return Err(DensityError::GridTooCoarse { cells: total, needed: min_cells });
        }
        worst = worst.min(covered as f64 / total.max(1) as f64);
        if worst < 1.0 - eps {
            return Ok(DcReport { member: false, worst_fraction: worst, radii_tested: k + 1, slack });
        }
    }
    Ok(DcReport { member: true, worst_fraction: worst, radii_tested: radii, slack })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DavidOptions {
    /// Points evaluated; the whole cloud when `None`.
    pub max_points: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DavidReport {
    /// Weight share of evaluated points in `DC(β, ε, R)` for some grid entry.
    pub fraction: f64,
    pub evaluated: usize,
    /// Members per `(β, R)` entry.
    pub per_parameter: Vec<usize>,
    /// Evaluated points as (input index, member of some entry).
    pub verdicts: Vec<(usize, bool)>,
}

/// Mass fraction of `⋃ DC(β, ε, R)` over the `(β, R)` grid, on the whole
/// cloud or a uniform sample of its points.
pub fn david_fraction(
    charted: &ChartedCloud<'_>,
    eps: f64,
    parameters: &[(f64, f64)],
    template: &DcParams,
    options: &DavidOptions,
) -> Result<DavidReport, DensityError> {
    let n = charted.cloud.len();
    let picked: Vec<usize> = match options.max_points {
        Some(m) if m < n => {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let mut v = sample_indices(&mut rng, n, m).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..n).collect(),
    };
    let mut per_parameter = vec![0usize; parameters.len()];
    let (mut mass, mut inside) = (0.0, 0.0);
    let mut verdicts = Vec::with_capacity(picked.len());
    for &i in &picked {
        let w = charted.cloud.weight(i);
        mass += w;
        let mut member = false;
        for (k, &(beta, big_r)) in parameters.iter().enumerate() {
            let params = DcParams { beta, big_r, eps, ..template.clone() };
            if dc_membership(charted, i, &params)?.member {
                per_parameter[k] += 1;
                member = true;
            }
        }
        if member {
            inside += w;
        }
        verdicts.push((charted.cloud.original_index(i), member));
    }
    verdicts.sort_unstable();
    Ok(DavidReport {
        fraction: if mass > 0.0 { inside / mass } else { 0.0 },
        evaluated: picked.len(),
        per_parameter,
        verdicts,
    })
}
