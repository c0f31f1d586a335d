//! Grid index for homogeneous-ball queries on point clouds.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::norm::BoxNorm;

/// Points bucketed into grid cells of side `a^j` on stratum `j`. Ball
/// queries visit the cells meeting a coordinate box that contains
/// `x·B(0, r)`.
#[derive(Clone, Debug)]
pub struct BallIndex {
    norm: BoxNorm,
    dim: usize,
    points: Vec<f64>,
    original: Vec<u32>,
    sizes: Vec<f64>,
    cells: HashMap<Box<[i64]>, (u32, u32)>,
}

impl BallIndex {
    /// `points` is a flat array of `dim 𝔾`-tuples.
    pub fn new(norm: &BoxNorm, points: &[f64], scale: f64) -> Self {
        let group = norm.group();
        let dim = group.dim();
        let mut sizes = vec![0.0; dim];
        for j in 1..=group.step() {
            let side = libm::pow(scale, j as f64);
            for s in &mut sizes[group.stratum_range(j)] {
                *s = side;
            }
        }
        let n = points.len() / dim;
        let key_of = |p: &[f64]| -> Box<[i64]> {
            p.iter().zip(&sizes).map(|(x, s)| libm::floor(x / s) as i64).collect()
        };
        let mut keyed: Vec<(Box<[i64]>, u32)> =
            (0..n).map(|i| (key_of(&points[i * dim..(i + 1) * dim]), i as u32)).collect();
        keyed.sort_unstable();
        let mut sorted = Vec::with_capacity(points.len());
        let mut original = Vec::with_capacity(n);
        let mut cells = HashMap::new();
        let mut start = 0usize;
        for i in 0..keyed.len() {
            let idx = keyed[i].1 as usize;
            sorted.extend_from_slice(&points[idx * dim..(idx + 1) * dim]);
            original.push(keyed[i].1);
            if i + 1 == keyed.len() || keyed[i + 1].0 != keyed[i].0 {
                cells.insert(keyed[i].0.clone(), (start as u32, (i + 1) as u32));
                start = i + 1;
            }
        }
        BallIndex { norm: norm.clone(), dim, points: sorted, original, sizes, cells }
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn norm(&self) -> &BoxNorm {
        &self.norm
    }

    /// Point in storage order.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Index in the input array of the point stored at `i`.
    pub fn original_index(&self, i: usize) -> usize {
        self.original[i] as usize
    }

    /// Calls `f(storage index, distance)` for every point within `r` of `x`.
    pub fn for_each_within(&self, x: &[f64], r: f64, mut f: impl FnMut(usize, f64)) {
        let group = self.norm.group();
        let xa: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let reach = self.norm.ball_box(r);
        let bound = group.product_bound(&xa, &reach);
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        let mut total = 1.0f64;
        for c in 0..self.dim {
            let d = (bound[c] - xa[c]) * (1.0 + 1e-12) + 1e-300;
            let a = libm::floor((x[c] - d) / self.sizes[c]) as i64;
            let b = libm::floor((x[c] + d) / self.sizes[c]) as i64;
            total *= (b - a + 1) as f64;
            lo.push(a);
            hi.push(b);
        }
        let mut visit = |range: (u32, u32)| {
            for i in range.0 as usize..range.1 as usize {
                let d = self.norm.distance(x, self.point(i));
                if d <= r {
                    f(i, d);
                }
            }
        };
        if total > self.cells.len() as f64 {
            for (key, &range) in &self.cells {
                if key.iter().zip(lo.iter().zip(&hi)).all(|(k, (a, b))| a <= k && k <= b) {
                    visit(range);
                }
            }
            return;
        }
        let mut key = lo.clone();
        loop {
            if let Some(&range) = self.cells.get(key.as_slice()) {
                visit(range);
            }
            let mut c = 0;
            loop {
                if c == self.dim {
                    return;
                }
                key[c] += 1;
                if key[c] <= hi[c] {
                    break;
                }
                key[c] = lo[c];
                c += 1;
            }
        }
    }

    pub fn count_within(&self, x: &[f64], r: f64) -> usize {
        let mut n = 0;
        self.for_each_within(x, r, |_, _| n += 1);
        n
    }

    pub fn any_within(&self, x: &[f64], r: f64) -> bool {
        self.count_within(x, r) > 0
    }

    /// Nearest stored point other than storage index `skip`, searched with
    /// radii `start, 2·start, …` up to `limit`.
    pub fn nearest(&self, x: &[f64], skip: Option<usize>, start: f64, limit: f64) -> Option<(usize, f64)> {
        let mut r = start;
        while r <= limit {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_within(x, r, |i, d| {
                if Some(i) != skip && best.map_or(true, |b| d < b.1) {
                    best = Some((i, d));
                }
            });
            if best.is_some() {
                return best;
            }
            r *= 2.0;
        }
        None
    }
}
