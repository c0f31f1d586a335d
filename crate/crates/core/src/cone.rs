//! Cones `C(e, σ) = {x : ⟨x, e⟩ ≥ (1 − σ²)|x|}` in the horizontal layer,
//! cone curves and separation of vectors and cones.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fragment::Fragment;
use crate::group::CarnotGroup;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn euclid(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConeError {
    ZeroAxis,
    BadOpening(f64),
}

impl fmt::Display for ConeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeError::ZeroAxis => write!(f, "cone axis must be nonzero"),
            ConeError::BadOpening(s) => write!(f, "cone opening must lie in [0, 1], got {s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cone {
    axis: Vec<f64>,
    opening: f64,
}

impl Cone {
    /// Normalises `axis`. Openings in `[0, 1]`; `0` is the closed ray.
    pub fn new(axis: &[f64], opening: f64) -> Result<Self, ConeError> {
        let n = euclid(axis);
        if !(n > 0.0 && n.is_finite()) {
            return Err(ConeError::ZeroAxis);
        }
        if !(0.0..=1.0).contains(&opening) {
            return Err(ConeError::BadOpening(opening));
        }
        Ok(Cone { axis: axis.iter().map(|x| x / n).collect(), opening })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn opening(&self) -> f64 {
        self.opening
    }

    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    /// Angle between the axis and the boundary rays.
    pub fn half_angle(&self) -> f64 {
        libm::acos(1.0 - self.opening * self.opening)
    }

    /// Membership with `0` included; `strict` excludes `0`.
    pub fn contains(&self, x: &[f64], strict: bool) -> bool {
        let n = euclid(x);
        if n == 0.0 {
            return !strict;
        }
        let s2 = self.opening * self.opening;
        // Relative slack absorbs rounding in |x| and ⟨x,e⟩ for points on the boundary.
        dot(x, &self.axis) >= (1.0 - s2) * n - 8.0 * f64::EPSILON * n
    }

    /// Membership in the interior.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        let n = euclid(x);
        n > 0.0 && dot(x, &self.axis) > (1.0 - self.opening * self.opening) * n
    }
}

pub fn in_cone(x: &[f64], cone: &Cone, strict: bool) -> bool {
    cone.contains(x, strict)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveVerdict {
    pub holds: bool,
    /// First ordered sample pair `(t, s)` (indices, `t < s`) violating the condition.
    pub violation: Option<(usize, usize)>,
}

/// Whether `π₁(γ(s)) − π₁(γ(t)) ∈ C ∖ {0}` for all sample pairs `t < s`
/// (or `∈ C` when `strict` is false). For openings below 1 the cone is
/// pointed and convex, so consecutive increments suffice.
pub fn is_c_curve(
    group: &CarnotGroup,
    fragment: &Fragment<Vec<f64>>,
    cone: &Cone,
    strict: bool,
) -> CurveVerdict {
    let pts = fragment.points();
    let incr = |i: usize, j: usize| -> Vec<f64> {
        group.pi1(&pts[j]).iter().zip(group.pi1(&pts[i])).map(|(a, b)| a - b).collect()
    };
    if cone.opening() < 1.0 {
        for i in 0..pts.len().saturating_sub(1) {
            if !cone.contains(&incr(i, i + 1), strict) {
                return CurveVerdict { holds: false, violation: Some((i, i + 1)) };
            }
        }
    } else {
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if !cone.contains(&incr(i, j), strict) {
                    return CurveVerdict { holds: false, violation: Some((i, j)) };
                }
            }
        }
    }
    CurveVerdict { holds: true, violation: None }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Separation {
    /// `min |Σλ_i v_i| / max_i |λ_i v_i|` over `λ ≠ 0`.
    pub min_ratio: f64,
    pub separated: bool,
}

/// Minimum of `|Σ μ_i u_i|²` over `μ` in the face `μ_k = 1`, `|μ_i| ≤ 1`,
/// by cyclic coordinate descent (the objective is a convex quadratic).
fn face_minimum(units: &[Vec<f64>], k: usize) -> f64 {
    let m = units.len();
    let d = units[0].len();
    let mut mu = vec![0.0; m];
    mu[k] = 1.0;
    let mut sum = units[k].clone();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..m {
            if i == k {
                continue;
            }
            // Remove μ_i u_i, then pick the best μ_i ∈ [-1, 1] for the rest.
            for c in 0..d {
                sum[c] -= mu[i] * units[i][c];
            }
            let best = (-dot(&sum, &units[i])).clamp(-1.0, 1.0);
            moved = moved.max((best - mu[i]).abs());
            mu[i] = best;
            for c in 0..d {
                sum[c] += mu[i] * units[i][c];
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    euclid(&sum)
}

/// Decides `|Σλ_i v_i| > ξ max_i |λ_i v_i|` for all `λ ≠ 0`. With `u_i = v_i/|v_i|`
/// and `μ_i = λ_i|v_i|`, the ratio is minimised on a face of the sup-sphere,
/// where it is a convex quadratic problem solved per face.
pub fn xi_separated(vectors: &[Vec<f64>], xi: f64) -> Separation {
    if vectors.is_empty() {
        return Separation { min_ratio: f64::INFINITY, separated: true };
    }
    let mut units = Vec::with_capacity(vectors.len());
    for v in vectors {
        let n = euclid(v);
        if n == 0.0 {
            return Separation { min_ratio: 0.0, separated: false };
        }
        units.push(v.iter().map(|x| x / n).collect::<Vec<f64>>());
    }
    let min_ratio = match units.len() {
        1 => 1.0,
        2 => {
            // min over |μ| ≤ 1 of |u_1 + μ u_2| is sqrt(1 − c²) with c = ⟨u_1,u_2⟩.
            let c = dot(&units[0], &units[1]).clamp(-1.0, 1.0);
            libm::sqrt(1.0 - c * c)
        }
        _ => (0..units.len()).map(|k| face_minimum(&units, k)).fold(f64::INFINITY, f64::min),
    };
    Separation { min_ratio, separated: min_ratio > xi }
}

/// Sampled separation of cones: the vector test applied to every
/// selection of one vector per cone from axis, boundary and random interior
/// samples. Selections beyond `max_selections` are drawn at random.
pub fn cones_xi_separated(
    cones: &[Cone],
    xi: f64,
    samples_per_cone: usize,
    max_selections: usize,
    seed: u64,
) -> Separation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<Vec<Vec<f64>>> = cones
        .iter()
        .map(|c| cone_samples(c, samples_per_cone, &mut rng))
        .collect();
    let total: f64 = pools.iter().map(|p| p.len() as f64).product();
    let mut min_ratio = f64::INFINITY;
    let mut consider = |sel: &[usize]| {
        let vs: Vec<Vec<f64>> = sel.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect();
        min_ratio = min_ratio.min(xi_separated(&vs, xi).min_ratio);
    };
    if total <= max_selections as f64 {
        let mut sel = vec![0usize; pools.len()];
        'outer: loop {
            consider(&sel);
            for k in 0..sel.len() {
                sel[k] += 1;
                if sel[k] < pools[k].len() {
                    continue 'outer;
                }
                sel[k] = 0;
            }
            break;
        }
    } else {
        for _ in 0..max_selections {
            let sel: Vec<usize> = pools.iter().map(|p| rng.gen_range(0..p.len())).collect();
            consider(&sel);
        }
    }
    Separation { min_ratio, separated: min_ratio > xi }
}

/// Axis, boundary rays in each coordinate plane through the axis, and
/// random members of the cone.
pub fn cone_samples<R: Rng>(cone: &Cone, random: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = cone.dim();
    let e = cone.axis();
    let mut out = vec![e.to_vec()];
    let angle = cone.half_angle();
    for w in orthonormal_complement(e) {
        for sign in [1.0, -1.0] {
            out.push(rotate(e, &w, sign * angle));
        }
    }
    let mut tries = 0;
    while out.len() < 1 + 2 * (d - 1) + random && tries < 100 * (random + 1) {
        tries += 1;
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let candidate: Vec<f64> = e.iter().zip(&x).map(|(a, b)| a + cone.opening() * b).collect();
        if euclid(&candidate) > 0.0 && cone.contains(&candidate, true) {
            out.push(candidate);
        }
    }
    out
}

/// `cos θ e + sin θ w` for unit `e ⟂ w`.
pub(crate) fn rotate(e: &[f64], w: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    e.iter().zip(w).map(|(a, b)| c * a + s * b).collect()
}

/// Orthonormal basis of `e^⊥` by Gram–Schmidt on the coordinate vectors.
pub(crate) fn orthonormal_complement(e: &[f64]) -> Vec<Vec<f64>> {
    let d = e.len();
    let mut basis: Vec<Vec<f64>> = vec![e.to_vec()];
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            for k in 0..d {
                v[k] -= c * b[k];
            }
        }
        let n = euclid(&v);
        if n > 1e-8 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}
