//! Pansu difference quotients, derivative estimation, derivatives along
//! fragments and assembly of differentials from partial derivatives.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::fragment::Fragment;
use crate::group::CarnotGroup;
use crate::hom::{HomError, HomogeneousHom};
use crate::linalg;
use crate::norm::BoxNorm;

/// A map between groups (or from a sample space into a group), evaluated
/// on coordinate vectors. Evaluation must be deterministic.
pub trait GroupMap {
    fn eval(&self, x: &[f64]) -> Vec<f64>;

    /// Declared Lipschitz bound, if known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> GroupMap for F {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self(x)
    }
}

impl GroupMap for HomogeneousHom {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
    }
}

/// A closure together with an optional declared Lipschitz bound.
pub struct MapSampler<F> {
    f: F,
    lipschitz: Option<f64>,
}

impl<F: Fn(&[f64]) -> Vec<f64>> MapSampler<F> {
    pub fn new(f: F) -> Self {
        MapSampler { f, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz = Some(bound);
        self
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> GroupMap for MapSampler<F> {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PansuError {
    /// Fewer independent directions than the rank of the source.
    InsufficientDirections { rank: usize, needed: usize },
    /// Scales must be positive and span at least three decades.
    ScalesTooNarrow { ratio: f64 },
    Hom(HomError),
    OutsideDomain { t: f64 },
    /// The sample has no neighbour in its domain component.
    IsolatedSample { index: usize },
    IndexOutOfRange { index: usize, rank: usize },
}

impl fmt::Display for PansuError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PansuError::InsufficientDirections { rank, needed } => {
                write!(f, "directions span rank {rank}, need {needed}")
            }
            PansuError::ScalesTooNarrow { ratio } => {
                write!(f, "scales span a factor {ratio}, need at least 1e3")
            }
            PansuError::Hom(e) => write!(f, "{e}"),
            PansuError::OutsideDomain { t } => write!(f, "t = {t} is not a sample time"),
            PansuError::IsolatedSample { index } => {
                write!(f, "sample {index} has no neighbour in the domain")
            }
            PansuError::IndexOutOfRange { index, rank } => {
                write!(f, "word index {index} outside the {rank} horizontal directions")
            }
        }
    }
}

impl From<HomError> for PansuError {
    fn from(e: HomError) -> Self {
        PansuError::Hom(e)
    }
}

/// `∥(L(x₀⁻¹x))⁻¹·f(x₀)⁻¹·f(x)∥_H / d(x₀, x)`.
pub fn pansu_residual(
    f: &dyn GroupMap,
    l: &HomogeneousHom,
    x0: &[f64],
    x: &[f64],
    norm_source: &BoxNorm,
    norm_target: &BoxNorm,
) -> f64 {
    let g = norm_source.group();
    let h = norm_target.group();
    let step = g.left_quotient(x0, x);
    let approx = l.apply(&step);
    let actual = h.left_quotient(&f.eval(x0), &f.eval(x));
    norm_target.norm(&h.left_quotient(&approx, &actual)) / norm_source.norm(&step)
}

/// Maximum residual over directions, per scale (scales strictly decreasing).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualCurve {
    pub points: Vec<(f64, f64)>,
}

impl ResidualCurve {
    /// Least-squares slope of `log r` against `log t` over the finest decade.
    /// `None` when fewer than two usable (positive) residuals remain.
    pub fn finest_decade_slope(&self) -> Option<f64> {
        let t_min = self.points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.0 <= 10.0 * t_min * (1.0 + 1e-12) && p.1 > 0.0)
            .map(|p| (libm::log(p.0), libm::log(p.1)))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Default)]
pub struct EstimateOptions {
    /// Fit every graded block from coordinate directions instead of
    /// extending the horizontal block.
    pub full_block: bool,
    /// Largest accepted bracket-compatibility defect when extending
    /// (default `1e-6` when zero).
    pub extension_tol: f64,
}

#[derive(Clone, Debug)]
pub struct PansuEstimate {
    pub hom: HomogeneousHom,
    pub curve: ResidualCurve,
    /// Scale the blocks were fitted at.
    pub fit_scale: f64,
}

/// `δ_{1/t}(f(x₀)⁻¹·f(x₀·δ_t v))`.
fn quotient(f: &dyn GroupMap, g: &CarnotGroup, h: &CarnotGroup, x0: &[f64], fx0: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    let mut dv = v.to_vec();
    g.dilate_in_place(t, &mut dv);
    let x = g.mul(x0, &dv);
    let mut q = h.left_quotient(fx0, &f.eval(&x));
    h.dilate_in_place(1.0 / t, &mut q);
    q
}

/// Fits the Pansu differential of `f` at `x0` from difference quotients at
/// the smallest scale and tabulates the residual along `directions`
/// (horizontal vectors of the source) at every scale.
pub fn estimate_pansu_derivative(
    f: &dyn GroupMap,
    x0: &[f64],
    scales: &[f64],
    directions: &[Vec<f64>],
    norm_source: &BoxNorm,
    norm_target: &BoxNorm,
    options: &EstimateOptions,
) -> Result<PansuEstimate, PansuError> {
    let g = norm_source.group();
    let h = norm_target.group();
    let n1 = g.rank();
    let rank = linalg::rank(directions, n1, 1e-9);
    if rank < n1 {
        return Err(PansuError::InsufficientDirections { rank, needed: n1 });
    }
    let mut scales = scales.to_vec();
    scales.retain(|t| *t > 0.0 && t.is_finite());
    scales.sort_by(|a, b| b.total_cmp(a));
    scales.dedup();
    let ratio = match (scales.first(), scales.last()) {
        (Some(a), Some(b)) => a / b,
        _ => 0.0,
    };
    if ratio < 1e3 * (1.0 - 1e-12) {
        return Err(PansuError::ScalesTooNarrow { ratio });
    }
    let t = *scales.last().unwrap();
    let fx0 = f.eval(x0);
    let tol = if options.extension_tol > 0.0 { options.extension_tol } else { 1e-6 };

    let hom = if options.full_block {
        let common = g.step().min(h.step());
        let mut blocks = Vec::with_capacity(common);
        for j in 1..=common {
            let cols = g.stratum_range(j);
            let rows = h.stratum_range(j);
            let mut block = DMatrix::zeros(rows.len(), cols.len());
            for (c, idx) in cols.clone().enumerate() {
                let mut e = g.identity();
                e[idx] = 1.0;
                let q = quotient(f, g, h, x0, &fx0, &e, t);
                for (r, k) in rows.clone().enumerate() {
                    block[(r, c)] = q[k];
                }
            }
            blocks.push(block);
        }
        HomogeneousHom::from_blocks(g, h, &blocks)?
    } else {
        let m = directions.len();
        let v = DMatrix::from_fn(m, n1, |r, c| directions[r][c]);
        let n1h = h.rank();
        let mut y = DMatrix::zeros(m, n1h);
        for (r, d) in directions.iter().enumerate() {
            let q = quotient(f, g, h, x0, &fx0, &g.horizontal(d), t);
            for c in 0..n1h {
                y[(r, c)] = q[c];
            }
        }
        // Rows of V·A₁ᵀ ≈ Y.
        let a1 = linalg::least_squares(&v, &y).transpose();
        HomogeneousHom::from_horizontal(g, h, &a1, tol)?
    };

    let mut points = Vec::with_capacity(scales.len());
    for &s in &scales {
        let mut worst = 0.0f64;
        for d in directions {
            let mut step = g.horizontal(d);
            g.dilate_in_place(s, &mut step);
            let x = g.mul(x0, &step);
            worst = worst.max(pansu_residual(f, &hom, x0, &x, norm_source, norm_target));
        }
        points.push((s, worst));
    }
    Ok(PansuEstimate { hom, curve: ResidualCurve { points }, fit_scale: t })
}

/// `δ_{λ₁}(∂_{i₁}f)·…·δ_{λ_M}(∂_{i_M}f)` in the target group, with the
/// partial derivatives given as horizontal vectors (0-based word indices).
pub fn assemble_differential(
    target: &CarnotGroup,
    partials: &[Vec<f64>],
    word: &[(usize, f64)],
) -> Result<Vec<f64>, PansuError> {
    let mut acc = target.identity();
    let mut tmp = target.identity();
    for &(i, lambda) in word {
        let p = partials
            .get(i)
            .ok_or(PansuError::IndexOutOfRange { index: i, rank: partials.len() })?;
        let mut letter = target.horizontal(p);
        target.dilate_in_place(lambda, &mut letter);
        target.mul_into(&acc, &letter, &mut tmp);
        core::mem::swap(&mut acc, &mut tmp);
    }
    Ok(acc)
}

/// Derivative of a fragment in a group at a sample.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveDerivative {
    Horizontal(Vec<f64>),
    /// The rescaled increment has a vertical part `vertical ≥ threshold = |h|^{1/2}`.
    Undefined { vertical: f64, threshold: f64 },
}

impl CurveDerivative {
    pub fn horizontal(&self) -> Option<&[f64]> {
        match self {
            CurveDerivative::Horizontal(v) => Some(v),
            CurveDerivative::Undefined { .. } => None,
        }
    }
}

/// Difference quotient of `π₁∘γ` at sample `index`, symmetric when both
/// neighbours lie in the same domain component and one-sided otherwise.
pub fn fragment_derivative(
    group: &CarnotGroup,
    curve: &Fragment<Vec<f64>>,
    index: usize,
) -> Result<CurveDerivative, PansuError> {
    let times = curve.times();
    if index >= times.len() {
        return Err(PansuError::OutsideDomain { t: f64::NAN });
    }
    let prev = (index > 0 && curve.joined(index - 1)).then(|| index - 1);
    let next = curve.joined(index).then(|| index + 1);
    if prev.is_none() && next.is_none() {
        return Err(PansuError::IsolatedSample { index });
    }
    let pts = curve.points();
    let base = &pts[index];
    for other in [prev, next].into_iter().flatten() {
        let hstep = times[other] - times[index];
        let mut q = group.left_quotient(base, &pts[other]);
        group.dilate_in_place(1.0 / hstep, &mut q);
        let vertical = libm::sqrt(q[group.rank()..].iter().map(|x| x * x).sum::<f64>());
        let threshold = libm::sqrt(hstep.abs());
        if vertical >= threshold {
            return Ok(CurveDerivative::Undefined { vertical, threshold });
        }
    }
    let lo = prev.unwrap_or(index);
    let hi = next.unwrap_or(index);
    let dt = times[hi] - times[lo];
    let v = group
        .pi1(&pts[hi])
        .iter()
        .zip(group.pi1(&pts[lo]))
        .map(|(a, b)| (a - b) / dt)
        .collect();
    Ok(CurveDerivative::Horizontal(v))
}

/// [`fragment_derivative`] at sample time `t0`.
pub fn fragment_derivative_at(
    group: &CarnotGroup,
    curve: &Fragment<Vec<f64>>,
    t0: f64,
) -> Result<CurveDerivative, PansuError> {
    let index = curve.index_of(t0).ok_or(PansuError::OutsideDomain { t: t0 })?;
    fragment_derivative(group, curve, index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalDifferentialReport {
    /// Per fragment: `|D(f∘γ)(t₀) − D_H(D(φ∘γ)(t₀))|`, or `None` when a
    /// derivative is undefined there.
    pub defects: Vec<Option<f64>>,
    pub verdict: Verdict,
}

/// Tests the chain rule `D(f∘γ)(t₀) = D_H(D(φ∘γ)(t₀))` along fragments in a
/// sample space `X`, each given with the index of the test sample.
pub fn check_horizontal_differential(
    d_h: &DMatrix<f64>,
    f: &dyn GroupMap,
    f_target: &CarnotGroup,
    phi: &dyn GroupMap,
    phi_target: &CarnotGroup,
    fragments: &[(Fragment<Vec<f64>>, usize)],
    tolerance: f64,
) -> HorizontalDifferentialReport {
    let mut defects = Vec::with_capacity(fragments.len());
    for (frag, idx) in fragments {
        let fg = frag.map(|p| f.eval(p));
        let pg = frag.map(|p| phi.eval(p));
        let a = fragment_derivative(f_target, &fg, *idx).ok();
        let b = fragment_derivative(phi_target, &pg, *idx).ok();
        let defect = match (a.as_ref().and_then(|d| d.horizontal()), b.as_ref().and_then(|d| d.horizontal())) {
            (Some(a), Some(b)) => {
                let db = d_h * nalgebra::DVector::from_column_slice(b);
                Some(libm::sqrt(a.iter().zip(db.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()))
            }
            _ => None,
        };
        defects.push(defect);
    }
    let decided: Vec<f64> = defects.iter().flatten().copied().collect();
    let verdict = if decided.is_empty() {
        Verdict::Inconclusive
    } else if decided.iter().all(|&d| d < tolerance) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    HorizontalDifferentialReport { defects, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use alloc::vec;

    fn h1() -> (CarnotGroup, BoxNorm) {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        let n = BoxNorm::new(&g, &[1.0]).unwrap();
        (g, n)
    }

    #[test]
    fn residual_examples() {
        let (g, n) = h1();
        let id = HomogeneousHom::identity(&g);
        let d2 = HomogeneousHom::dilation(&g, 2.0);
        let tau = [0.25, -0.5, 0.125];
        let translate = |x: &[f64]| g.mul(&tau, x);
        let x0 = [0.5, 0.25, -0.75];
        let x = [0.625, 0.125, -0.5];
        assert_eq!(pansu_residual(&translate, &id, &x0, &x, &n, &n), 0.0);
        assert_eq!(pansu_residual(&d2, &d2, &x0, &x, &n, &n), 0.0);
        let mut step = g.horizontal(&[0.6, 0.8]);
        g.dilate_in_place(0.1, &mut step);
        let r = pansu_residual(&d2, &id, &x0, &g.mul(&x0, &step), &n, &n);
        assert!(r > 0.9, "{r}");
    }

    #[test]
    fn commutator_word_assembles_the_vertical_direction() {
        let (g, _) = h1();
        let partials = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let word = [(0, 1.0), (1, 1.0), (0, -1.0), (1, -1.0)];
        assert_eq!(assemble_differential(&g, &partials, &word).unwrap(), vec![0.0, 0.0, 1.0]);
        let r2 = CarnotGroup::new(catalog::euclidean(2)).unwrap();
        assert_eq!(assemble_differential(&r2, &partials, &word).unwrap(), vec![0.0, 0.0]);
        let zero = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert_eq!(assemble_differential(&g, &zero, &word).unwrap(), vec![0.0; 3]);
        assert!(assemble_differential(&g, &partials, &[(2, 1.0)]).is_err());
    }

    #[test]
    fn fragment_derivatives() {
        let (g, _) = h1();
        let times: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        let line = Fragment::sampled(times.clone(), times.iter().map(|&t| vec![t, 0.0, 0.0]).collect()).unwrap();
        assert_eq!(fragment_derivative_at(&g, &line, 0.5).unwrap(), CurveDerivative::Horizontal(vec![1.0, 0.0]));
        assert_eq!(fragment_derivative(&g, &line, 0).unwrap(), CurveDerivative::Horizontal(vec![1.0, 0.0]));
        let diag = Fragment::sampled(times.clone(), times.iter().map(|&t| vec![t, t, 0.0]).collect()).unwrap();
        assert_eq!(fragment_derivative_at(&g, &diag, 0.25).unwrap(), CurveDerivative::Horizontal(vec![1.0, 1.0]));
        let vertical = Fragment::sampled(times.clone(), times.iter().map(|&t| vec![0.0, 0.0, t]).collect()).unwrap();
        assert!(matches!(fragment_derivative_at(&g, &vertical, 0.5).unwrap(), CurveDerivative::Undefined { .. }));
        assert!(matches!(fragment_derivative_at(&g, &line, 0.3), Err(PansuError::OutsideDomain { .. })));
    }
}
