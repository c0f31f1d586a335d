//! Endpoint drift of cone fragments, the good-point witness and horizontal
//! speed checks.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{euclid, is_c_curve, Cone, ConeError};
use crate::fragment::{Domain, Fragment, FragmentError};
use crate::group::CarnotGroup;
use crate::norm::BoxNorm;
use crate::pansu::{fragment_derivative, GroupMap};

/// Radii sampled per decade in density clauses.
pub const RADII_PER_DECADE: usize = 16;

/// `lo·10^{k/per_decade}` for all `k ≥ 0` with value below `hi`.
pub fn geometric_radii(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let mut out = Vec::new();
    if !(lo > 0.0) || per_decade == 0 {
        return out;
    }
    let mut k = 0;
    loop {
        let r = lo * libm::pow(10.0, k as f64 / per_decade as f64);
        if r >= hi {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}

/// The first hypothesis of the drift estimate that fails.
#[derive(Clone, Debug, PartialEq)]
pub enum DriftHypothesis {
    /// `ℒ¹(B(t₀,r) ∩ Dom) ≤ (1−σ)·2r` at a sampled radius.
    Density { r: f64, fraction: f64 },
    /// Increment of `π₁∘γ` between samples `pair` outside the cone.
    Cone { pair: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq)]
pub enum DriftError {
    Hypothesis(DriftHypothesis),
    Cone(ConeError),
    OutsideDomain { t: f64 },
    BadSigma(f64),
    /// No sample time `t₀ + ρ` with `0 < |ρ| < R`.
    NoRadii,
}

impl fmt::Display for DriftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftError::Hypothesis(DriftHypothesis::Density { r, fraction }) => {
                write!(f, "density hypothesis fails at r = {r} (fraction {fraction})")
            }
            DriftError::Hypothesis(DriftHypothesis::Cone { pair }) => {
                write!(f, "cone hypothesis fails between samples {} and {}", pair.0, pair.1)
            }
            DriftError::Cone(e) => write!(f, "{e}"),
            DriftError::OutsideDomain { t } => write!(f, "t = {t} is not a sample time"),
            DriftError::BadSigma(s) => write!(f, "sigma must lie in (0, 1], got {s}"),
            DriftError::NoRadii => write!(f, "no sample times within the radius bound"),
        }
    }
}

impl From<ConeError> for DriftError {
    fn from(e: ConeError) -> Self {
        DriftError::Cone(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftRow {
    pub rho: f64,
    pub lhs: f64,
    /// `σ^{1/s}|ρ|`.
    pub scale: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
    /// Empirical drift constant: the largest ratio.
    pub max_ratio: f64,
    pub mesh: f64,
    /// Whether every ratio stays below the supplied fit constant.
    pub within_fit: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftOptions {
    /// Smallest sampled radius, in mesh widths.
    pub min_radius_meshes: f64,
    pub radii_per_decade: usize,
    /// Evaluate negative `ρ` too.
    pub both_sides: bool,
}

impl Default for DriftOptions {
    fn default() -> Self {
        DriftOptions { min_radius_meshes: 4.0, radii_per_decade: RADII_PER_DECADE, both_sides: true }
    }
}

fn pi1_step(group: &CarnotGroup, a: &[f64], b: &[f64]) -> f64 {
    let r = group.rank();
    euclid(&b[..r].iter().zip(&a[..r]).map(|(x, y)| x - y).collect::<Vec<f64>>())
}

/// Compares `γ(t₀+ρ)` with the flow `γ(t₀)·[(∫₀^ρ |Dγ| dℒ¹⌞Dom) e]` at
/// geometric radii `|ρ| < R`, after checking the density and cone
/// hypotheses. The speed integral sums `π₁` increments over joined samples.
pub fn verify_drift(
    norm: &BoxNorm,
    curve: &Fragment<Vec<f64>>,
    axis: &[f64],
    sigma: f64,
    t0: f64,
    radius: f64,
    c_fit: Option<f64>,
    options: &DriftOptions,
) -> Result<DriftReport, DriftError> {
    let group = norm.group();
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(DriftError::BadSigma(sigma));
    }
    let cone = Cone::new(axis, sigma)?;
    let i0 = curve.index_of(t0).ok_or(DriftError::OutsideDomain { t: t0 })?;
    let mesh = curve.mesh();
    let radii = geometric_radii(options.min_radius_meshes * mesh, radius, options.radii_per_decade);

    let domain = curve.domain();
    for &r in &radii {
        let fraction = 1.0 - domain.missing_in(t0 - r, t0 + r) / (2.0 * r);
        if !(fraction > 1.0 - sigma) {
            return Err(DriftError::Hypothesis(DriftHypothesis::Density { r, fraction }));
        }
    }
    let verdict = is_c_curve(group, curve, &cone, false);
    if let Some(pair) = verdict.violation {
        return Err(DriftError::Hypothesis(DriftHypothesis::Cone { pair }));
    }

    let times = curve.times();
    let pts = curve.points();
    let mut targets: Vec<usize> = Vec::new();
    for &r in &radii {
        let signs: &[f64] = if options.both_sides { &[1.0, -1.0] } else { &[1.0] };
        for &sign in signs {
            let t = t0 + sign * r;
            let j = times.partition_point(|&s| s < t);
            let cand = [j.checked_sub(1), (j < times.len()).then_some(j)];
            let best = cand
                .into_iter()
                .flatten()
                .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()));
            if let Some(k) = best {
                let rho = times[k] - t0;
                if k != i0 && rho.abs() < radius && (rho > 0.0) == (sign > 0.0) {
                    targets.push(k);
                }
            }
        }
    }
    targets.sort_unstable();
    targets.dedup();
    if targets.is_empty() {
        return Err(DriftError::NoRadii);
    }

    let s = group.step() as f64;
    let sigma_root = libm::pow(sigma, 1.0 / s);
    let e = cone.axis();
    let mut rows = Vec::with_capacity(targets.len());
    for k in targets {
        let (lo, hi) = if k > i0 { (i0, k) } else { (k, i0) };
        let mut length = 0.0;
        for i in lo..hi {
            if curve.joined(i) {
                length += pi1_step(group, &pts[i], &pts[i + 1]);
            }
        }
        let rho = times[k] - t0;
        if rho < 0.0 {
            length = -length;
        }
        let mut flow = vec![0.0; group.dim()];
        for (c, x) in flow.iter_mut().zip(e) {
            *c = length * x;
        }
        let predicted = group.mul(&pts[i0], &flow);
        let lhs = norm.distance(&pts[k], &predicted);
        let scale = sigma_root * rho.abs();
        rows.push(DriftRow { rho, lhs, scale, ratio: lhs / scale });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let within_fit = c_fit.map(|c| rows.iter().all(|r| r.ratio <= c));
    Ok(DriftReport { rows, max_ratio, mesh, within_fit })
}

/// Parameters of the synthetic drift family: a unit-speed horizontal line in
/// direction `normalize(e + tilt·w)` on `[−half_length, half_length]`, with
/// gaps of `gap_meshes` mesh widths removed periodically so that a quarter
/// of `σ` of the domain is missing. Gap positions are jittered by the seed;
/// `t₀ = 0` stays inside a piece.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticDrift {
    pub sigma: f64,
    pub tilt: f64,
    pub samples: usize,
    pub half_length: f64,
    pub gap_meshes: f64,
    pub seed: u64,
}

impl SyntheticDrift {
    pub fn new(sigma: f64, seed: u64) -> Self {
        SyntheticDrift { sigma, tilt: sigma, samples: 2001, half_length: 1.0, gap_meshes: 3.0, seed }
    }

    /// Samples the fragment in `group` along axis `e` tilted towards `w`.
    pub fn generate(
        &self,
        norm: &BoxNorm,
        e: &[f64],
        w: &[f64],
    ) -> Result<Fragment<Vec<f64>>, FragmentError> {
        let group = norm.group();
        let mesh = 2.0 * self.half_length / (self.samples - 1) as f64;
        let gap = self.gap_meshes * mesh;
        let period = 4.0 * gap / self.sigma;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let kmax = libm::ceil(self.half_length / period) as i64 + 1;
        let gaps: Vec<(f64, f64)> = (-kmax..kmax)
            .map(|k| {
                let centre = (k as f64 + 0.5) * period + rng.gen_range(-period / 8.0..=period / 8.0);
                (centre - gap / 2.0, centre + gap / 2.0)
            })
            .collect();
        let mut dir: Vec<f64> = e.iter().zip(w).map(|(a, b)| a + self.tilt * b).collect();
        let n = euclid(&dir);
        dir.iter_mut().for_each(|x| *x /= n);
        let mut times = Vec::new();
        let mut points = Vec::new();
        for i in 0..self.samples {
            let t = -self.half_length + i as f64 * mesh;
            if gaps.iter().any(|&(a, b)| t > a && t < b) {
                continue;
            }
            let mut p = vec![0.0; group.dim()];
            for (c, x) in p.iter_mut().zip(&dir) {
                *c = t * x;
            }
            times.push(t);
            points.push(p);
        }
        Fragment::new(times, points, |a, b| norm.distance(a, b))
    }
}

/// Clause of the good-point condition that failed.
#[derive(Clone, Debug, PartialEq)]
pub enum WitnessClause {
    /// `γ(t) ≠ y`.
    Point,
    /// Missing fraction of `B(t, r)` not below the threshold.
    Density { r: f64, missing: f64 },
    /// `π₁φγ(s) − π₁φγ(s′)` outside the narrow cone.
    Cone { pair: (usize, usize) },
    /// `|π₁φγ(s) − π₁φγ(s′)| ≤ v·d(γ(s), γ(s′))`.
    Speed { pair: (usize, usize), ratio: f64 },
    OutsideDomain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessParams {
    pub v: f64,
    /// Scale `R`; clause (ii) samples radii below `radius_factor · R`.
    pub r: f64,
    pub radius_factor: f64,
    pub k1: f64,
    pub m: u32,
    pub step: u32,
    pub axis: Vec<f64>,
    pub min_radius_meshes: f64,
}

impl WitnessParams {
    /// `ln θ` with `θ = (K₁v)^{s^{2M}}`, computed in log space.
    pub fn log_threshold(&self) -> f64 {
        libm::pow(self.step as f64, 2.0 * self.m as f64) * libm::log(self.k1 * self.v)
    }

    pub fn threshold(&self) -> f64 {
        libm::exp(self.log_threshold())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub pass: bool,
    pub failed: Option<WitnessClause>,
    pub log_threshold: f64,
    pub radii: usize,
    pub mesh: f64,
}

/// Evaluates the good-point clauses at sample time `t` of a fragment in a
/// sample space with distance `dist`, charted by `phi` into `target`.
pub fn good_point_witness(
    curve: &Fragment<Vec<f64>>,
    dist: &dyn Fn(&[f64], &[f64]) -> f64,
    phi: &dyn GroupMap,
    target: &CarnotGroup,
    t: f64,
    y: Option<&[f64]>,
    params: &WitnessParams,
) -> WitnessReport {
    let log_theta = params.log_threshold();
    let mesh = curve.mesh();
    let report = |failed: Option<WitnessClause>, radii: usize| WitnessReport {
        pass: failed.is_none(),
        failed,
        log_threshold: log_theta,
        radii,
        mesh,
    };
    let Some(i0) = curve.index_of(t) else {
        return report(Some(WitnessClause::OutsideDomain), 0);
    };
    let pts = curve.points();
    if let Some(y) = y {
        if pts[i0].as_slice() != y {
            return report(Some(WitnessClause::Point), 0);
        }
    }
    let radii = geometric_radii(
        params.min_radius_meshes * mesh,
        params.radius_factor * params.r,
        RADII_PER_DECADE,
    );
    let domain: &Domain = curve.domain();
    for &r in &radii {
        let missing = domain.missing_in(t - r, t + r) / (2.0 * r);
        if !(libm::log(missing) < log_theta) {
            return report(Some(WitnessClause::Density { r, missing }), radii.len());
        }
    }
    let theta = libm::exp(log_theta).min(1.0);
    let Ok(cone) = Cone::new(&params.axis, theta) else {
        return report(Some(WitnessClause::Cone { pair: (i0, i0) }), radii.len());
    };
    let images: Vec<Vec<f64>> = pts.iter().map(|p| target.pi1(&phi.eval(p)).to_vec()).collect();
    for j in 0..pts.len() {
        for i in 0..j {
            let inc: Vec<f64> = images[j].iter().zip(&images[i]).map(|(a, b)| a - b).collect();
            if !cone.contains(&inc, false) {
                return report(Some(WitnessClause::Cone { pair: (i, j) }), radii.len());
            }
            let d = dist(&pts[j], &pts[i]);
            let speed = euclid(&inc);
            if !(speed > params.v * d) {
                let ratio = speed / d;
                return report(Some(WitnessClause::Speed { pair: (i, j), ratio }), radii.len());
            }
        }
    }
    report(None, radii.len())
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpeedError {
    /// No sample has three neighbours within three mesh widths.
    TooSparse,
}

impl fmt::Display for SpeedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeedError::TooSparse => write!(f, "fragment too sparse for local Lipschitz estimates"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedReport {
    pub passed: usize,
    pub evaluated: usize,
    pub fraction: f64,
    pub mesh: f64,
}

/// Fraction of samples with `|D(φ∘γ)(t)| ≥ δ·Lip(π₁∘φ, γ(t))·Lip(γ, t)`, the
/// pointwise Lipschitz constants estimated from samples within three mesh
/// widths. Samples with fewer than three such neighbours are skipped; an
/// undefined derivative fails.
pub fn horizontal_speed_check(
    curve: &Fragment<Vec<f64>>,
    dist: &dyn Fn(&[f64], &[f64]) -> f64,
    phi: &dyn GroupMap,
    target: &CarnotGroup,
    delta: f64,
) -> Result<SpeedReport, SpeedError> {
    let mesh = curve.mesh();
    let times = curve.times();
    let pts = curve.points();
    let image = curve.map(|p| phi.eval(p));
    let ipts = image.points();
    let reach = 3.0 * mesh * (1.0 + 1e-9);
    let mut passed = 0;
    let mut evaluated = 0;
    for i in 0..times.len() {
        let lo = times.partition_point(|&s| s < times[i] - reach);
        let hi = times.partition_point(|&s| s <= times[i] + reach);
        if hi - lo < 4 {
            continue;
        }
        evaluated += 1;
        if delta == 0.0 {
            passed += 1;
            continue;
        }
        let Ok(deriv) = fragment_derivative(target, &image, i) else { continue };
        let Some(v) = deriv.horizontal() else { continue };
        let mut lip_curve = 0.0f64;
        let mut lip_chart = 0.0f64;
        for k in (lo..hi).filter(|&k| k != i) {
            let d = dist(&pts[k], &pts[i]);
            lip_curve = lip_curve.max(d / (times[k] - times[i]).abs());
            if d > 0.0 {
                lip_chart = lip_chart.max(pi1_step(target, &ipts[i], &ipts[k]) / d);
            }
        }
        let speed = euclid(v);
        if speed >= delta * lip_chart * lip_curve * (1.0 - 1e-12) {
            passed += 1;
        }
    }
    if evaluated == 0 {
        return Err(SpeedError::TooSparse);
    }
    Ok(SpeedReport { passed, evaluated, fraction: passed as f64 / evaluated as f64, mesh })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn h1() -> BoxNorm {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        BoxNorm::new(&g, &[1.0]).unwrap()
    }

    fn line(norm: &BoxNorm, dir: &[f64], n: usize) -> Fragment<Vec<f64>> {
        let times: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
        let pts = times
            .iter()
            .map(|&t| {
                let mut p = vec![0.0; norm.group().dim()];
                p[..dir.len()].iter_mut().zip(dir).for_each(|(c, x)| *c = t * x);
                p
            })
            .collect();
        Fragment::new(times, pts, |a, b| norm.distance(a, b)).unwrap()
    }

    #[test]
    fn exact_flow_has_no_drift() {
        let n = h1();
        let f = line(&n, &[1.0, 0.0], 400);
        let rep = verify_drift(&n, &f, &[1.0, 0.0], 0.1, 0.0, 0.9, Some(1.0), &DriftOptions::default()).unwrap();
        assert!(!rep.rows.is_empty());
        assert!(rep.rows.iter().all(|r| r.lhs < 1e-12), "{:?}", rep.rows);
        assert_eq!(rep.within_fit, Some(true));
    }

    #[test]
    fn degenerate_sigma_gives_finite_ratios() {
        let n = h1();
        let f = line(&n, &[0.6, 0.8], 200);
        let rep = verify_drift(&n, &f, &[1.0, 0.0], 1.0, 0.0, 0.9, None, &DriftOptions::default()).unwrap();
        assert!(rep.rows.iter().all(|r| r.ratio.is_finite()));
    }

    #[test]
    fn hypotheses_are_checked() {
        let n = h1();
        let f = line(&n, &[0.0, 1.0], 200);
        assert!(matches!(
            verify_drift(&n, &f, &[1.0, 0.0], 0.1, 0.0, 0.9, None, &DriftOptions::default()),
            Err(DriftError::Hypothesis(DriftHypothesis::Cone { .. }))
        ));
        let f = SyntheticDrift { gap_meshes: 40.0, ..SyntheticDrift::new(0.2, 1) }
            .generate(&n, &[1.0, 0.0], &[0.0, 1.0])
            .unwrap();
        let r = verify_drift(&n, &f, &[1.0, 0.0], 0.01, 0.0, 0.9, None, &DriftOptions::default());
        assert!(matches!(r, Err(DriftError::Hypothesis(DriftHypothesis::Density { .. }))), "{r:?}");
    }

    #[test]
    fn synthetic_family_has_bounded_ratios() {
        let n = h1();
        let mut maxima = Vec::new();
        for sigma in [0.1, 0.05, 0.01] {
            let f = SyntheticDrift::new(sigma, 7).generate(&n, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            let rep = verify_drift(&n, &f, &[1.0, 0.0], sigma, 0.0, 0.9, None, &DriftOptions::default()).unwrap();
            maxima.push(rep.max_ratio);
        }
        let hi = maxima.iter().cloned().fold(0.0, f64::max);
        let lo = maxima.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi < 2.0 && lo > 0.1, "{maxima:?}");
    }

    #[test]
    fn witness_examples() {
        let n = h1();
        let g = n.group().clone();
        let f = line(&n, &[1.0, 0.0], 200);
        let dist = |a: &[f64], b: &[f64]| n.distance(a, b);
        let id = |x: &[f64]| x.to_vec();
        let params = WitnessParams {
            v: 0.1,
            r: 0.2,
            radius_factor: 1.0,
            k1: 0.01,
            m: 6,
            step: 2,
            axis: vec![1.0, 0.0],
            min_radius_meshes: 4.0,
        };
        let rep = good_point_witness(&f, &dist, &id, &g, 0.0, Some(&[0.0, 0.0, 0.0]), &params);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.failed, None);
        let rep = good_point_witness(&f, &dist, &id, &g, 0.0, Some(&[1.0, 0.0, 0.0]), &params);
        assert_eq!(rep.failed, Some(WitnessClause::Point));
        let fast = WitnessParams { v: 3.0, ..params.clone() };
        let rep = good_point_witness(&f, &dist, &id, &g, 0.0, None, &fast);
        assert!(matches!(rep.failed, Some(WitnessClause::Speed { .. })));

        let times: Vec<f64> = (0..=200)
            .map(|i| -1.0 + i as f64 / 100.0)
            .filter(|t| !(0.05..0.08).contains(t))
            .collect();
        let pts: Vec<Vec<f64>> = times.iter().map(|&t| vec![t, 0.0, 0.0]).collect();
        let gapped = Fragment::new(times, pts, |a, b| n.distance(a, b)).unwrap();
        let rep = good_point_witness(&gapped, &dist, &id, &g, 0.0, None, &params);
        assert!(matches!(rep.failed, Some(WitnessClause::Density { .. })), "{rep:?}");
    }

    #[test]
    fn speed_examples() {
        let n = h1();
        let g = n.group().clone();
        let f = line(&n, &[1.0, 0.0], 100);
        let dist = |a: &[f64], b: &[f64]| n.distance(a, b);
        let id = |x: &[f64]| x.to_vec();
        assert_eq!(horizontal_speed_check(&f, &dist, &id, &g, 1.0).unwrap().fraction, 1.0);
        assert_eq!(horizontal_speed_check(&f, &dist, &id, &g, 0.0).unwrap().fraction, 1.0);

        let times: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let pts: Vec<Vec<f64>> = times.iter().map(|&t| vec![0.0, 0.0, t]).collect();
        let vertical = Fragment::sampled(times, pts).unwrap();
        let rep = horizontal_speed_check(&vertical, &dist, &id, &g, 0.01).unwrap();
        assert_eq!(rep.fraction, 0.0);
        assert_eq!(horizontal_speed_check(&vertical, &dist, &id, &g, 0.0).unwrap().fraction, 1.0);

        let sparse = Fragment::sampled(vec![0.0, 1.0], vec![vec![0.0; 3], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(horizontal_speed_check(&sparse, &dist, &id, &g, 0.5), Err(SpeedError::TooSparse));
    }
}
