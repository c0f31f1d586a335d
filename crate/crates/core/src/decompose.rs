//! Words of horizontal flows: the map `s ↦ δ_{s₁}v_{i₁}⋯δ_{s_n}v_{i_n}·δ_{−ŝ_n}v_{i_n}⋯δ_{−ŝ₁}v_{i₁}`,
//! its numerical inversion and refinement of cone covers.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{euclid, orthonormal_complement, Cone};
use crate::group::CarnotGroup;
use crate::linalg;
use crate::norm::BoxNorm;
use crate::sample;

const FD_STEP: f64 = 1e-6;
const MAX_CONDITION: f64 = 1e6;
const MAX_SCALAR: f64 = 10.0;
const NEWTON_TOL: f64 = 1e-14;
const PATH_STEPS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum DecomposeError {
    /// The basis does not span the horizontal layer.
    RankDeficient { rank: usize, needed: usize },
    BadPattern { index: usize },
    Shape { expected: usize, found: usize },
    /// No pattern and anchor with a well-conditioned Jacobian and a
    /// certified radius within the search budget.
    NoAnchor { tried: usize },
    /// Newton failed from the anchor and every restart.
    Diverged { best: Vec<f64>, residual: f64 },
    /// The word was found but reconstructs the target too coarsely.
    Inaccurate { error: f64, tolerance: f64 },
}

impl fmt::Display for DecomposeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecomposeError::RankDeficient { rank, needed } => {
                write!(f, "basis has rank {rank}, the horizontal layer has dimension {needed}")
            }
            DecomposeError::BadPattern { index } => write!(f, "pattern index {index} out of range"),
            DecomposeError::Shape { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            DecomposeError::NoAnchor { tried } => {
                write!(f, "no usable anchor among {tried} candidates")
            }
            DecomposeError::Diverged { residual, .. } => {
                write!(f, "Newton iteration diverged (best residual {residual:e})")
            }
            DecomposeError::Inaccurate { error, tolerance } => {
                write!(f, "reconstruction error {error:e} exceeds {tolerance:e}")
            }
        }
    }
}

fn letter(group: &CarnotGroup, v: &[f64], s: f64) -> Vec<f64> {
    let mut p = vec![0.0; group.dim()];
    for (c, x) in p.iter_mut().zip(v) {
        *c = s * x;
    }
    p
}

/// Product of the letters `δ_{s_k}(basis[i_k])`. Even-length words are
/// evaluated from the middle outwards, so that a word followed by its
/// mirror inverse telescopes to the identity exactly.
pub fn evaluate_word(group: &CarnotGroup, basis: &[Vec<f64>], letters: &[(usize, f64)]) -> Vec<f64> {
    let pt = |k: usize| letter(group, &basis[letters[k].0], letters[k].1);
    let n = letters.len();
    if n == 0 {
        return group.identity();
    }
    if n % 2 == 1 {
        let mut x = pt(0);
        for k in 1..n {
            x = group.mul(&x, &pt(k));
        }
        return x;
    }
    let m = n / 2;
    let mut x = group.mul(&pt(m - 1), &pt(m));
    for k in (0..m - 1).rev() {
        x = group.mul(&pt(k), &group.mul(&x, &pt(n - 1 - k)));
    }
    x
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Result of a Newton solve `F(s) = w`.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub s: Vec<f64>,
    /// Sup-norm coordinate residual.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// The flow map for a unit basis of the horizontal layer, an index
/// pattern of length `dim 𝔾` and an anchor.
#[derive(Clone, Debug)]
pub struct FlowMap {
    group: CarnotGroup,
    basis: Vec<Vec<f64>>,
    pattern: Vec<usize>,
    anchor: Vec<f64>,
}

/// Normalises the basis and checks that it spans the horizontal layer.
pub fn unit_basis(group: &CarnotGroup, basis: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, DecomposeError> {
    let r = group.rank();
    let mut out = Vec::with_capacity(basis.len());
    for v in basis {
        if v.len() != r {
            return Err(DecomposeError::Shape { expected: r, found: v.len() });
        }
        let n = euclid(v);
        out.push(v.iter().map(|x| x / n).collect::<Vec<f64>>());
    }
    let rank = linalg::rank(&out, r, 1e-10);
    if out.iter().any(|v| v.iter().any(|x| !x.is_finite())) || rank < r {
        return Err(DecomposeError::RankDeficient { rank, needed: r });
    }
    Ok(out)
}

impl FlowMap {
    /// `pattern` holds 0-based basis indices.
    pub fn new(
        group: &CarnotGroup,
        basis: &[Vec<f64>],
        pattern: &[usize],
        anchor: &[f64],
    ) -> Result<Self, DecomposeError> {
        let basis = unit_basis(group, basis)?;
        let n = group.dim();
        if pattern.len() != n {
            return Err(DecomposeError::Shape { expected: n, found: pattern.len() });
        }
        if anchor.len() != n {
            return Err(DecomposeError::Shape { expected: n, found: anchor.len() });
        }
        if let Some(&index) = pattern.iter().find(|&&i| i >= basis.len()) {
            return Err(DecomposeError::BadPattern { index });
        }
        Ok(FlowMap { group: group.clone(), basis, pattern: pattern.to_vec(), anchor: anchor.to_vec() })
    }

    pub fn group(&self) -> &CarnotGroup {
        &self.group
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn pattern(&self) -> &[usize] {
        &self.pattern
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// The `2n` letters for solved scalars `s`.
    pub fn letters(&self, s: &[f64]) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self.pattern.iter().copied().zip(s.iter().copied()).collect();
        out.extend(self.pattern.iter().zip(&self.anchor).rev().map(|(&i, &a)| (i, -a)));
        out
    }

    pub fn eval(&self, s: &[f64]) -> Vec<f64> {
        evaluate_word(&self.group, &self.basis, &self.letters(s))
    }

    /// Central finite-difference Jacobian.
    pub fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let n = s.len();
        let mut jac = DMatrix::zeros(self.group.dim(), n);
        let mut probe = s.to_vec();
        for k in 0..n {
            probe[k] = s[k] + FD_STEP;
            let plus = self.eval(&probe);
            probe[k] = s[k] - FD_STEP;
            let minus = self.eval(&probe);
            probe[k] = s[k];
            for r in 0..plus.len() {
                jac[(r, k)] = (plus[r] - minus[r]) / (2.0 * FD_STEP);
            }
        }
        jac
    }

    /// Damped Newton iteration for `F(s) = target` from `start`.
    pub fn solve(&self, target: &[f64], start: &[f64], max_iter: usize) -> NewtonOutcome {
        let mut s = start.to_vec();
        let mut value = self.eval(&s);
        let mut residual = sup_diff(&value, target);
        let mut iterations = 0;
        while iterations < max_iter && residual > NEWTON_TOL {
            iterations += 1;
            let jac = self.jacobian(&s);
            let rhs = DVector::from_iterator(value.len(), value.iter().zip(target).map(|(a, b)| b - a));
            let Some(step) = linalg::solve(&jac, &rhs) else { break };
            let mut damping = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial: Vec<f64> = s.iter().zip(step.iter()).map(|(a, d)| a + damping * d).collect();
                let tv = self.eval(&trial);
                let tr = sup_diff(&tv, target);
                if tr < residual {
                    s = trial;
                    value = tv;
                    residual = tr;
                    improved = true;
                    break;
                }
                damping *= 0.5;
            }
            if !improved {
                break;
            }
        }
        let converged = residual <= 1e-12 * (1.0 + target.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            && s.iter().all(|x| x.abs() <= MAX_SCALAR);
        NewtonOutcome { s, residual, iterations, converged }
    }
}

impl FlowMap {
    /// Newton along the dilation path `τ ↦ δ_τ w`, `τ = 1/steps, …, 1`,
    /// starting at the anchor and warm-started at each step. Follows the
    /// solution branch through the anchor.
    pub fn solve_path(&self, target: &[f64], steps: usize) -> NewtonOutcome {
        let mut s = self.anchor.clone();
        let mut iterations = 0;
        let mut last = None;
        for k in 1..=steps.max(1) {
            let mut w = target.to_vec();
            self.group.dilate_in_place(k as f64 / steps.max(1) as f64, &mut w);
            let out = self.solve(&w, &s, 60);
            iterations += out.iterations;
            s = out.s.clone();
            let failed = !out.converged;
            last = Some(out);
            if failed {
                break;
            }
        }
        let mut out = last.expect("at least one step");
        out.iterations = iterations;
        out
    }
}

/// Bound certificate of a decomposition word.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WordCertificate {
    /// `max_k |s_k|` (letters are unit vectors).
    pub max_scalar: f64,
    pub target_norm: f64,
    /// `max_k |s_k| / ∥v∥`, the empirical `c₀` for this target.
    pub ratio: f64,
    /// Sup-norm coordinate difference between the evaluated word and the target.
    pub reconstruction_error: f64,
    pub tolerance: f64,
    /// Solved on the continuation branch through the anchor.
    pub pinned: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecompositionWord {
    pub basis: Vec<Vec<f64>>,
    /// 0-based basis index per letter.
    pub pattern: Vec<usize>,
    pub scalars: Vec<f64>,
    pub certificate: WordCertificate,
}

impl DecompositionWord {
    pub fn len(&self) -> usize {
        self.scalars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scalars.is_empty()
    }

    pub fn letters(&self) -> Vec<(usize, f64)> {
        self.pattern.iter().copied().zip(self.scalars.iter().copied()).collect()
    }

    pub fn evaluate(&self, group: &CarnotGroup) -> Vec<f64> {
        evaluate_word(group, &self.basis, &self.letters())
    }

    /// Freely reduced letters: adjacent repeats of the same basis index are
    /// merged (`δ_a v · δ_b v = δ_{a+b} v`) and letters that become exactly
    /// zero are dropped, which may bring further repeats together.
    pub fn merged(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for (i, s) in self.letters() {
            if s == 0.0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == i => {
                    last.1 += s;
                    if last.1 == 0.0 {
                        out.pop();
                    }
                }
                _ => out.push((i, s)),
            }
        }
        out
    }
}

/// A pattern, an anchor and the certified radius around the identity.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnchorChoice {
    pub pattern: Vec<usize>,
    pub anchor: Vec<f64>,
    /// Working radius: half the certified one.
    pub zeta: f64,
    pub certified_zeta: f64,
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnchorSearch {
    /// Number of (pattern, anchor) candidates scored.
    pub budget: usize,
    /// Random targets on the sphere of radius `ζ` used to certify it, on
    /// top of the dilated coordinate directions.
    pub sphere_samples: usize,
    pub seed: u64,
}

impl Default for AnchorSearch {
    fn default() -> Self {
        AnchorSearch { budget: 64, sphere_samples: 512, seed: 0 }
    }
}

fn candidate_patterns<R: Rng>(n1: usize, n: usize, extra: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for offset in 0..n1 {
        out.push((0..n).map(|k| (k + offset) % n1).collect());
    }
    // Cover every index once, then alternate between the first two.
    if n1 >= 2 && n > n1 {
        let mut p: Vec<usize> = (0..n1).collect();
        while p.len() < n {
            let k = p.len() - n1;
            p.push(k % 2);
        }
        out.push(p);
    }
    for _ in 0..extra {
        let mut p: Vec<usize> = (0..n1).collect();
        while p.len() < n {
            p.push(rng.gen_range(0..n1));
        }
        for i in (1..p.len()).rev() {
            let j = rng.gen_range(0..=i);
            p.swap(i, j);
        }
        out.push(p);
    }
    out.retain(|p| p.len() == n);
    out.dedup();
    out
}

/// Searches patterns and anchors in `(0.2, 0.8)ⁿ` for a Jacobian with
/// condition number below `10⁶`, then certifies the largest radius
/// `ζ ∈ {1, ½, ¼, …}` for which Newton continuation from the anchor reaches
/// every sampled target on the `ζ`-sphere.
pub fn select_anchor(
    norm: &BoxNorm,
    basis: &[Vec<f64>],
    search: &AnchorSearch,
) -> Result<AnchorChoice, DecomposeError> {
    let group = norm.group();
    let basis = unit_basis(group, basis)?;
    let n = group.dim();
    let n1 = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let patterns = candidate_patterns(n1, n, 4, &mut rng);
    let per_pattern = (search.budget / patterns.len()).max(1);
    let mut scored: Vec<(f64, Vec<usize>, Vec<f64>)> = Vec::new();
    let mut tried = 0;
    for p in &patterns {
        for _ in 0..per_pattern {
            tried += 1;
            let anchor: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.8)).collect();
            let flow = FlowMap::new(group, &basis, p, &anchor)?;
            let jac = flow.jacobian(&anchor);
            let cond = linalg::condition_number(&jac);
            if cond.is_finite() && cond < MAX_CONDITION {
                scored.push((cond, p.clone(), anchor));
            }
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut targets: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; n];
            p[k] = sign;
            let r = norm.norm(&p);
            group.dilate_in_place(1.0 / r, &mut p);
            targets.push(p);
        }
    }
    targets.extend((0..search.sphere_samples).map(|_| sample::unit_sphere(norm, &mut rng)));
    for (cond, pattern, anchor) in scored.into_iter().take(8) {
        let flow = FlowMap::new(group, &basis, &pattern, &anchor)?;
        let mut zeta = 1.0;
        while zeta > 1e-4 {
            let ok = targets.iter().all(|t| {
                let mut w = t.clone();
                group.dilate_in_place(zeta, &mut w);
                flow.solve_path(&w, PATH_STEPS).converged
            });
            if ok {
                return Ok(AnchorChoice { pattern, anchor, zeta: 0.5 * zeta, certified_zeta: zeta, condition: cond });
            }
            zeta *= 0.5;
        }
    }
    Err(DecomposeError::NoAnchor { tried })
}

/// Decomposes group elements into words of `2·dim 𝔾` horizontal letters.
#[derive(Clone, Debug)]
pub struct Decomposer {
    norm: BoxNorm,
    flow: FlowMap,
    choice: AnchorChoice,
    restarts: usize,
    seed: u64,
}

impl Decomposer {
    pub fn new(norm: &BoxNorm, basis: &[Vec<f64>], search: &AnchorSearch) -> Result<Self, DecomposeError> {
        let choice = select_anchor(norm, basis, search)?;
        Self::with_anchor(norm, basis, choice, search.seed)
    }

    pub fn with_anchor(
        norm: &BoxNorm,
        basis: &[Vec<f64>],
        choice: AnchorChoice,
        seed: u64,
    ) -> Result<Self, DecomposeError> {
        let flow = FlowMap::new(norm.group(), basis, &choice.pattern, &choice.anchor)?;
        Ok(Decomposer { norm: norm.clone(), flow, choice, restarts: 8, seed })
    }

    pub fn choice(&self) -> &AnchorChoice {
        &self.choice
    }

    pub fn flow(&self) -> &FlowMap {
        &self.flow
    }

    pub fn norm(&self) -> &BoxNorm {
        &self.norm
    }

    /// Solves for `δ_{ζ/∥v∥}v` (along the continuation path from the anchor,
    /// then by plain Newton and seeded restarts in `(0,1)ⁿ`) and dilates the scalars back by `∥v∥/ζ`.
    pub fn decompose(&self, v: &[f64]) -> Result<DecompositionWord, DecomposeError> {
        let group = self.flow.group();
        if v.len() != group.dim() {
            return Err(DecomposeError::Shape { expected: group.dim(), found: v.len() });
        }
        let size = self.norm.norm(v);
        let zeta = self.choice.zeta;
        let anchor = &self.choice.anchor;
        let mut pinned = true;
        let (kappa, solved) = if size == 0.0 {
            (1.0, anchor.clone())
        } else {
            let kappa = size / zeta;
            let mut w = v.to_vec();
            group.dilate_in_place(1.0 / kappa, &mut w);
            let mut best = self.flow.solve_path(&w, PATH_STEPS);
            pinned = best.converged;
            if !best.converged {
                let direct = self.flow.solve(&w, anchor, 60);
                if direct.converged || direct.residual < best.residual {
                    best = direct;
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let mut tries = 0;
            while !best.converged && tries < self.restarts {
                tries += 1;
                let start: Vec<f64> = (0..anchor.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
                let out = self.flow.solve(&w, &start, 60);
                if out.converged || out.residual < best.residual {
                    best = out;
                }
            }
            if !best.converged {
                return Err(DecomposeError::Diverged { best: best.s, residual: best.residual });
            }
            (kappa, best.s)
        };
        let letters = self.flow.letters(&solved);
        let pattern: Vec<usize> = letters.iter().map(|l| l.0).collect();
        let scalars: Vec<f64> = letters.iter().map(|l| kappa * l.1).collect();
        let basis = self.flow.basis().to_vec();
        let rebuilt = evaluate_word(group, &basis, &pattern.iter().copied().zip(scalars.iter().copied()).collect::<Vec<_>>());
        let error = sup_diff(&rebuilt, v);
        let tolerance = 1e-8 * size.max(1.0);
        if !(error < tolerance) {
            return Err(DecomposeError::Inaccurate { error, tolerance });
        }
        let max_scalar = scalars.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let ratio = if size > 0.0 { max_scalar / size } else { 0.0 };
        Ok(DecompositionWord {
            basis,
            pattern,
            scalars,
            certificate: WordCertificate {
                max_scalar,
                target_norm: size,
                ratio,
                reconstruction_error: error,
                tolerance,
                pinned,
            },
        })
    }
}

/// Empirical `c₀`: the largest certificate ratio over random targets,
/// followed by a local ascent over nearby directions from the worst ones.
/// The ascent only moves between targets solved on the anchor branch, where
/// the ratio depends continuously on the direction.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct C0Estimate {
    pub c0: f64,
    /// Largest ratio among the random targets alone.
    pub sampled: f64,
    pub worst_target: Vec<f64>,
    pub evaluated: usize,
    pub failures: usize,
    pub seed: u64,
}

pub fn estimate_c0(dec: &Decomposer, targets: usize, seed: u64) -> C0Estimate {
    let norm = dec.norm();
    let group = norm.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluated = 0;
    let mut failures = 0;
    let mut ratio_of = |v: &[f64], evaluated: &mut usize| -> Option<f64> {
        *evaluated += 1;
        match dec.decompose(v) {
            Ok(w) if w.certificate.pinned => Some(w.certificate.ratio),
            Ok(_) => None,
            Err(_) => {
                failures += 1;
                None
            }
        }
    };
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(targets);
    for _ in 0..targets {
        let v = sample::unit_sphere(norm, &mut rng);
        if let Some(r) = ratio_of(&v, &mut evaluated) {
            scored.push((r, v));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sampled = scored.first().map_or(0.0, |s| s.0);
    let mut best = scored.first().cloned().unwrap_or((0.0, group.identity()));
    for (start_ratio, start) in scored.into_iter().take(4) {
        let (mut r, mut v) = (start_ratio, start);
        let mut step = 0.1;
        for _ in 0..200 {
            let mut trial: Vec<f64> = v.iter().map(|x| x + step * rng.gen_range(-1.0..=1.0)).collect();
            let size = norm.norm(&trial);
            if size == 0.0 {
                continue;
            }
            group.dilate_in_place(1.0 / size, &mut trial);
            match ratio_of(&trial, &mut evaluated) {
                Some(tr) if tr > r => {
                    r = tr;
                    v = trial;
                }
                _ => step *= 0.97,
            }
        }
        if r > best.0 {
            best = (r, v);
        }
    }
    C0Estimate { c0: best.0, sampled, worst_target: best.1, evaluated, failures, seed }
}

/// Covers each cone by cones of opening `1/ℓ` whose axes lie in it: axes
/// on a gnomonic grid around the parent axis (clipped to the parent),
/// refined until a dense sphere sample of the parent lies in the interiors.
/// Output pairs carry the index of their parent.
pub fn refine_cone_cover(cones: &[Cone], ell: u32, seed: u64) -> Vec<(usize, Cone)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = 1.0 / ell.max(1) as f64;
    let child_angle = libm::acos(1.0 - alpha * alpha);
    let mut out = Vec::new();
    for (idx, parent) in cones.iter().enumerate() {
        let e = parent.axis();
        let d = e.len();
        let comp = orthonormal_complement(e);
        let reach = libm::tan(parent.half_angle().min(1.5));
        let probes = cover_probes(parent, &comp, reach, 400 * d * d, &mut rng);
        let mut spacing = child_angle / libm::sqrt((d.max(2) - 1) as f64);
        loop {
            let axes = gnomonic_axes(e, &comp, reach, spacing);
            let children: Vec<Cone> = axes
                .iter()
                .map(|a| Cone::new(a, alpha).expect("gnomonic axes are nonzero"))
                .collect();
            let covered = probes.iter().all(|u| children.iter().any(|c| c.contains_interior(u)));
            if covered || spacing < 1e-6 {
                out.extend(children.into_iter().map(|c| (idx, c)));
                break;
            }
            spacing *= 0.5;
        }
    }
    out
}

fn gnomonic_axes(e: &[f64], comp: &[Vec<f64>], reach: f64, h: f64) -> Vec<Vec<f64>> {
    let m = comp.len();
    let steps = libm::ceil(reach / h) as i64 + 1;
    let slack = h * libm::sqrt(m as f64) / 2.0;
    let mut axes = Vec::new();
    let mut idx = vec![-steps; m];
    loop {
        let t: Vec<f64> = idx.iter().map(|&k| k as f64 * h).collect();
        let r = euclid(&t);
        if r <= reach + slack {
            let scale = if r > reach { reach / r } else { 1.0 };
            let mut a = e.to_vec();
            for (w, tk) in comp.iter().zip(&t) {
                for (c, x) in a.iter_mut().zip(w) {
                    *c += scale * tk * x;
                }
            }
            axes.push(a);
        }
        let mut k = 0;
        loop {
            if k == m {
                return axes;
            }
            idx[k] += 1;
            if idx[k] <= steps {
                break;
            }
            idx[k] = -steps;
            k += 1;
        }
    }
}

fn cover_probes<R: Rng>(parent: &Cone, comp: &[Vec<f64>], reach: f64, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let e = parent.axis();
    let m = comp.len();
    let mut out = vec![e.to_vec()];
    for i in 0..count {
        let mut t: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = euclid(&t);
        if n == 0.0 {
            continue;
        }
        // Every fourth probe sits on the parent boundary.
        let radius = if i % 4 == 0 { reach } else { reach * rng.gen_range(0.0..=1.0) };
        t.iter_mut().for_each(|x| *x *= radius / n);
        let mut u = e.to_vec();
        for (w, tk) in comp.iter().zip(&t) {
            for (c, x) in u.iter_mut().zip(w) {
                *c += tk * x;
            }
        }
        let un = euclid(&u);
        out.push(u.into_iter().map(|x| x / un).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::cone::cones_xi_separated;

    fn norm(g: CarnotGroup) -> BoxNorm {
        let eps = vec![1.0; g.step() - 1];
        BoxNorm::new(&g, &eps).unwrap()
    }

    fn std_basis(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn flow_map_vanishes_at_anchor() {
        let g = CarnotGroup::new(catalog::engel()).unwrap();
        let anchor = [0.3, 0.7, 0.45, 0.61];
        let f = FlowMap::new(&g, &std_basis(2), &[0, 1, 0, 1], &anchor).unwrap();
        assert_eq!(f.eval(&anchor), vec![0.0; 4]);
    }

    #[test]
    fn abelian_flow_is_linear() {
        let g = CarnotGroup::new(catalog::euclidean(2)).unwrap();
        let f = FlowMap::new(&g, &std_basis(2), &[0, 1], &[0.5, 0.25]).unwrap();
        let x = f.eval(&[1.5, -1.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] + 1.25).abs() < 1e-15);
    }

    #[test]
    fn jacobian_rank() {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        let s = [0.3, 0.6, 0.7];
        let good = FlowMap::new(&g, &std_basis(2), &[0, 1, 0], &s).unwrap();
        assert_eq!(linalg::matrix_rank(&good.jacobian(&s), 1e-8), 3);
        let bad = FlowMap::new(&g, &std_basis(2), &[0, 0, 0], &s).unwrap();
        assert!(linalg::matrix_rank(&bad.jacobian(&s), 1e-8) <= 1);
    }

    #[test]
    fn heisenberg_decomposition() {
        let n = norm(CarnotGroup::new(catalog::heisenberg(1)).unwrap());
        let dec = Decomposer::new(&n, &std_basis(2), &AnchorSearch::default()).unwrap();
        assert_eq!(dec.choice().pattern.len(), 3);
        for v in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.3, -2.0, 5.0]] {
            let w = dec.decompose(&v).unwrap();
            assert_eq!(w.len(), 6);
            assert!(w.certificate.reconstruction_error < 1e-8 * w.certificate.target_norm.max(1.0));
        }
        let zero = dec.decompose(&[0.0; 3]).unwrap();
        assert_eq!(zero.evaluate(n.group()), vec![0.0; 3]);
        assert_eq!(&zero.scalars[..3], dec.choice().anchor.as_slice());
    }

    #[test]
    fn commutator_word() {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        let x = evaluate_word(&g, &std_basis(2), &[(0, 1.0), (1, 1.0), (0, -1.0), (1, -1.0)]);
        assert_eq!(x, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn merging_adjacent_letters() {
        let w = DecompositionWord {
            basis: std_basis(1),
            pattern: vec![0, 0],
            scalars: vec![0.75, -0.5],
            certificate: WordCertificate {
                max_scalar: 0.75,
                target_norm: 0.25,
                ratio: 3.0,
                reconstruction_error: 0.0,
                tolerance: 1e-8,
                pinned: true,
            },
        };
        assert_eq!(w.merged(), vec![(0, 0.25)]);
    }

    #[test]
    fn rejects_rank_deficient_basis() {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        let n = norm(g);
        let r = select_anchor(&n, &[vec![1.0, 1.0], vec![2.0, 2.0]], &AnchorSearch::default());
        assert!(matches!(r, Err(DecomposeError::RankDeficient { rank: 1, needed: 2 })));
    }

    #[test]
    fn cone_cover_examples() {
        let parent = Cone::new(&[1.0, 0.0], 0.3).unwrap();
        let cover = refine_cone_cover(&[parent.clone()], 20, 1);
        assert!(cover.len() > 1);
        assert!(cover.iter().any(|(_, c)| c.axis() == [1.0, 0.0]));
        assert!(cover.iter().all(|(i, c)| *i == 0 && c.opening() <= 0.05 && parent.contains(c.axis(), true)));

        let ray = Cone::new(&[0.0, 1.0], 1e-9).unwrap();
        let cover = refine_cone_cover(&[ray], 5, 1);
        assert_eq!(cover.len(), 1);
        assert_eq!(cover[0].1.opening(), 0.2);

        let parents = [Cone::new(&[1.0, 0.0], 0.1).unwrap(), Cone::new(&[0.0, 1.0], 0.1).unwrap()];
        let xi = 0.9;
        assert!(cones_xi_separated(&parents, xi, 8, 10_000, 3).separated);
        let cover = refine_cone_cover(&parents, 40, 2);
        for (_, a) in cover.iter().filter(|c| c.0 == 0) {
            for (_, b) in cover.iter().filter(|c| c.0 == 1) {
                assert!(cones_xi_separated(&[a.clone(), b.clone()], xi, 4, 1000, 5).separated);
            }
        }

        let p3 = Cone::new(&[1.0, 1.0, 0.0], 0.4).unwrap();
        let cover = refine_cone_cover(&[p3], 4, 9);
        assert!(cover.len() > 1);
    }
}
