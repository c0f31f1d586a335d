//! The chain of constants `K₁, N, C₂, …, C₁₁` built from a tile, a chart and
//! a decomposition constant, with its inequalities checked in log space
//! (the admissible `C₁₁` is typically far below `f64::MIN_POSITIVE`).

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::norm::BoxNorm;
use crate::sample;

/// A positive number stored as its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn new(x: f64) -> Self {
        LogValue { ln: libm::log(x) }
    }

    pub fn from_ln(ln: f64) -> Self {
        LogValue { ln }
    }

    /// The value itself; `0` when it underflows.
    pub fn value(self) -> f64 {
        libm::exp(self.ln)
    }

    pub fn log10(self) -> f64 {
        self.ln / core::f64::consts::LN_10
    }

    pub fn mul(self, other: LogValue) -> LogValue {
        LogValue { ln: self.ln + other.ln }
    }

    pub fn div(self, other: LogValue) -> LogValue {
        LogValue { ln: self.ln - other.ln }
    }

    pub fn scale(self, k: f64) -> LogValue {
        LogValue { ln: self.ln + libm::log(k) }
    }

    pub fn powf(self, p: f64) -> LogValue {
        LogValue { ln: self.ln * p }
    }

    pub fn add(self, other: LogValue) -> LogValue {
        let (hi, lo) = if self.ln >= other.ln { (self.ln, other.ln) } else { (other.ln, self.ln) };
        if lo == f64::NEG_INFINITY {
            return LogValue { ln: hi };
        }
        LogValue { ln: hi + libm::log1p(libm::exp(lo - hi)) }
    }

    pub fn min(self, other: LogValue) -> LogValue {
        if other.ln < self.ln { other } else { self }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.log10();
        let e = libm::floor(l);
        write!(f, "{:.4}e{}", libm::pow(10.0, l - e), e as i64)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LedgerInputs {
    pub diam: f64,
    /// Decomposition constant `c₀ = nΛ/diam T`.
    pub c0: f64,
    /// Word length.
    pub m: u32,
    /// Radius of the ball about the identity inside the tile.
    pub lambda: f64,
    /// Reachability lower bound on letters.
    pub xi: f64,
    pub lip: f64,
    /// Step of the group.
    pub s: u32,
    /// `C` with `∥y⁻¹xy∥ ≤ C∥x∥^{1/s}` on `B(0, max{4c₀(diam T + 1), 2})`.
    pub conjugation: f64,
    /// Drift constant.
    pub drift: f64,
    /// Radius of the ball of reachable points, at most 1/10.
    pub c_surj: f64,
    /// Chosen `K₁`; `None` takes half its bound.
    pub k1: Option<LogValue>,
    /// Chosen `C₆`; `None` takes half its bound.
    pub c6: Option<LogValue>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Shrink {
    K1,
    C6,
}

/// `lhs < rhs`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: LogValue,
    pub rhs: LogValue,
    pub pass: bool,
    /// Which choice must shrink to repair a failure.
    pub shrink: Option<Shrink>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConstantLedger {
    pub inputs: LedgerInputs,
    pub eps1: f64,
    pub k1_bound: LogValue,
    pub k1: LogValue,
    pub c7: f64,
    pub n: f64,
    pub c6_bound: LogValue,
    pub c6: LogValue,
    pub c5: f64,
    pub c11: LogValue,
    pub c4: LogValue,
    pub c2: LogValue,
    pub inequalities: Vec<Inequality>,
}

impl ConstantLedger {
    pub fn all_pass(&self) -> bool {
        self.inequalities.iter().all(|i| i.pass)
    }

    pub fn first_failure(&self) -> Option<&Inequality> {
        self.inequalities.iter().find(|i| !i.pass)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LedgerError {
    NonPositive(&'static str),
    LambdaTooLarge { lambda: f64, quarter_diam: f64 },
    StepBelowOne,
    Unsatisfiable { inequality: &'static str },
}

impl fmt::Display for LedgerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LedgerError::NonPositive(name) => write!(f, "ledger input {name} must be positive"),
            LedgerError::LambdaTooLarge { lambda, quarter_diam } => {
                write!(f, "lambda = {lambda} must be below diam/4 = {quarter_diam}")
            }
            LedgerError::StepBelowOne => write!(f, "the step s must be at least 1"),
            LedgerError::Unsatisfiable { inequality } => write!(f, "inequality {inequality} cannot be met"),
        }
    }
}

fn check(inputs: &LedgerInputs) -> Result<(), LedgerError> {
    let positive = [
        ("diam", inputs.diam),
        ("c0", inputs.c0),
        ("lambda", inputs.lambda),
        ("xi", inputs.xi),
        ("lip", inputs.lip),
        ("conjugation", inputs.conjugation),
        ("drift", inputs.drift),
        ("c_surj", inputs.c_surj),
        ("m", inputs.m as f64),
    ];
    if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(LedgerError::NonPositive(name));
    }
    for (name, v) in [("k1", inputs.k1), ("c6", inputs.c6)] {
        if v.is_some_and(|v| !(v.ln < f64::INFINITY && v.ln > f64::NEG_INFINITY)) {
            return Err(LedgerError::NonPositive(name));
        }
    }
    if inputs.s < 1 {
        return Err(LedgerError::StepBelowOne);
    }
    if inputs.lambda >= inputs.diam / 4.0 {
        return Err(LedgerError::LambdaTooLarge { lambda: inputs.lambda, quarter_diam: inputs.diam / 4.0 });
    }
    Ok(())
}

/// Evaluates the chain at the given inputs and reports every inequality.
pub fn constant_ledger(inputs: &LedgerInputs) -> Result<ConstantLedger, LedgerError> {
    check(inputs)?;
    let LedgerInputs { diam, c0, m, lambda, xi, lip, s, conjugation, drift, c_surj, .. } = *inputs;
    let m_f = m as f64;
    let s_f = s as f64;
    let d1 = diam + 1.0;
    let eps1 = lambda.min(xi);
    let k1_bound = LogValue::new((eps1 / (32.0 * d1 * c0 * (drift + 2.0 * lip))).min(0.01));
    let k1 = inputs.k1.unwrap_or(k1_bound.scale(0.5));
    let c7 = 4.0 * c0 * d1;
    let n = 2.0 * (8.0 * m_f * c0 * d1 + 1.0) / lambda;
    let c6_bound = LogValue::new((eps1 / (4.0 * lip)).min(1.0 / (100.0 + n)).min(c7 / 100.0));
    let c6 = inputs.c6.unwrap_or(c6_bound.scale(0.5));
    let c5 = 4.0 * 2.0 * m_f * (2.0 + 64.0 * d1 * c0);
    let conj_term = LogValue::new(conjugation).mul(c6.mul(LogValue::new(lip)).powf(1.0 / s_f));
    let k1_term = k1.scale(4.0 * (2.0 * drift + 4.0 * lip) * d1 * c0);
    let c11 = conj_term.add(k1_term);
    let c4 = c11.powf(libm::pow(s_f, -m_f)).mul(LogValue::new(2.0 * conjugation.max(1.0)).powf(m_f));
    let c2 = c4.scale(10.0);
    let dominant = if conj_term.ln >= k1_term.ln { Shrink::C6 } else { Shrink::K1 };
    let c2_limit = (0.01f64).min(c7 / 10.0).min(c_surj / 10.0);
    let lt = |name, lhs: LogValue, rhs: LogValue, shrink| {
        let pass = lhs.ln < rhs.ln;
        Inequality { name, lhs, rhs, pass, shrink: if pass { None } else { Some(shrink) } }
    };
    let n_rhs = LogValue::new(8.0 * m_f * c0 * d1).add(c2).scale(1.0 / lambda);
    let inequalities = alloc::vec![
        lt("k1-bound", k1, k1_bound, Shrink::K1),
        lt("c6-bound", c6, c6_bound, Shrink::C6),
        lt("c11-below-one", c11, LogValue::new(1.0), dominant),
        lt("c2-bound", c2, LogValue::new(c2_limit), dominant),
        lt("n-lower-bound", n_rhs, LogValue::new(n), dominant),
    ];
    Ok(ConstantLedger { inputs: inputs.clone(), eps1, k1_bound, k1, c7, n, c6_bound, c6, c5, c11, c4, c2, inequalities })
}

/// Shrinks `K₁` and `C₆` (never enlarging a supplied choice) until every
/// inequality holds: each of the two terms of `C₁₁` is held to half of a
/// target that puts `C₂` at half its bound.
pub fn auto_shrink(inputs: &LedgerInputs) -> Result<ConstantLedger, LedgerError> {
    let first = constant_ledger(inputs)?;
    if first.all_pass() {
        return Ok(first);
    }
    let LedgerInputs { diam, c0, m, lip, s, conjugation, drift, c_surj, .. } = *inputs;
    let (m_f, s_f, d1) = (m as f64, s as f64, diam + 1.0);
    let c2_limit = LogValue::new((0.01f64).min(first.c7 / 10.0).min(c_surj / 10.0));
    let per_c4 = c2_limit.scale(0.05).div(LogValue::new(2.0 * conjugation.max(1.0)).powf(m_f));
    let target = per_c4.powf(libm::pow(s_f, m_f)).scale(0.5).min(LogValue::new(0.5));
    let half = target.scale(0.5);
    let k1 = first.k1_bound.scale(0.5).min(half.scale(1.0 / (4.0 * (2.0 * drift + 4.0 * lip) * d1 * c0))).min(first.k1);
    let c6 = first
        .c6_bound
        .scale(0.5)
        .min(half.scale(1.0 / conjugation).powf(s_f).scale(1.0 / lip))
        .min(first.c6);
    let ledger = constant_ledger(&LedgerInputs { k1: Some(k1), c6: Some(c6), ..inputs.clone() })?;
    match ledger.first_failure() {
        Some(i) => Err(LedgerError::Unsatisfiable { inequality: i.name }),
        None => Ok(ledger),
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConjugationEstimate {
    /// Sampled supremum of `∥y⁻¹xy∥/∥x∥^{1/s}` times the safety factor.
    pub constant: f64,
    pub sampled_max: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Samples `x, y ∈ B(0, radius)` (`x` over six decades of scale) and
/// returns `1.1·max ∥y⁻¹xy∥/∥x∥^{1/s}`.
pub fn estimate_conjugation_constant(norm: &BoxNorm, radius: f64, samples: usize, seed: u64) -> ConjugationEstimate {
    let g = norm.group();
    let s = g.step() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let mut x = sample::unit_sphere(norm, &mut rng);
        let scale = radius * libm::pow(10.0, -6.0 * rng.gen::<f64>());
        g.dilate_in_place(scale, &mut x);
        let mut y = if rng.gen_bool(0.5) { sample::unit_sphere(norm, &mut rng) } else { sample::unit_ball(norm, &mut rng) };
        g.dilate_in_place(radius, &mut y);
        let c = g.mul(&g.mul(&g.inverse(&y), &x), &y);
        let nx = norm.norm(&x);
        if nx > 0.0 {
            best = best.max(norm.norm(&c) / libm::pow(nx, 1.0 / s));
        }
    }
    ConjugationEstimate { constant: 1.1 * best, sampled_max: best, radius, samples, seed }
}
