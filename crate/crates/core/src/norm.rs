//! Box norms `max{|g₁|, ε₂|g₂|^{1/2}, …, ε_s|g_s|^{1/s}}` and their calibration.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::group::CarnotGroup;
use crate::sample;

#[derive(Clone, Debug, PartialEq)]
pub enum NormError {
    /// Expected one ε per stratum above the first.
    EpsilonCount { expected: usize, found: usize },
    NonPositiveEpsilon { stratum: usize, value: f64 },
}

impl fmt::Display for NormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormError::EpsilonCount { expected, found } => {
                write!(f, "expected {expected} epsilons, got {found}")
            }
            NormError::NonPositiveEpsilon { stratum, value } => {
                write!(f, "epsilon for stratum {stratum} must be positive and finite, got {value}")
            }
        }
    }
}

/// Evidence that the triangle inequality held on a random sample.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormCertificate {
    pub seed: u64,
    pub pairs: usize,
    /// Largest observed `∥x·y∥ / (∥x∥ + ∥y∥)`.
    pub worst_ratio: f64,
    /// Largest observed `|π₁(x) − π₁(y)| / d(x, y)`.
    pub pi1_lipschitz: f64,
    /// Certification rounds used (each failed round shrinks the epsilons).
    pub rounds: usize,
}

#[derive(Clone, Debug)]
pub struct BoxNorm {
    group: CarnotGroup,
    /// `eps[j-1]` multiplies stratum `j`; `eps[0] = 1`.
    eps: Vec<f64>,
    certificate: Option<NormCertificate>,
}

impl BoxNorm {
    /// Norm with the given `ε₂, …, ε_s` (empty for abelian groups). Not certified.
    pub fn new(group: &CarnotGroup, epsilons: &[f64]) -> Result<Self, NormError> {
        let expected = group.step() - 1;
        if epsilons.len() != expected {
            return Err(NormError::EpsilonCount { expected, found: epsilons.len() });
        }
        for (i, &e) in epsilons.iter().enumerate() {
            if !(e.is_finite() && e > 0.0) {
                return Err(NormError::NonPositiveEpsilon { stratum: i + 2, value: e });
            }
        }
        let mut eps = vec![1.0];
        eps.extend_from_slice(epsilons);
        Ok(BoxNorm { group: group.clone(), eps, certificate: None })
    }

    pub fn group(&self) -> &CarnotGroup {
        &self.group
    }

    /// `ε₂, …, ε_s`.
    pub fn epsilons(&self) -> &[f64] {
        &self.eps[1..]
    }

    /// Weight of stratum `j` (1-based); 1 for the first stratum.
    pub fn epsilon(&self, j: usize) -> f64 {
        self.eps[j - 1]
    }

    pub fn certificate(&self) -> Option<&NormCertificate> {
        self.certificate.as_ref()
    }

    pub fn with_certificate(mut self, certificate: NormCertificate) -> Self {
        self.certificate = Some(certificate);
        self
    }

    pub fn norm(&self, p: &[f64]) -> f64 {
        self.norm_upto(p, self.group.step())
    }

    /// Norm built from strata `1..=upto` only.
    pub fn norm_upto(&self, p: &[f64], upto: usize) -> f64 {
        let mut best = 0.0f64;
        for j in 1..=upto {
            let block = &p[self.group.stratum_range(j)];
            let mag = libm::sqrt(block.iter().map(|x| x * x).sum::<f64>());
            let term = match j {
                1 => mag,
                2 => self.eps[1] * libm::sqrt(mag),
                3 => self.eps[2] * libm::cbrt(mag),
                _ => self.eps[j - 1] * libm::pow(mag, 1.0 / j as f64),
            };
            best = best.max(term);
        }
        best
    }

    /// Left-invariant distance `∥x⁻¹·y∥`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.norm(&self.group.left_quotient(x, y))
    }

    /// Radius of the smallest coordinate box around 0, per coordinate, that
    /// contains the closed ball of radius `r`.
    pub fn ball_box(&self, r: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.group.dim()];
        for j in 1..=self.group.step() {
            let side = libm::pow(r / self.eps[j - 1], j as f64);
            for x in &mut out[self.group.stratum_range(j)] {
                *x = side;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CalibrationOptions {
    /// Pairs in the final certificate.
    pub samples: usize,
    pub seed: u64,
    /// Pairs per trial during the per-stratum search.
    pub search_samples: usize,
    /// Certification rounds before giving up.
    pub max_rounds: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { samples: 100_000, seed: 0, search_samples: 20_000, max_rounds: 20 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CalibrationError {
    /// Triangle inequality still violated after `rounds` shrinks.
    Failed { epsilons: Vec<f64>, x: Vec<f64>, y: Vec<f64>, ratio: f64, rounds: usize },
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::Failed { epsilons, x, y, ratio, rounds } => write!(
                f,
                "calibration failed after {rounds} rounds (epsilons {epsilons:?}): \
                 ∥xy∥/(∥x∥+∥y∥) = {ratio} at x = {x:?}, y = {y:?}"
            ),
        }
    }
}

const TRIANGLE_SLACK: f64 = 1e-12;

fn random_pair<R: Rng>(group: &CarnotGroup, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let x = sample::mixed_scales(group, rng, 3.0);
    let mut y = sample::mixed_scales(group, rng, 3.0);
    match rng.gen_range(0..3) {
        0 => {}
        1 => {
            let t = libm::pow(10.0, rng.gen_range(-3.0..=3.0));
            group.dilate_in_place(t, &mut y);
        }
        _ => {
            // Nearly cancelling horizontal parts.
            let wobble = libm::pow(10.0, -rng.gen_range(0.0..=3.0));
            for i in 0..group.rank() {
                y[i] = -x[i] + wobble * y[i];
            }
        }
    }
    (x, y)
}

struct Worst {
    ratio: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    pi1: f64,
}

fn worst_ratio<R: Rng>(norm: &BoxNorm, upto: usize, pairs: usize, rng: &mut R) -> Worst {
    let group = norm.group();
    let mut worst = Worst { ratio: 0.0, x: Vec::new(), y: Vec::new(), pi1: 0.0 };
    let mut xy = group.identity();
    for _ in 0..pairs {
        let (x, y) = random_pair(group, rng);
        let nx = norm.norm_upto(&x, upto);
        let ny = norm.norm_upto(&y, upto);
        if nx + ny == 0.0 {
            continue;
        }
        group.mul_into(&x, &y, &mut xy);
        let d = norm.norm_upto(&xy, upto);
        let ratio = d / (nx + ny);
        // xy = (x⁻¹)⁻¹·y, so this is the π₁ quotient for the pair (x⁻¹, y).
        if d > 0.0 {
            let h = libm::sqrt(group.pi1(&xy).iter().map(|v| v * v).sum::<f64>());
            worst.pi1 = worst.pi1.max(h / d);
        }
        if ratio > worst.ratio {
            worst.ratio = ratio;
            worst.x = x;
            worst.y = y;
        }
    }
    worst
}

/// Searches `ε₂, …, ε_s` stratum by stratum (halving from 1, then bisecting
/// the last failing/passing bracket and backing off by 10%), then certifies
/// the triangle inequality on `samples` random pairs.
pub fn calibrate_box_norm(
    group: &CarnotGroup,
    options: &CalibrationOptions,
) -> Result<BoxNorm, CalibrationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let s = group.step();
    let mut eps = vec![1.0; s.saturating_sub(1)];
    for j in 2..=s {
        let passes = |eps: &[f64], rng: &mut ChaCha8Rng| {
            let norm = BoxNorm::new(group, eps).expect("positive epsilons");
            worst_ratio(&norm, j, options.search_samples, rng).ratio <= 1.0 + TRIANGLE_SLACK
        };
        if passes(&eps, &mut rng) {
            continue;
        }
        let mut hi = eps[j - 2];
        let mut lo = hi;
        for _ in 0..60 {
            lo *= 0.5;
            eps[j - 2] = lo;
            if passes(&eps, &mut rng) {
                break;
            }
            hi = lo;
        }
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            eps[j - 2] = mid;
            if passes(&eps, &mut rng) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        eps[j - 2] = 0.9 * lo;
    }

    let mut round = 0;
    loop {
        round += 1;
        let norm = BoxNorm::new(group, &eps).expect("positive epsilons");
        let worst = worst_ratio(&norm, s, options.samples, &mut rng);
        if worst.ratio <= 1.0 + TRIANGLE_SLACK {
            let certificate = NormCertificate {
                seed: options.seed,
                pairs: options.samples,
                worst_ratio: worst.ratio,
                pi1_lipschitz: worst.pi1,
                rounds: round,
            };
            return Ok(norm.with_certificate(certificate));
        }
        if round >= options.max_rounds {
            return Err(CalibrationError::Failed {
                epsilons: eps,
                x: worst.x,
                y: worst.y,
                ratio: worst.ratio,
                rounds: round,
            });
        }
        for e in &mut eps {
            *e *= 0.9;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn basic_values() {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        let n = BoxNorm::new(&g, &[0.5]).unwrap();
        assert_eq!(n.norm(&[0.0; 3]), 0.0);
        assert_eq!(n.norm(&[3.0, 4.0, 0.0]), 5.0);
        assert_eq!(n.norm(&[0.0, 0.0, 16.0]), 2.0);
        assert!(BoxNorm::new(&g, &[]).is_err());
        assert!(BoxNorm::new(&g, &[0.0]).is_err());
    }

    #[test]
    fn abelian_calibration_is_euclidean() {
        let g = CarnotGroup::new(catalog::euclidean(3)).unwrap();
        let opts = CalibrationOptions { samples: 2000, ..Default::default() };
        let n = calibrate_box_norm(&g, &opts).unwrap();
        assert!(n.epsilons().is_empty());
        assert_eq!(n.norm(&[1.0, 2.0, 2.0]), 3.0);
        assert!(n.certificate().unwrap().worst_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn a_too_large_epsilon_is_caught() {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        let n = BoxNorm::new(&g, &[50.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(worst_ratio(&n, 2, 20_000, &mut rng).ratio > 1.0);
    }
}
