//! Fragments: finitely sampled, partially defined 2-bi-Lipschitz curves.

use alloc::vec::Vec;
use core::fmt;

/// Consecutive samples further apart than this multiple of the median
/// spacing are separated by a gap in the domain.
pub const GAP_FACTOR: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub enum FragmentError {
    Empty,
    LengthMismatch { times: usize, points: usize },
    NonFinite { index: usize },
    NotIncreasing { index: usize },
    /// `d(γ(t_i), γ(t_j)) / |t_i − t_j|` left `[1/2, 2]`.
    NotBiLipschitz { i: usize, j: usize, ratio: f64 },
}

impl fmt::Display for FragmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentError::Empty => write!(f, "fragment has no samples"),
            FragmentError::LengthMismatch { times, points } => {
                write!(f, "{times} times but {points} points")
            }
            FragmentError::NonFinite { index } => write!(f, "sample time {index} is not finite"),
            FragmentError::NotIncreasing { index } => {
                write!(f, "sample times not strictly increasing at {index}")
            }
            FragmentError::NotBiLipschitz { i, j, ratio } => write!(
                f,
                "samples {i} and {j} have distance/time ratio {ratio}, outside [1/2, 2]"
            ),
        }
    }
}

/// Union of half-open mesh cells `[t_i, t_{i+1})` between consecutive
/// samples that are not separated by a gap.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    cells: Vec<(f64, f64)>,
    mesh: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl Domain {
    pub fn from_times(times: &[f64]) -> Self {
        let spacings: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let mesh = median(spacings.clone());
        let cells = times
            .windows(2)
            .filter(|w| w[1] - w[0] <= GAP_FACTOR * mesh)
            .map(|w| (w[0], w[1]))
            .collect();
        Domain { cells, mesh }
    }

    /// Median sample spacing.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn cells(&self) -> &[(f64, f64)] {
        &self.cells
    }

    /// Lebesgue measure of the domain inside `(a, b)`.
    pub fn measure_in(&self, a: f64, b: f64) -> f64 {
        let start = self.cells.partition_point(|c| c.1 <= a);
        let mut total = 0.0;
        for &(lo, hi) in &self.cells[start..] {
            if lo >= b {
                break;
            }
            total += hi.min(b) - lo.max(a);
        }
        total
    }

    /// Measure of `(a, b)` not covered by the domain, accumulated from the
    /// uncovered pieces (exactly zero when the domain covers the interval).
    pub fn missing_in(&self, a: f64, b: f64) -> f64 {
        let start = self.cells.partition_point(|c| c.1 <= a);
        let mut cursor = a;
        let mut missing = 0.0;
        for &(lo, hi) in &self.cells[start..] {
            if lo >= b {
                break;
            }
            if lo > cursor {
                missing += lo - cursor;
            }
            cursor = cursor.max(hi);
        }
        if cursor < b {
            missing += b - cursor;
        }
        missing
    }

    /// Whether consecutive samples `i` and `i+1` share a cell.
    pub fn joined(times: &[f64], i: usize, mesh: f64) -> bool {
        i + 1 < times.len() && times[i + 1] - times[i] <= GAP_FACTOR * mesh
    }
}

/// Fraction of `(t0 − r, t0 + r)` covered by the domain sampled at `times`.
pub fn density_fraction(times: &[f64], t0: f64, r: f64) -> f64 {
    1.0 - Domain::from_times(times).missing_in(t0 - r, t0 + r) / (2.0 * r)
}

/// A finitely sampled curve `γ: Dom(γ) → X`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment<P> {
    times: Vec<f64>,
    points: Vec<P>,
    domain: Domain,
}

impl<P> Fragment<P> {
    /// Validated fragment: strictly increasing times and the 2-bi-Lipschitz
    /// bound on every pair of samples, under the distance `dist`.
    pub fn new(
        times: Vec<f64>,
        points: Vec<P>,
        dist: impl Fn(&P, &P) -> f64,
    ) -> Result<Self, FragmentError> {
        let frag = Self::sampled(times, points)?;
        let n = frag.times.len();
        for i in 0..n {
            for j in i + 1..n {
                let dt = frag.times[j] - frag.times[i];
                let d = dist(&frag.points[i], &frag.points[j]);
                if !(0.5 * dt <= d && d <= 2.0 * dt) {
                    return Err(FragmentError::NotBiLipschitz { i, j, ratio: d / dt });
                }
            }
        }
        Ok(frag)
    }

    /// Sampled curve that only needs increasing times, e.g. the image of a
    /// fragment under a map.
    pub fn sampled(times: Vec<f64>, points: Vec<P>) -> Result<Self, FragmentError> {
        if times.is_empty() {
            return Err(FragmentError::Empty);
        }
        if times.len() != points.len() {
            return Err(FragmentError::LengthMismatch { times: times.len(), points: points.len() });
        }
        if let Some(index) = times.iter().position(|t| !t.is_finite()) {
            return Err(FragmentError::NonFinite { index });
        }
        if let Some(index) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(FragmentError::NotIncreasing { index: index + 1 });
        }
        let domain = Domain::from_times(&times);
        Ok(Fragment { times, points, domain })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn mesh(&self) -> f64 {
        self.domain.mesh
    }

    /// Index of the sample at time `t` (up to `1e-12` relative).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    /// Whether samples `i` and `i+1` lie in the same domain component.
    pub fn joined(&self, i: usize) -> bool {
        Domain::joined(&self.times, i, self.domain.mesh)
    }

    pub fn map<Q>(&self, f: impl Fn(&P) -> Q) -> Fragment<Q> {
        Fragment {
            times: self.times.clone(),
            points: self.points.iter().map(f).collect(),
            domain: self.domain.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn density_examples() {
        let mut times = grid(0.0, 0.4, 40);
        times.extend(grid(0.6, 1.0, 40));
        assert!((density_fraction(&times, 0.5, 0.5) - 0.8).abs() < 1e-12);
        let full = grid(0.0, 1.0, 1000);
        assert!((density_fraction(&full, 0.0, 0.01) - 0.5).abs() < 1e-12);
        let f = density_fraction(&full, 0.5, 0.1);
        assert_eq!(f, 1.0);
    }

    #[test]
    fn validation() {
        let abs = |a: &f64, b: &f64| (a - b).abs();
        assert!(Fragment::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], abs).is_ok());
        assert_eq!(
            Fragment::new(vec![0.0, 1.0, 2.0], vec![0.0, 3.0, 3.5], abs),
            Err(FragmentError::NotBiLipschitz { i: 0, j: 1, ratio: 3.0 })
        );
        assert_eq!(
            Fragment::new(vec![0.0, 0.0], vec![0.0, 1.0], abs),
            Err(FragmentError::NotIncreasing { index: 1 })
        );
        let f = Fragment::sampled(vec![0.0, 0.5, 1.0], vec![(); 3]).unwrap();
        assert_eq!(f.index_of(0.5), Some(1));
        assert_eq!(f.index_of(0.4), None);
    }
}
