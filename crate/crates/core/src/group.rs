//! Carnot groups in exponential coordinates of the first kind.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::algebra::{check_len, AlgebraError, DimensionMismatch, LieAlgebra, StratificationSpec};
use crate::bch::BchPlan;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupError {
    Dimension(DimensionMismatch),
    ZeroDilation,
}

impl fmt::Display for GroupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupError::Dimension(d) => write!(f, "{d}"),
            GroupError::ZeroDilation => write!(f, "dilation factor must be nonzero"),
        }
    }
}

impl From<DimensionMismatch> for GroupError {
    fn from(d: DimensionMismatch) -> Self {
        GroupError::Dimension(d)
    }
}

struct Inner {
    algebra: LieAlgebra,
    plan: BchPlan,
    weights: Vec<i32>,
}

/// A Carnot group with a compiled product. Cheap to clone and shareable
/// across threads. Points are plain coordinate slices of length `dim()`;
/// the zero vector is the identity.
#[derive(Clone)]
pub struct CarnotGroup {
    inner: Arc<Inner>,
}

impl fmt::Debug for CarnotGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CarnotGroup")
            .field("name", &self.name())
            .field("strata", &self.strata())
            .finish()
    }
}

impl PartialEq for CarnotGroup {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.algebra().spec() == other.algebra().spec()
    }
}

impl CarnotGroup {
    pub fn new(spec: StratificationSpec) -> Result<Self, AlgebraError> {
        Ok(Self::from_algebra(LieAlgebra::new(spec)?))
    }

    pub fn from_algebra(algebra: LieAlgebra) -> Self {
        let plan = BchPlan::compile(&algebra);
        let weights = (0..algebra.dim()).map(|i| algebra.stratum_of(i) as i32).collect();
        CarnotGroup { inner: Arc::new(Inner { algebra, plan, weights }) }
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.inner.algebra
    }

    pub fn name(&self) -> &str {
        self.algebra().name()
    }

    pub fn dim(&self) -> usize {
        self.algebra().dim()
    }

    /// Dimension of the horizontal stratum.
    pub fn rank(&self) -> usize {
        self.algebra().rank()
    }

    pub fn step(&self) -> usize {
        self.algebra().step()
    }

    pub fn strata(&self) -> &[usize] {
        self.algebra().strata()
    }

    pub fn homogeneous_dimension(&self) -> usize {
        self.algebra().homogeneous_dimension()
    }

    /// Coordinate range of stratum `j` (1-based).
    pub fn stratum_range(&self, j: usize) -> Range<usize> {
        self.algebra().stratum_range(j)
    }

    /// Degree of each coordinate under dilations.
    pub fn weights(&self) -> &[i32] {
        &self.inner.weights
    }

    pub fn identity(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    pub fn check(&self, p: &[f64]) -> Result<(), DimensionMismatch> {
        check_len(p, self.dim())
    }

    /// Point with horizontal part `v` and zero elsewhere.
    pub fn horizontal(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rank(), "horizontal vector has wrong length");
        let mut p = self.identity();
        p[..v.len()].copy_from_slice(v);
        p
    }

    /// Horizontal projection `π₁`.
    pub fn pi1<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[..self.rank()]
    }

    pub fn product(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>, DimensionMismatch> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.mul(p, q))
    }

    /// Product without length checks beyond a debug assertion.
    pub fn mul(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.mul_into(p, q, &mut out);
        out
    }

    #[inline]
    pub fn mul_into(&self, p: &[f64], q: &[f64], out: &mut [f64]) {
        debug_assert!(p.len() == self.dim() && q.len() == self.dim() && out.len() == self.dim());
        let mut inverse_pair = true;
        for i in 0..out.len() {
            out[i] = p[i] + q[i];
            inverse_pair &= out[i] == 0.0;
        }
        // p·p⁻¹ is the identity; evaluating the monomials would only add rounding.
        if !inverse_pair {
            self.inner.plan.accumulate(p, q, out);
        }
    }

    pub fn mul_generic<S: Scalar>(&self, p: &[S], q: &[S]) -> Vec<S> {
        let mut out: Vec<S> = p.iter().zip(q).map(|(a, b)| a.clone() + b.clone()).collect();
        self.inner.plan.accumulate_generic(p, q, &mut out);
        out
    }

    /// The nonlinear part `𝒬(p, q) = p·q − p − q`.
    pub fn bch_correction<S: Scalar>(&self, p: &[S], q: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim()];
        self.inner.plan.accumulate_generic(p, q, &mut out);
        out
    }

    /// `x⁻¹·y`.
    pub fn left_quotient(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let xi = self.inverse(x);
        self.mul(&xi, y)
    }

    /// Componentwise bound on `|p·q|` from bounds on `|p|` and `|q|`.
    pub fn product_bound(&self, p_abs: &[f64], q_abs: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = p_abs.iter().zip(q_abs).map(|(a, b)| a + b).collect();
        self.inner.plan.accumulate_abs(p_abs, q_abs, &mut out);
        out
    }

    pub fn inverse(&self, p: &[f64]) -> Vec<f64> {
        p.iter().map(|x| -x).collect()
    }

    pub fn dilate(&self, lambda: f64, p: &[f64]) -> Result<Vec<f64>, GroupError> {
        if lambda == 0.0 {
            return Err(GroupError::ZeroDilation);
        }
        self.check(p)?;
        let mut out = p.to_vec();
        self.dilate_in_place(lambda, &mut out);
        Ok(out)
    }

    /// `δ_λ` in place. `λ = 0` collapses to the identity.
    pub fn dilate_in_place(&self, lambda: f64, p: &mut [f64]) {
        let mut factor = 1.0;
        for j in 1..=self.step() {
            factor *= lambda;
            for x in &mut p[self.stratum_range(j)] {
                *x *= factor;
            }
        }
    }

    pub fn dilate_generic<S: Scalar>(&self, lambda: &S, p: &[S]) -> Vec<S> {
        let mut out = p.to_vec();
        let mut factor = S::one();
        for j in 1..=self.step() {
            factor = factor * lambda.clone();
            for x in &mut out[self.stratum_range(j)] {
                *x = x.clone() * factor.clone();
            }
        }
        out
    }

    /// Product of a sequence of points, left to right.
    pub fn product_of<'a>(&self, points: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
        let mut acc = self.identity();
        let mut tmp = self.identity();
        for p in points {
            self.mul_into(&acc, p, &mut tmp);
            core::mem::swap(&mut acc, &mut tmp);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn heisenberg_examples() {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        assert_eq!(g.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), vec![1.0, 1.0, 0.5]);
        let p = [0.3, -0.7, 2.0];
        assert_eq!(g.mul(&p, &g.identity()), p.to_vec());
        assert_eq!(g.inverse(&[1.0, 2.0, 3.0]), vec![-1.0, -2.0, -3.0]);
        assert_eq!(g.mul(&p, &g.inverse(&p)), vec![0.0; 3]);
        let c = g.product_of([
            &[1.0, 0.0, 0.0][..],
            &[0.0, 1.0, 0.0],
            &[-1.0, 0.0, 0.0],
            &[0.0, -1.0, 0.0],
        ]);
        assert_eq!(c, vec![0.0, 0.0, 1.0]);
        assert_eq!(g.dilate(2.0, &[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 2.0, 4.0]);
        assert_eq!(g.dilate(0.0, &p), Err(GroupError::ZeroDilation));
        assert!(g.product(&[1.0], &p).is_err());
    }
}
