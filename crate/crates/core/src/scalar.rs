//! Scalar fields the group law can be evaluated over.
//!
//! `f64` is the working type. [`Exact`] (arbitrary precision rationals) is
//! used where a check has to see through rounding, e.g. associativity
//! defects measured with a homogeneous norm, whose `1/s` root turns an ulp
//! in the top stratum into a visible error.

use core::fmt::Debug;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Arbitrary precision rational.
pub type Exact = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Converts a finite float. Exact for [`Exact`].
    fn from_f64(x: f64) -> Self;
    fn from_exact(x: &Exact) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_exact(x: &Exact) -> Self {
        ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for Exact {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("non-finite value cannot be made exact")
    }
    fn from_exact(x: &Exact) -> Self {
        x.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Small exact rational used while compiling the BCH plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Ratio {
    pub num: i128,
    pub den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Ratio {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn add(self, other: Ratio) -> Ratio {
        Ratio::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }

    #[cfg(test)]
    pub fn mul(self, other: Ratio) -> Ratio {
        Ratio::new(self.num * other.num, self.den * other.den)
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn to_exact(self) -> Exact {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_normalises_sign_and_gcd() {
        let r = Ratio::new(6, -8);
        assert_eq!(r, Ratio { num: -3, den: 4 });
        assert_eq!(Ratio::new(1, 2).add(Ratio::new(1, 3)), Ratio::new(5, 6));
        assert_eq!(Ratio::new(2, 3).mul(Ratio::new(3, 4)), Ratio::new(1, 2));
    }

    #[test]
    fn exact_round_trips_floats() {
        for x in [0.0, 1.5, -0.1, 1e-30, 12345.678] {
            assert_eq!(Scalar::to_f64(&<Exact as Scalar>::from_f64(x)), x);
        }
    }
}
