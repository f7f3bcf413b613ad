use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Arithmetic used by the simplex core. Float comparisons take a tolerance;
/// the exact implementation ignores it.
pub trait Scalar: Clone + Debug + PartialOrd + Send + Sync {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// `self > tol`.
    fn pos(&self, tol: f64) -> bool;
    /// `self < -tol`.
    fn neg_tol(&self, tol: f64) -> bool;
    /// `self -= a * b`, flushing float noise to zero.
    fn sub_mul(&mut self, a: &Self, b: &Self);
}

const FLUSH: f64 = 1e-13;

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn pos(&self, tol: f64) -> bool {
        *self > tol
    }
    fn neg_tol(&self, tol: f64) -> bool {
        *self < -tol
    }
    #[inline]
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
        if self.abs() < FLUSH {
            *self = 0.0;
        }
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite coefficient")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn pos(&self, _tol: f64) -> bool {
        self.is_positive()
    }
    fn neg_tol(&self, _tol: f64) -> bool {
        self.is_negative()
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        if !Zero::is_zero(a) && !Zero::is_zero(b) {
            *self -= a * b;
        }
    }
}
