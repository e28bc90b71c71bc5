//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the geometry and metric code is generic over: `f32` or `f64`.
///
/// `RealField` supplies the linear algebra (SVD, symmetric eigen) and the
/// num-traits conversions move constants and reports in and out.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Default
{
    /// Converts an `f64` literal. Lossy for `f32`, exact for `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count fits the scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn is_finite_value(self) -> bool {
        self.as_f64().is_finite()
    }

    /// Tolerance used by invariant checks that are stated as 1e-9 for `f64`.
    /// Scaled up for narrower types so `f32` poses are not rejected outright.
    #[inline]
    fn invariant_tol() -> Self {
        let eps = Self::default_epsilon();
        let scaled = eps * Self::lit(100.0);
        if scaled > Self::lit(1e-9) {
            scaled
        } else {
            Self::lit(1e-9)
        }
    }

    /// Largest invariant violation that is repaired by projection instead of rejected.
    #[inline]
    fn repair_tol() -> Self {
        let eps = Self::default_epsilon();
        let scaled = eps * Self::lit(1000.0);
        if scaled > Self::lit(1e-6) {
            scaled
        } else {
            Self::lit(1e-6)
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Compensated (Kahan) accumulator. Summation order is the caller's iteration
/// order, so identical inputs give bit-identical results.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum<T: Scalar> {
    sum: T,
    carry: T,
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}
