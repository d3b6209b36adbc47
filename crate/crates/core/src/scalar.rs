//! Field abstraction shared by the simplex and max-flow solvers so that each
//! can run on `f64` (with tolerances) or on exact rationals.

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Strictly positive beyond the type's tolerance.
    fn is_pos(&self) -> bool;
    /// Zero up to the type's tolerance.
    fn is_negligible(&self) -> bool;
    /// Exact for rationals (every finite double is a dyadic rational).
    fn from_float(x: f64) -> Self;
    fn as_float(&self) -> f64;

    fn is_neg(&self) -> bool {
        (-self.clone()).is_pos()
    }
}

/// Pivot/sign tolerance used for floating-point arithmetic.
pub const F64_TOL: f64 = 1e-12;

impl Scalar for f64 {
    fn is_pos(&self) -> bool {
        *self > F64_TOL
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= F64_TOL
    }
    fn from_float(x: f64) -> Self {
        x
    }
    fn as_float(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn from_float(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite value")
    }
    fn as_float(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}
