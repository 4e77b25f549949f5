//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Largest absolute value of a slice (0 for an empty slice).
pub fn sup_norm<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Largest absolute difference between two slices of equal length.
pub fn sup_diff<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}
