//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating-point type implementing [`Scalar`].

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for `from_f64(x).unwrap()`; panics only on exotic values
    /// that do not fit the type, which never occur for the constants used here.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    /// `self` as `f64`, for diagnostics and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Free-function form of [`Scalar::lit`], handy in long expressions.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}
