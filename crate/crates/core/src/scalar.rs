//! Scalar abstraction: every numerical routine in this crate is generic over
//! [`Real`], instantiated in practice with `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the library is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Into<f64> + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` literal into the working scalar type.
///
/// Panics only if the target type cannot represent ordinary finite values,
/// which cannot happen for `f32`/`f64`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must convert to the scalar type")
}

/// An internal tolerance chosen for double precision, floored at a few
/// hundred ulp so narrower scalar types get a correspondingly looser but
/// still reachable target.
#[inline]
pub(crate) fn internal_tol<T: Real>(double_precision_target: f64) -> T {
    real::<T>(double_precision_target).max(T::epsilon() * real::<T>(256.0))
}
