//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Concrete aliases for the common
//! instantiations live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the toolkit is generic over.
///
/// Tolerances throughout the crate are stated for `f64`; when instantiated
/// at `f32` they are widened to a small multiple of machine epsilon so the
/// checks stay meaningful (see [`spec_tol`]).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the active scalar type.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant representable in scalar type")
}

/// Converts the active scalar into `f64` (for reports and serialization).
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().expect("scalar representable as f64")
}

/// A tolerance stated for `f64`, floored at 4 ulp of the active type.
#[inline]
pub fn spec_tol<T: Real>(stated: f64) -> T {
    real::<T>(stated).max(T::epsilon() * real::<T>(4.0))
}
