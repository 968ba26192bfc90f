//! Scalar abstraction: all geometric and numeric code is generic over a
//! floating-point type implementing [`Real`]. Concrete aliases at the crate
//! root fix `f64` for the pipeline.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar: f32 or f64.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` constant into the scalar type.
#[inline]
pub fn cast<S: Real>(v: f64) -> S {
    S::from_f64(v).expect("finite f64 constant")
}
