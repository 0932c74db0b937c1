//! Floating point abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the solvers are generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every constant in the crate goes through here.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A tolerance stated for `f64`, floored at a small multiple of this
    /// type's machine epsilon so the same code stays meaningful for `f32`.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(32.0))
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
