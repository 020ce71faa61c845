//! Scalar abstraction for the solver core.
//!
//! Everything numerical is generic over [`Scalar`], which is any IEEE float
//! with the transcendental functions the contour construction needs. Concrete
//! aliases for the `f64` instantiations live at the crate root.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

/// Floating-point scalar type the solvers work over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;

    fn from_usize(n: usize) -> Self;

    /// Round-trip to `f64` for reporting (error messages, CSV output).
    fn to_f64(self) -> f64;
}

macro_rules! impl_scalar {
    ($($t:ty),*) => {
        $(impl Scalar for $t {
            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn from_usize(n: usize) -> Self {
                n as $t
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
        })*
    };
}

impl_scalar!(f32, f64);

/// Magnitude below which a divisor or pivot is treated as singular.
///
/// 1e-300 in f64; falls back to the type's smallest positive normal where
/// 1e-300 underflows (f32).
pub(crate) fn pivot_floor<F: Scalar>() -> F {
    let t = F::from_f64(1e-300);
    if t > F::zero() {
        t
    } else {
        F::min_positive_value()
    }
}
