//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type used for embedding coordinates and all derived statistics.
///
/// Implemented for `f32` and `f64`. Serialized artifacts always carry `f64`
/// values; conversions go through [`Scalar::of`] and [`Scalar::to_f64_lossy`].
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Smallest positive variance allowed before taking a logarithm.
    fn variance_floor_min() -> Self;

    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::of(std::f64::consts::TAU)
    }
}

impl Scalar for f32 {
    fn variance_floor_min() -> Self {
        f32::MIN_POSITIVE
    }
}

impl Scalar for f64 {
    fn variance_floor_min() -> Self {
        1e-300
    }
}
