//! Scalar abstraction for the numerical kernels.
//!
//! Every solver in this crate is written once, generically, and instantiated
//! at `f32` or `f64`. The trait collects the `num-traits` pieces the kernels
//! rely on plus the thread-safety bounds required for replicate-level
//! parallelism.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by all kernels.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + core::fmt::Debug
    + core::fmt::Display
    + core::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    ///
    /// Intended for literals and tolerances; conversion of a finite `f64`
    /// into `f32` saturates/rounds, which is acceptable for constants.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant must convert")
    }

    /// Lossy view as `f64`, used for diagnostics and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
