use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used by the polynomial and decomposition layers.
///
/// The default tolerances are stated for double precision and loosened for
/// `f32` so the same algorithms stay meaningful in single precision.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Relative distance below which two roots are considered equal.
    fn distinct_tol() -> Self;
    /// Negative probabilities of at most this magnitude are rounding dust.
    fn dust() -> Self;
    /// Allowed deviation of a total mass from one.
    fn mass_tol() -> Self;

    /// Converts an `f64` literal. Panics only if the literal is not representable at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    fn distinct_tol() -> Self {
        1e-9
    }
    fn dust() -> Self {
        1e-12
    }
    fn mass_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn distinct_tol() -> Self {
        1e-4
    }
    fn dust() -> Self {
        1e-6
    }
    fn mass_tol() -> Self {
        1e-5
    }
}
