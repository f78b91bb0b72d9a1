//! Scalar abstraction shared by the solver and the market models.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the whole crate is generic over (`f32` or `f64`).
///
/// The tolerances are per type: single precision cannot resolve the
/// `1e-7` feasibility threshold used for `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for constraint satisfaction.
    fn feasibility_tol() -> Self;
    /// Distance from {0, 1} below which a binary counts as integral.
    fn integrality_tol() -> Self;
    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tol() -> Self;
    /// Reduced-cost / multiplier tolerance for optimality tests.
    fn optimality_tol() -> Self;

    /// Converts an `f64` literal; every `Real` can represent finite f64 values
    /// up to rounding.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn feasibility_tol() -> Self {
        1e-7
    }
    fn integrality_tol() -> Self {
        1e-6
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn optimality_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn feasibility_tol() -> Self {
        2e-4
    }
    fn integrality_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-5
    }
    fn optimality_tol() -> Self {
        1e-5
    }
}

/// Relative closeness with an absolute floor of one unit.
pub fn close_rel<T: Real>(a: T, b: T, rel: T) -> bool {
    (a - b).abs() <= rel * T::one().max(a.abs()).max(b.abs())
}
