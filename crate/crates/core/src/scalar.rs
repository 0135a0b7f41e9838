//! Floating-point abstraction shared by every cost and solver routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the cost model is evaluated in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal. Every literal used by this crate is representable in `f32`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute slack used when comparing objective values for ties.
    fn tie_tolerance() -> Self {
        Self::of(1e-9).max(Self::epsilon() * Self::of(64.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
