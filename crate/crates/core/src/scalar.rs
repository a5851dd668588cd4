//! Numeric abstraction shared by the market, dispatch, learner and oracle code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the simulator can run on. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Tolerance used by feasibility and sign tests in the dispatch solver.
    fn solver_tol() -> Self;
}

impl Scalar for f64 {
    fn solver_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn solver_tol() -> Self {
        1e-5
    }
}
