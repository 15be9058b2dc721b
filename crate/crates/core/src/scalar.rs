use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive};

/// Real scalar usable by the dense state types.
///
/// Implemented for `f32` and `f64`. The decision procedures run on `f64`
/// because their tolerances sit below `f32` resolution.
pub trait Real:
    RealField
    + Float
    + FromPrimitive
    + Copy
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
