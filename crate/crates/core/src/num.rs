//! Scalar abstraction shared by every scoring component.
//!
//! Language-model tables, scorer outputs, beam scores and error rates are all
//! generic over [`Real`], implemented for `f32` and `f64`. The crate root
//! exposes `f64` aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable for log-probabilities and scores.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + FromStr
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Real")
    }

    /// Lossy conversion to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log(Σ exp(x))`, stable for large magnitudes. Returns `-inf` for an
/// empty slice or when every entry is `-inf`.
pub fn log_sum_exp<F: Real>(xs: &[F]) -> F {
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return max;
    }
    if max == F::infinity() {
        return max;
    }
    let sum: F = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Subtracts the log-normalizer in place so that `exp` of the row sums to one.
pub fn log_normalize<F: Real>(row: &mut [F]) {
    let z = log_sum_exp(row);
    if z.is_finite() {
        for x in row.iter_mut() {
            *x -= z;
        }
    }
}

/// Converts a base-10 logarithm to a natural logarithm.
pub fn log10_to_ln<F: Real>(x: F) -> F {
    x * F::LN_10()
}
