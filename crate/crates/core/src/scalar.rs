//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the analytic code is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `Real` can represent (a rounding of) any finite `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Distance from `x` to the nearest integer, `min_m |x - m|`, in `[0, 1/2]`.
#[inline]
pub fn dist_to_int<T: Real>(x: T) -> T {
    (x - x.round()).abs()
}

/// Signed fractional offset of `x` from its nearest integer, in `[-1/2, 1/2]`.
#[inline]
pub fn centered_frac<T: Real>(x: T) -> T {
    x - x.round()
}

const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52

/// `dist_to_int` for `f64` without a libm call in the hot counting loop.
///
/// For `|x| < 2^51` adding and subtracting `1.5 * 2^52` rounds to the nearest
/// integer (ties to even, which does not change the distance).
#[inline(always)]
pub(crate) fn dist_to_int_fast(x: f64) -> f64 {
    if x.abs() < 2_251_799_813_685_248.0 {
        let r = (x + ROUND_MAGIC) - ROUND_MAGIC;
        (x - r).abs()
    } else {
        (x - x.round()).abs()
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}
