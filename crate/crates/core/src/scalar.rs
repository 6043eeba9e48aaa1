//! Scalar abstraction for the probability math.
//!
//! Everything numeric in the alignment / revision / decoding path is generic
//! over a floating-point scalar so the same code runs on `f32` posteriors as
//! they arrive from disk and on `f64` when oracle-level precision is needed.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and LM scores.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    /// Lossless widening to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Tolerance for "this row already sums to one" checks, scaled so that a
    /// freshly renormalized row of `v` entries always passes. Renormalizing a
    /// row that passes is a no-op, which keeps normalization idempotent at
    /// the bit level.
    fn row_sum_slack(v: usize) -> Self {
        let floor = Self::from_f64_lossy(1e-9);
        let eps = Self::epsilon() * Self::from_usize(8 * v.max(1)).expect("small usize");
        floor.max(eps)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable log(exp(a) + exp(b)).
pub fn log_sum_exp2<S: Scalar>(a: S, b: S) -> S {
    if a == S::neg_infinity() {
        return b;
    }
    if b == S::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
