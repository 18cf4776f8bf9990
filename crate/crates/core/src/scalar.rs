//! Floating-point abstraction shared by every numerical routine in the crate.
//!
//! All samplers, matrix builders and metrics are written against [`Scalar`]
//! so the same code runs in `f32` or `f64`. Concrete aliases for `f64` live at
//! the crate root.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar usable by the samplers.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `f64` value has a (possibly rounded)
    /// representation in the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Lower bound applied to scale latents before they are inverted.
    fn scale_floor() -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn scale_floor() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    // 1e-12 inverts to 1e12, still finite in f32.
    #[inline]
    fn scale_floor() -> Self {
        1e-12
    }
}

/// Floors a positive scale so that its reciprocal stays finite.
#[inline]
pub fn floored<T: Scalar>(x: T) -> T {
    x.max(T::scale_floor())
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
