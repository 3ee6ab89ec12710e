//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rustfft::FftNum;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Values outside the range of `Self`
    /// saturate to infinity.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Unit-mean exponential draw.
    fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Standard normal draw.
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::lit(0.5)
    }
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $f
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$f>()
            }

            #[inline]
            fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <Exp1 as Distribution<$f>>::sample(&Exp1, rng)
            }

            #[inline]
            fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <StandardNormal as Distribution<$f>>::sample(&StandardNormal, rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Folds an angle into `(-π, π]`.
pub fn fold_phase<T: Real>(x: T) -> T {
    let tau = T::TAU();
    let r = x - tau * (x / tau).floor();
    if r > T::PI() {
        r - tau
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_phase_range() {
        let pi = std::f64::consts::PI;
        assert_eq!(fold_phase(pi), pi);
        assert!((fold_phase(-pi) - pi).abs() < 1e-12);
        assert!((fold_phase(3.0 * pi) - pi).abs() < 1e-12);
        assert!((fold_phase(0.25) - 0.25).abs() < 1e-15);
        assert!((fold_phase(-7.0) - (-7.0 + 2.0 * pi)).abs() < 1e-12);
        for k in -50..50 {
            let y = fold_phase(0.37 * k as f64);
            assert!(y > -pi && y <= pi);
        }
    }

    #[test]
    fn literal_conversion_f32() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(f32::half().as_f64(), 0.5);
    }
}
