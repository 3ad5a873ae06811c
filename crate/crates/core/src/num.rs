//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the physics is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `sin(x)/x` with the removable point at zero.
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// `atan(x)/x` with the removable point at zero.
pub fn atanc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(3.0) + x2 * x2 / T::lit(5.0)
    } else {
        x.atan() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_branches_agree() {
        for &x in &[0.99e-4_f64, 1.01e-4, -1.01e-4] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
            assert!((atanc(x) - x.atan() / x).abs() < 1e-15);
        }
        assert_eq!(sinc(0.0_f64), 1.0);
        assert_eq!(atanc(0.0_f32), 1.0);
    }
}
