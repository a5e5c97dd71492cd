//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::{Complex, RealField};
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the library can be instantiated with (`f32` or `f64`).
///
/// Complex amplitudes are `Complex<T>`; linear algebra goes through `nalgebra`, so only
/// `RealField` methods are used on values of this type.
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal; every value used in the crate is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Validation tolerance: `base` for double precision, loosened to a few thousand
    /// ulps for narrower types.
    #[inline]
    fn tol(base: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(1e3);
        let base = Self::lit(base);
        if base > floor {
            base
        } else {
            floor
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

#[cfg(test)]
pub(crate) fn cx<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}
