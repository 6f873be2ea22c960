use nalgebra::RealField;
use num_traits::{FromPrimitive, NumCast};
use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar type the core numerics are generic over.
///
/// `nalgebra::RealField` supplies the arithmetic surface, num-traits the
/// conversions. Implemented for `f32` and `f64`.
pub trait Scalar: RealField + FromPrimitive + NumCast + Copy + Send + Sync {
    /// One standard-normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn is_finite_scalar(self) -> bool;

    /// Conversion from `f64`, for constants known to be representable.
    fn cst(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
}
