use std::fmt;

/// Floating-point scalar the geometric core is generic over: f32 or f64.
pub trait Scalar:
    num_traits::Float + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Conversion from an f64 constant.
    fn from_f64(v: f64) -> Self {
        num_traits::NumCast::from(v).expect("constant representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
