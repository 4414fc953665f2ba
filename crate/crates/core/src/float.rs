//! Floating-point precision used for edge weights.

use std::fmt::Debug;
use std::str::FromStr;

use num_complex::{Complex, Complex64};
use num_traits::{Float, FloatConst};

/// Scalar type of edge weights. Layer coefficients are always `f64`.
pub trait EdgeFloat: Float + FloatConst + Default + Debug + Send + Sync + 'static {
    const NAME: &'static str;

    fn narrow(x: f64) -> Self;
    fn widen(self) -> f64;
}

impl EdgeFloat for f32 {
    const NAME: &'static str = "single";

    #[inline]
    fn narrow(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn widen(self) -> f64 {
        self as f64
    }
}

impl EdgeFloat for f64 {
    const NAME: &'static str = "double";

    #[inline]
    fn narrow(x: f64) -> Self {
        x
    }

    #[inline]
    fn widen(self) -> f64 {
        self
    }
}

#[inline]
pub(crate) fn widen<T: EdgeFloat>(c: Complex<T>) -> Complex64 {
    Complex64::new(c.re.widen(), c.im.widen())
}

#[inline]
pub(crate) fn narrow<T: EdgeFloat>(c: Complex64) -> Complex<T> {
    Complex::new(T::narrow(c.re), T::narrow(c.im))
}

/// Edge-weight precision selectable at run time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Precision {
    #[default]
    Single,
    Double,
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision `{other}` (expected single or double)")),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::Single => "single",
            Precision::Double => "double",
        })
    }
}
