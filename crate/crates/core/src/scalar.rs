//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All tensors carry complex entries over a real floating-point type `T`;
//! real-field data simply keeps every imaginary part at zero.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Real floating-point type backing tensor entries: `f32` or `f64`.
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
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex entry type used throughout.
pub type C<T> = Complex<T>;

/// Number field a tensor or model lives over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn is_complex(self) -> bool {
        matches!(self, Field::Complex)
    }

    /// The smallest field containing both.
    pub fn join(self, other: Field) -> Field {
        if self.is_complex() || other.is_complex() {
            Field::Complex
        } else {
            Field::Real
        }
    }
}

impl Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

impl std::str::FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" | "r" | "R" => Ok(Field::Real),
            "complex" | "c" | "C" => Ok(Field::Complex),
            other => Err(format!("unknown field `{other}` (expected real|complex)")),
        }
    }
}

#[inline]
pub(crate) fn zero<T: Scalar>() -> C<T> {
    C::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn re<T: Scalar>(x: T) -> C<T> {
    C::new(x, T::zero())
}
