//! The differentiable-scalar contract shared by every backend.

use core::fmt::{self, Debug};
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::math;

/// Runtime description of a scalar backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    /// Plain `f64` evaluation, no derivative state.
    PlainReal,
    /// Forward dual with a tangent block of the given width (at least 1).
    ForwardDual { width: usize },
    /// Reverse-mode scalar bound to a tape.
    Reverse,
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarKind::PlainReal => write!(f, "plain real"),
            ScalarKind::ForwardDual { width } => write!(f, "forward dual (width {width})"),
            ScalarKind::Reverse => write!(f, "reverse"),
        }
    }
}

/// A constant lift was given a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteError;

impl fmt::Display for NonFiniteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "constant value must be finite")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NonFiniteError {}

/// A scalar that evaluates like `f64` while optionally carrying derivative
/// state.
///
/// Write numeric code as `fn f<T: Scalar>(x: &[T]) -> Vec<T>` and it runs
/// unchanged under plain evaluation, forward mode, and reverse mode. The
/// value channel of every implementation performs exactly the same
/// double-precision operations in the same order as plain `f64`, so values
/// are bit-identical across backends.
///
/// Comparisons (`PartialEq`/`PartialOrd`) look at the value channel only and
/// never touch derivative state.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Which backend this type drives.
    fn kind() -> ScalarKind;

    /// Lift a plain value; its derivative is zero.
    fn constant(v: f64) -> Self;

    /// [`constant`](Self::constant) that rejects non-finite input.
    fn try_constant(v: f64) -> Result<Self, NonFiniteError> {
        if v.is_finite() {
            Ok(Self::constant(v))
        } else {
            Err(NonFiniteError)
        }
    }

    /// The value channel. Never perturbs derivative state.
    fn value(&self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;

    /// `self` raised to `exp`. The derivative rule is the `exp(b·ln a)` form,
    /// so a base that is not positive poisons the partials (the value still
    /// follows `f64::powf`).
    fn powf(self, exp: Self) -> Self;

    /// Smaller operand; ties pick `self` (and so does its derivative).
    fn min(self, other: Self) -> Self;

    /// Larger operand; ties pick `self` (and so does its derivative).
    fn max(self, other: Self) -> Self;
}

impl Scalar for f64 {
    fn kind() -> ScalarKind {
        ScalarKind::PlainReal
    }

    #[inline]
    fn constant(v: f64) -> Self {
        v
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn sin(self) -> Self {
        math::sin(self)
    }

    #[inline]
    fn cos(self) -> Self {
        math::cos(self)
    }

    #[inline]
    fn tan(self) -> Self {
        math::tan(self)
    }

    #[inline]
    fn exp(self) -> Self {
        math::exp(self)
    }

    #[inline]
    fn ln(self) -> Self {
        math::ln(self)
    }

    #[inline]
    fn sqrt(self) -> Self {
        math::sqrt(self)
    }

    #[inline]
    fn abs(self) -> Self {
        math::abs(self)
    }

    #[inline]
    fn powf(self, exp: Self) -> Self {
        math::powf(self, exp)
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        math::min(self, other)
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        math::max(self, other)
    }
}
