//! Forward-mode dual scalar with a compile-time tangent width.
//!
//! `Dual<N>` carries `N` tangent lanes next to its value, so one evaluation
//! propagates `N` Jacobian-vector products at once. Lane arithmetic is plain
//! element-wise work over a fixed-size array, which the compiler is free to
//! vectorize; the contract is the width semantics, not an instruction set.
//! Each lane evolves exactly as a width-1 dual would, so Jacobians are
//! bit-identical across widths.

use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::rules::{BinaryOp, UnaryOp};
use crate::scalar::{Scalar, ScalarKind};

/// Value plus a width-`N` tangent block.
#[derive(Debug, Clone, Copy)]
pub struct Dual<const N: usize> {
    value: f64,
    tangent: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn new(value: f64, tangent: [f64; N]) -> Self {
        const { assert!(N >= 1, "tangent width must be at least 1") }
        Self { value, tangent }
    }

    /// A value with zero tangent.
    pub fn constant(value: f64) -> Self {
        Self::new(value, [0.0; N])
    }

    /// An input seeded with a full tangent direction; downstream computation
    /// carries the JVPs for these seed directions.
    pub fn seeded(value: f64, direction: [f64; N]) -> Self {
        Self::new(value, direction)
    }

    /// An input driving JVP lane `lane` (one-hot tangent).
    ///
    /// Panics if `lane >= N`.
    pub fn variable(value: f64, lane: usize) -> Self {
        let mut tangent = [0.0; N];
        tangent[lane] = 1.0;
        Self::new(value, tangent)
    }

    pub fn tangent(&self) -> &[f64; N] {
        &self.tangent
    }

    pub fn tangent_mut(&mut self) -> &mut [f64; N] {
        &mut self.tangent
    }

    #[inline]
    fn unary(self, op: UnaryOp) -> Self {
        let (value, d) = op.rule(self.value);
        let mut tangent = self.tangent;
        for t in &mut tangent {
            *t *= d;
        }
        Self { value, tangent }
    }

    #[inline]
    fn binary(self, rhs: Self, op: BinaryOp) -> Self {
        let (value, da, db) = op.rule(self.value, rhs.value);
        let mut tangent = [0.0; N];
        for ((t, &ta), &tb) in tangent.iter_mut().zip(&self.tangent).zip(&rhs.tangent) {
            *t = da * ta + db * tb;
        }
        Self { value, tangent }
    }
}

impl<const N: usize> PartialEq for Dual<N> {
    /// Value channel only; tangents do not participate.
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<const N: usize> PartialOrd for Dual<N> {
    /// Value channel only; tangents do not participate.
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Add)
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Sub)
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Mul)
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Div)
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(UnaryOp::Neg)
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn kind() -> ScalarKind {
        ScalarKind::ForwardDual { width: N }
    }

    fn constant(v: f64) -> Self {
        Dual::constant(v)
    }

    fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    fn sin(self) -> Self {
        self.unary(UnaryOp::Sin)
    }

    #[inline]
    fn cos(self) -> Self {
        self.unary(UnaryOp::Cos)
    }

    #[inline]
    fn tan(self) -> Self {
        self.unary(UnaryOp::Tan)
    }

    #[inline]
    fn exp(self) -> Self {
        self.unary(UnaryOp::Exp)
    }

    #[inline]
    fn ln(self) -> Self {
        self.unary(UnaryOp::Ln)
    }

    #[inline]
    fn sqrt(self) -> Self {
        self.unary(UnaryOp::Sqrt)
    }

    #[inline]
    fn abs(self) -> Self {
        self.unary(UnaryOp::Abs)
    }

    #[inline]
    fn powf(self, exp: Self) -> Self {
        self.binary(exp, BinaryOp::Pow)
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        self.binary(other, BinaryOp::Min)
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        self.binary(other, BinaryOp::Max)
    }
}
