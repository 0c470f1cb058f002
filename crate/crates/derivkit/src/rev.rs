//! Reverse-mode scalar recording onto a shared [`Tape`].
//!
//! A `Rev` is a value plus the tape node that produced it. Every overloaded
//! operation evaluates its value like plain `f64`, pushes one node holding
//! the local partials, and hands back a scalar pointing at that node.
//! Constants made through [`Scalar::constant`] are *detached*: they carry no
//! node and record nothing, since a constant can never receive an adjoint.
//! Use [`Rev::constant_on`] when an addressable leaf is wanted.
//!
//! A `Rev` is bound to one tape on one thread; mixing scalars from two tapes
//! in one operation is a usage error and panics.

use core::cell::RefCell;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::rules::{BinaryOp, UnaryOp};
use crate::scalar::{Scalar, ScalarKind};
use crate::tape::{NodeId, Op, Tape};

/// Reverse-mode scalar. `Copy`, so it moves through numeric code exactly
/// like a float; the tape reference inside is a shared borrow.
#[derive(Clone, Copy)]
pub struct Rev<'t> {
    value: f64,
    link: Option<(&'t RefCell<Tape>, NodeId)>,
}

impl<'t> Rev<'t> {
    /// Records a fresh input leaf on `tape` and registers it for VJP
    /// extraction.
    pub fn input(tape: &'t RefCell<Tape>, value: f64) -> Self {
        let node = tape.borrow_mut().record_input();
        Self {
            value,
            link: Some((tape, node)),
        }
    }

    /// Records `value` as a leaf with no parents (a tape-bound constant).
    pub fn constant_on(tape: &'t RefCell<Tape>, value: f64) -> Self {
        let node = tape.borrow_mut().record_constant();
        Self {
            value,
            link: Some((tape, node)),
        }
    }

    /// A constant bound to no tape.
    pub fn detached(value: f64) -> Self {
        Self { value, link: None }
    }

    /// The tape node this scalar points at, if any.
    pub fn node(&self) -> Option<NodeId> {
        self.link.map(|(_, node)| node)
    }

    #[inline]
    fn unary(self, op: UnaryOp) -> Self {
        let (value, d) = op.rule(self.value);
        let link = self.link.map(|(tape, node)| {
            let id = tape.borrow_mut().record(Op::Unary(op), &[node], &[d]);
            (tape, id)
        });
        Self { value, link }
    }

    #[inline]
    fn binary(self, rhs: Self, op: BinaryOp) -> Self {
        let (value, da, db) = op.rule(self.value, rhs.value);
        let link = match (self.link, rhs.link) {
            (Some((ta, ia)), Some((tb, ib))) => {
                assert!(
                    core::ptr::eq(ta, tb),
                    "operands were recorded on different tapes"
                );
                let id = ta
                    .borrow_mut()
                    .record(Op::Binary(op), &[ia, ib], &[da, db]);
                Some((ta, id))
            }
            // a detached side is a constant: it takes no adjoint, so only
            // the attached parent is recorded
            (Some((tape, ia)), None) => {
                let id = tape.borrow_mut().record(Op::Binary(op), &[ia], &[da]);
                Some((tape, id))
            }
            (None, Some((tape, ib))) => {
                let id = tape.borrow_mut().record(Op::Binary(op), &[ib], &[db]);
                Some((tape, id))
            }
            (None, None) => None,
        };
        Self { value, link }
    }
}

impl fmt::Debug for Rev<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.link {
            Some((_, node)) => write!(f, "Rev({} @ node {})", self.value, node),
            None => write!(f, "Rev({}, detached)", self.value),
        }
    }
}

impl PartialEq for Rev<'_> {
    /// Value channel only; tape state does not participate.
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for Rev<'_> {
    /// Value channel only; tape state does not participate.
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl Add for Rev<'_> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Add)
    }
}

impl Sub for Rev<'_> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Sub)
    }
}

impl Mul for Rev<'_> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Mul)
    }
}

impl Div for Rev<'_> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self.binary(rhs, BinaryOp::Div)
    }
}

impl Neg for Rev<'_> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(UnaryOp::Neg)
    }
}

impl Scalar for Rev<'_> {
    fn kind() -> ScalarKind {
        ScalarKind::Reverse
    }

    fn constant(v: f64) -> Self {
        Rev::detached(v)
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
