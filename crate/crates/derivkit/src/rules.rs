//! The derivative rule table: every primitive operation together with its
//! value and analytic local partials.
//!
//! Both the forward duals and the reverse tape consume this one table, so a
//! rule fixed here is fixed for every backend. Values follow host IEEE 754
//! semantics: an operand outside an operation's domain yields NaN (or an
//! infinity) rather than an error, and the non-finite result is flagged at
//! the harness level.

use crate::math;

/// Unary primitive operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Neg,
    Abs,
}

/// Binary primitive operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

impl UnaryOp {
    /// Value channel only.
    #[inline]
    pub fn eval(self, a: f64) -> f64 {
        self.rule(a).0
    }

    /// Returns `(value, d(value)/d(a))` at `a`.
    ///
    /// `Abs` at exactly zero uses subgradient 0 so that runs stay
    /// deterministic.
    #[inline]
    pub fn rule(self, a: f64) -> (f64, f64) {
        match self {
            UnaryOp::Sin => (math::sin(a), math::cos(a)),
            UnaryOp::Cos => (math::cos(a), -math::sin(a)),
            UnaryOp::Tan => {
                let v = math::tan(a);
                // sec^2 = 1 + tan^2 reuses the single trig evaluation
                (v, 1.0 + v * v)
            }
            UnaryOp::Exp => {
                let v = math::exp(a);
                (v, v)
            }
            UnaryOp::Ln => (math::ln(a), 1.0 / a),
            UnaryOp::Sqrt => {
                let v = math::sqrt(a);
                // negative a: v is NaN and so is the partial
                (v, 1.0 / (2.0 * v))
            }
            UnaryOp::Neg => (-a, -1.0),
            UnaryOp::Abs => {
                let d = if a.is_nan() {
                    a
                } else if a > 0.0 {
                    1.0
                } else if a < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                (math::abs(a), d)
            }
        }
    }
}

impl BinaryOp {
    /// Value channel only.
    #[inline]
    pub fn eval(self, a: f64, b: f64) -> f64 {
        self.rule(a, b).0
    }

    /// Returns `(value, d/da, d/db)` at `(a, b)`.
    ///
    /// `Pow` uses the `exp(b·ln a)` partials and therefore needs `a > 0`
    /// whenever the exponent carries derivative state; `Min`/`Max` ties
    /// assign the whole partial to the first operand.
    #[inline]
    pub fn rule(self, a: f64, b: f64) -> (f64, f64, f64) {
        match self {
            BinaryOp::Add => (a + b, 1.0, 1.0),
            BinaryOp::Sub => (a - b, 1.0, -1.0),
            BinaryOp::Mul => (a * b, b, a),
            BinaryOp::Div => (a / b, 1.0 / b, -a / (b * b)),
            BinaryOp::Pow => {
                let v = math::powf(a, b);
                (v, b * math::powf(a, b - 1.0), v * math::ln(a))
            }
            BinaryOp::Min => {
                if a <= b || b.is_nan() {
                    (a, 1.0, 0.0)
                } else {
                    (b, 0.0, 1.0)
                }
            }
            BinaryOp::Max => {
                if a >= b || b.is_nan() {
                    (a, 1.0, 0.0)
                } else {
                    (b, 0.0, 1.0)
                }
            }
        }
    }
}
