//! Function-level derivative computation: one interface, four
//! interchangeable backends.
//!
//! A [`DifferentiableFunction`] is numeric code generic over [`Scalar`]; a
//! [`DerivativeMethod`] picks how its dense Jacobian is assembled:
//!
//! * finite differencing — `n + 1` plain evaluations,
//! * forward mode — `n` width-1 dual evaluations, one Jacobian column each,
//! * batched forward mode — `ceil(n / N)` width-`N` dual evaluations,
//! * reverse mode — 1 recorded evaluation plus `m` tape sweeps, one Jacobian
//!   row each.
//!
//! [`DifferentiableBlock`] bundles a function with a method and owns the
//! scratch state (tape, sweep buffer, perturbation buffer) so repeated
//! derivative calls reuse storage.

use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::str::FromStr;

use crate::dual::Dual;
use crate::linalg::DenseMatrix;
use crate::rev::Rev;
use crate::scalar::{Scalar, ScalarKind};
use crate::tape::{AdjointVector, NodeId, Tape};

/// A computable, differentiable function: `n` inputs, `m` outputs, evaluable
/// over any scalar backend.
///
/// Implementations must return exactly `num_outputs` values for any input
/// slice of length `num_inputs`, for every scalar type, and must not branch
/// on the scalar kind. Both arities must be at least 1.
pub trait DifferentiableFunction {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    fn call<T: Scalar>(&self, inputs: &[T]) -> Vec<T>;
}

impl<F: DifferentiableFunction + ?Sized> DifferentiableFunction for &F {
    fn num_inputs(&self) -> usize {
        (**self).num_inputs()
    }

    fn num_outputs(&self) -> usize {
        (**self).num_outputs()
    }

    fn call<T: Scalar>(&self, inputs: &[T]) -> Vec<T> {
        (**self).call(inputs)
    }
}

/// Widest supported tangent block for [`DerivativeMethod::ForwardAdMulti`].
pub const MAX_MULTI_WIDTH: usize = 64;

/// Per-coordinate forward-difference step scale: 2⁻²⁶ (the square root of
/// the `f64` machine epsilon), multiplied by `max(1, |x_j|)`.
pub const FD_STEP_SCALE: f64 = 1.0 / 67_108_864.0;

/// How a Jacobian gets assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMethod {
    /// Forward differences; `step: None` uses the scaled default
    /// [`FD_STEP_SCALE`]`·max(1, |x_j|)` per coordinate.
    FiniteDifferencing { step: Option<f64> },
    /// Single-tangent forward mode.
    ForwardAd,
    /// Multi-tangent forward mode with `width` lanes per pass
    /// (1 ..= [`MAX_MULTI_WIDTH`]).
    ForwardAdMulti { width: usize },
    /// Tape-based reverse mode.
    ReverseAd,
}

impl DerivativeMethod {
    /// Shorthand for the default finite-differencing method.
    pub fn fd() -> Self {
        DerivativeMethod::FiniteDifferencing { step: None }
    }

    /// The scalar backend this method evaluates the function with.
    pub fn scalar_kind(&self) -> ScalarKind {
        match self {
            DerivativeMethod::FiniteDifferencing { .. } => ScalarKind::PlainReal,
            DerivativeMethod::ForwardAd => ScalarKind::ForwardDual { width: 1 },
            DerivativeMethod::ForwardAdMulti { width } => {
                ScalarKind::ForwardDual { width: *width }
            }
            DerivativeMethod::ReverseAd => ScalarKind::Reverse,
        }
    }

    /// Exact function evaluations one derivative call performs for a
    /// function of `n` inputs.
    pub fn evaluations_for(&self, n: usize) -> usize {
        match self {
            DerivativeMethod::FiniteDifferencing { .. } => n + 1,
            DerivativeMethod::ForwardAd => n,
            DerivativeMethod::ForwardAdMulti { width } => n.div_ceil(*width),
            DerivativeMethod::ReverseAd => 1,
        }
    }

    fn validate(&self) -> Result<(), EngineError> {
        match *self {
            DerivativeMethod::FiniteDifferencing { step: Some(h) } if !(h > 0.0 && h.is_finite()) => {
                Err(EngineError::NonPositiveStep { step: h })
            }
            DerivativeMethod::ForwardAdMulti { width } if !(1..=MAX_MULTI_WIDTH).contains(&width) => {
                Err(EngineError::UnsupportedWidth { width })
            }
            _ => Ok(()),
        }
    }
}

/// Canonical method tokens: `fd`, `forward`, `forward-multi:<N>`, `reverse`.
impl fmt::Display for DerivativeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivativeMethod::FiniteDifferencing { .. } => write!(f, "fd"),
            DerivativeMethod::ForwardAd => write!(f, "forward"),
            DerivativeMethod::ForwardAdMulti { width } => write!(f, "forward-multi:{width}"),
            DerivativeMethod::ReverseAd => write!(f, "reverse"),
        }
    }
}

/// Failed to parse a [`DerivativeMethod`] token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodParseError {
    token: String,
}

impl fmt::Display for MethodParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown derivative method `{}` (expected fd, forward, forward-multi:<N>, or reverse)",
            self.token
        )
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MethodParseError {}

impl FromStr for DerivativeMethod {
    type Err = MethodParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || MethodParseError {
            token: String::from(s),
        };
        match s {
            "fd" => Ok(DerivativeMethod::fd()),
            "forward" => Ok(DerivativeMethod::ForwardAd),
            "reverse" => Ok(DerivativeMethod::ReverseAd),
            _ => {
                let width = s.strip_prefix("forward-multi:").ok_or_else(err)?;
                let width: usize = width.parse().map_err(|_| err())?;
                Ok(DerivativeMethod::ForwardAdMulti { width })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    /// Input slice length does not match the function arity.
    ArityMismatch { expected: usize, got: usize },
    /// Multi-forward width outside `1 ..= MAX_MULTI_WIDTH`.
    UnsupportedWidth { width: usize },
    /// Finite-difference step must be positive and finite.
    NonPositiveStep { step: f64 },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::ArityMismatch { expected, got } => {
                write!(f, "arity mismatch: expected {expected} inputs, got {got}")
            }
            EngineError::UnsupportedWidth { width } => write!(
                f,
                "unsupported tangent width {width} (supported: 1 ..= {MAX_MULTI_WIDTH})"
            ),
            EngineError::NonPositiveStep { step } => {
                write!(f, "finite-difference step must be positive, got {step}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EngineError {}

/// Function output plus its dense `m×n` Jacobian (`entry (i, j) =
/// ∂f_i/∂x_j`), with bookkeeping from the computation that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeResult {
    /// `f(x)`, identical bit-for-bit to a plain [`call`] at the same input.
    pub values: Vec<f64>,
    pub jacobian: DenseMatrix,
    /// Full function evaluations this derivative call performed.
    pub evaluations: usize,
    /// Reverse sweeps performed (0 for non-reverse methods).
    pub sweeps: usize,
    /// True when any output value or Jacobian entry is non-finite.
    pub flagged: bool,
}

impl DerivativeResult {
    fn finish(mut self) -> Self {
        self.flagged =
            !self.values.iter().all(|v| v.is_finite()) || !self.jacobian.all_finite();
        self
    }
}

fn check_arity<F: DifferentiableFunction>(f: &F, x: &[f64]) -> Result<(usize, usize), EngineError> {
    let (n, m) = (f.num_inputs(), f.num_outputs());
    assert!(n >= 1 && m >= 1, "function arities must be positive");
    if x.len() != n {
        return Err(EngineError::ArityMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok((n, m))
}

fn values_of<T: Scalar>(outputs: &[T]) -> Vec<f64> {
    outputs.iter().map(Scalar::value).collect()
}

/// Plain evaluation; touches no derivative state.
pub fn call<F: DifferentiableFunction>(f: &F, x: &[f64]) -> Result<Vec<f64>, EngineError> {
    let (_, m) = check_arity(f, x)?;
    let out = f.call::<f64>(x);
    assert_eq!(out.len(), m, "function returned a wrong output count");
    Ok(out)
}

/// Forward differences with a fixed step `h > 0`: column `j` is
/// `(f(x + h·e_j) − f(x)) / h`, using exactly `n + 1` evaluations.
pub fn derivative_finite_diff<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
    h: f64,
) -> Result<DerivativeResult, EngineError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(EngineError::NonPositiveStep { step: h });
    }
    finite_diff_impl(f, x, Some(h), &mut Vec::new())
}

fn finite_diff_impl<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
    step: Option<f64>,
    scratch: &mut Vec<f64>,
) -> Result<DerivativeResult, EngineError> {
    let (n, m) = check_arity(f, x)?;
    let mut evaluations = 0;

    let values = f.call::<f64>(x);
    evaluations += 1;
    assert_eq!(values.len(), m, "function returned a wrong output count");

    scratch.clear();
    scratch.extend_from_slice(x);
    let mut jacobian = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let h = step.unwrap_or_else(|| FD_STEP_SCALE * crate::math::max(1.0, crate::math::abs(x[j])));
        let base = scratch[j];
        scratch[j] = base + h;
        let out = f.call::<f64>(scratch);
        evaluations += 1;
        scratch[j] = base;
        for i in 0..m {
            jacobian[(i, j)] = (out[i] - values[i]) / h;
        }
    }

    Ok(DerivativeResult {
        values,
        jacobian,
        evaluations,
        sweeps: 0,
        flagged: false,
    }
    .finish())
}

/// Single-tangent forward mode: `n` passes, pass `j` seeds input `j` with a
/// one-hot tangent and fills Jacobian column `j`.
pub fn derivative_forward<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
) -> Result<DerivativeResult, EngineError> {
    forward_multi_pass::<F, 1>(f, x)
}

/// Multi-tangent forward mode: `ceil(n / width)` passes, each seeding up to
/// `width` inputs on distinct one-hot tangent lanes. Columns are assigned
/// contiguously: pass `p` covers inputs `p·width ..`.
pub fn derivative_forward_multi<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
    width: usize,
) -> Result<DerivativeResult, EngineError> {
    dispatch_width!(width, forward_multi_pass(f, x))
}

fn forward_multi_pass<F: DifferentiableFunction, const W: usize>(
    f: &F,
    x: &[f64],
) -> Result<DerivativeResult, EngineError> {
    let (n, m) = check_arity(f, x)?;
    let mut jacobian = DenseMatrix::zeros(m, n);
    let mut values = Vec::new();
    let mut evaluations = 0;

    let mut inputs: Vec<Dual<W>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let passes = n.div_ceil(W);
    for p in 0..passes {
        let lo = p * W;
        let hi = (lo + W).min(n);
        for j in lo..hi {
            inputs[j].tangent_mut()[j - lo] = 1.0;
        }

        let out = f.call(&inputs);
        evaluations += 1;
        assert_eq!(out.len(), m, "function returned a wrong output count");
        for (i, o) in out.iter().enumerate() {
            let tangent = o.tangent();
            for j in lo..hi {
                jacobian[(i, j)] = tangent[j - lo];
            }
        }
        if p == 0 {
            values = values_of(&out);
        }

        for j in lo..hi {
            inputs[j].tangent_mut()[j - lo] = 0.0;
        }
    }

    Ok(DerivativeResult {
        values,
        jacobian,
        evaluations,
        sweeps: 0,
        flagged: false,
    }
    .finish())
}

/// Tape-based reverse mode: one recorded evaluation, then one backward sweep
/// per output with a one-hot adjoint seed, filling Jacobian row `i`.
///
/// The tape is reset before recording; its reserved storage is reused.
pub fn derivative_reverse<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
    tape: &RefCell<Tape>,
) -> Result<DerivativeResult, EngineError> {
    reverse_impl(f, x, tape, &mut AdjointVector::new())
}

fn reverse_impl<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
    tape: &RefCell<Tape>,
    adjoints: &mut AdjointVector,
) -> Result<DerivativeResult, EngineError> {
    let (n, m) = check_arity(f, x)?;
    tape.borrow_mut().reset();

    let inputs: Vec<Rev> = x.iter().map(|&v| Rev::input(tape, v)).collect();
    let out = f.call(&inputs);
    let evaluations = 1;
    assert_eq!(out.len(), m, "function returned a wrong output count");

    let values = values_of(&out);
    let output_nodes: Vec<Option<NodeId>> = out.iter().map(Rev::node).collect();

    let mut jacobian = DenseMatrix::zeros(m, n);
    let mut sweeps = 0;
    let recorded = tape.borrow();
    for (i, node) in output_nodes.iter().enumerate() {
        // an output with no node is a constant: its row stays zero
        let Some(node) = node else { continue };
        recorded.backward_into(*node, 1.0, adjoints);
        sweeps += 1;
        for (j, &input_node) in recorded.input_nodes().iter().enumerate() {
            jacobian[(i, j)] = adjoints.get(input_node);
        }
    }
    drop(recorded);

    Ok(DerivativeResult {
        values,
        jacobian,
        evaluations,
        sweeps,
        flagged: false,
    }
    .finish())
}

/// Jacobian-vector product `J·direction` from one width-1 forward pass.
///
/// A one-hot direction reproduces the corresponding Jacobian column exactly.
pub fn jvp<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
    direction: &[f64],
) -> Result<Vec<f64>, EngineError> {
    let (n, m) = check_arity(f, x)?;
    if direction.len() != n {
        return Err(EngineError::ArityMismatch {
            expected: n,
            got: direction.len(),
        });
    }
    let inputs: Vec<Dual<1>> = x
        .iter()
        .zip(direction)
        .map(|(&v, &d)| Dual::seeded(v, [d]))
        .collect();
    let out = f.call(&inputs);
    assert_eq!(out.len(), m, "function returned a wrong output count");
    Ok(out.iter().map(|o| o.tangent()[0]).collect())
}

/// Vector-Jacobian product `adjointᵀ·J` from one recorded evaluation and one
/// backward sweep.
///
/// A one-hot adjoint reproduces the corresponding Jacobian row exactly.
pub fn vjp<F: DifferentiableFunction>(
    f: &F,
    x: &[f64],
    adjoint: &[f64],
    tape: &RefCell<Tape>,
) -> Result<Vec<f64>, EngineError> {
    let (_, m) = check_arity(f, x)?;
    if adjoint.len() != m {
        return Err(EngineError::ArityMismatch {
            expected: m,
            got: adjoint.len(),
        });
    }
    tape.borrow_mut().reset();
    let inputs: Vec<Rev> = x.iter().map(|&v| Rev::input(tape, v)).collect();
    let out = f.call(&inputs);
    assert_eq!(out.len(), m, "function returned a wrong output count");

    let seeds: Vec<(NodeId, f64)> = out
        .iter()
        .zip(adjoint)
        .filter_map(|(o, &seed)| o.node().map(|node| (node, seed)))
        .collect();
    let recorded = tape.borrow();
    let mut adjoints = AdjointVector::new();
    recorded.backward_seeded_into(&seeds, &mut adjoints);
    Ok(recorded
        .input_nodes()
        .iter()
        .map(|&node| {
            if adjoints.is_empty() {
                0.0
            } else {
                adjoints.get(node)
            }
        })
        .collect())
}

/// A function bundled with a derivative method and owned scratch state.
///
/// Repeated [`derivative`](Self::derivative) calls reuse the tape, the sweep
/// buffer, and the perturbation buffer, so after the first call at a given
/// problem size no further storage grows. Results at the same input are
/// identical across repetitions. One block serves one thread; distinct
/// blocks over the same function are independent.
#[derive(Debug)]
pub struct DifferentiableBlock<F: DifferentiableFunction> {
    function: F,
    method: DerivativeMethod,
    tape: RefCell<Tape>,
    adjoints: AdjointVector,
    fd_scratch: Vec<f64>,
    last_evaluations: usize,
}

impl<F: DifferentiableFunction> DifferentiableBlock<F> {
    pub fn new(function: F, method: DerivativeMethod) -> Result<Self, EngineError> {
        method.validate()?;
        assert!(
            function.num_inputs() >= 1 && function.num_outputs() >= 1,
            "function arities must be positive"
        );
        Ok(Self {
            function,
            method,
            tape: RefCell::new(Tape::new()),
            adjoints: AdjointVector::new(),
            fd_scratch: Vec::new(),
            last_evaluations: 0,
        })
    }

    pub fn function(&self) -> &F {
        &self.function
    }

    pub fn method(&self) -> DerivativeMethod {
        self.method
    }

    /// Plain evaluation; touches no derivative state.
    pub fn call(&self, x: &[f64]) -> Result<Vec<f64>, EngineError> {
        call(&self.function, x)
    }

    /// Evaluates the function and its Jacobian with this block's method.
    pub fn derivative(&mut self, x: &[f64]) -> Result<DerivativeResult, EngineError> {
        let result = match self.method {
            DerivativeMethod::FiniteDifferencing { step } => {
                finite_diff_impl(&self.function, x, step, &mut self.fd_scratch)
            }
            DerivativeMethod::ForwardAd => derivative_forward(&self.function, x),
            DerivativeMethod::ForwardAdMulti { width } => {
                derivative_forward_multi(&self.function, x, width)
            }
            DerivativeMethod::ReverseAd => {
                reverse_impl(&self.function, x, &self.tape, &mut self.adjoints)
            }
        }?;
        self.last_evaluations = result.evaluations;
        Ok(result)
    }

    /// Full function evaluations performed by the most recent
    /// [`derivative`](Self::derivative) call (0 before the first call).
    pub fn evaluation_count(&self) -> usize {
        self.last_evaluations
    }

    /// Node count of the owned tape after the most recent reverse
    /// derivative, if this block uses reverse mode.
    pub fn tape_len(&self) -> Option<usize> {
        matches!(self.method, DerivativeMethod::ReverseAd).then(|| self.tape.borrow().len())
    }

    /// Reserved node storage of the owned tape, if this block uses reverse
    /// mode.
    pub fn tape_capacity(&self) -> Option<usize> {
        matches!(self.method, DerivativeMethod::ReverseAd).then(|| self.tape.borrow().capacity())
    }
}

/// Monomorphizes a runtime width over the supported range.
macro_rules! dispatch_width {
    ($width:expr, $func:ident($($arg:expr),* $(,)?)) => {
        dispatch_width!(@arms $width, $func, ($($arg),*),
            1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16
            17 18 19 20 21 22 23 24 25 26 27 28 29 30 31 32
            33 34 35 36 37 38 39 40 41 42 43 44 45 46 47 48
            49 50 51 52 53 54 55 56 57 58 59 60 61 62 63 64)
    };
    (@arms $width:expr, $func:ident, $args:tt, $($n:literal)*) => {
        match $width {
            $( $n => dispatch_width!(@call $func, $n, $args), )*
            width => Err(EngineError::UnsupportedWidth { width }),
        }
    };
    (@call $func:ident, $n:literal, ($($arg:expr),*)) => {
        $func::<_, $n>($($arg),*)
    };
}
use dispatch_width;
