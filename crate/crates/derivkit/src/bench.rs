//! Deterministic benchmark-function family: seeded random compositions of
//! sine and cosine, parameterized by input count `n`, output count `m`, and
//! operations per output `o`.
//!
//! Sine and cosine compose safely (infinite domain, bounded range, smooth
//! derivatives) and dominate many robotics subroutines, which makes this
//! family a reasonable stand-in for those workloads while staying cheap to
//! generate.
//!
//! # Generation contract
//!
//! Programs must regenerate bit-identically from `(n, m, o, seed)`, so the
//! draw sequence is pinned. All draws come from a single [`SplitMix64`]
//! stream seeded with `seed`; for each output `j = 0 .. m`:
//!
//! 1. one draw picks the starting accumulator: `first = next_u64() % n`;
//! 2. then `o` times, in order: a trig draw (`next_u64()` even → sin, odd →
//!    cos), a combine draw (`next_u64()` even → add, odd → mul), and an
//!    input draw (`next_u64() % n`).
//!
//! Output `j` evaluates as `acc = x[first]`, then for every step
//! `acc = trig(acc ⊕ x[input])`, where `⊕` is the step's combine. The last
//! operation applied is always a trig, so every output lies in `[-1, 1]`.

use alloc::vec::Vec;
use core::fmt;

use crate::engine::DifferentiableFunction;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Trig applied at the end of each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigOp {
    Sin,
    Cos,
}

/// How a step folds the chosen input into the accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Mul,
}

/// One program step: `acc ← trig(acc ⊕ x[input])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub trig: TrigOp,
    pub combine: CombineOp,
    pub input: usize,
}

/// The step list for one output, plus the input index seeding its
/// accumulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputProgram {
    pub first_input: usize,
    pub steps: Vec<Step>,
}

/// A generation parameter was zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroParameterError {
    pub name: &'static str,
}

impl fmt::Display for ZeroParameterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "benchmark parameter `{}` must be at least 1", self.name)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ZeroParameterError {}

/// A generated benchmark function; implements [`DifferentiableFunction`]
/// through a straight interpretation of its step list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkSpec {
    n: usize,
    m: usize,
    o: usize,
    seed: u64,
    programs: Vec<OutputProgram>,
}

impl BenchmarkSpec {
    /// Deterministically generates the `(n, m, o, seed)` member of the
    /// family. All parameters must be at least 1.
    pub fn generate(n: usize, m: usize, o: usize, seed: u64) -> Result<Self, ZeroParameterError> {
        for (value, name) in [(n, "n"), (m, "m"), (o, "o")] {
            if value == 0 {
                return Err(ZeroParameterError { name });
            }
        }
        let mut rng = SplitMix64::new(seed);
        let programs = (0..m)
            .map(|_| {
                let first_input = rng.next_index(n);
                let steps = (0..o)
                    .map(|_| {
                        let trig = if rng.next_u64() % 2 == 0 {
                            TrigOp::Sin
                        } else {
                            TrigOp::Cos
                        };
                        let combine = if rng.next_u64() % 2 == 0 {
                            CombineOp::Add
                        } else {
                            CombineOp::Mul
                        };
                        let input = rng.next_index(n);
                        Step {
                            trig,
                            combine,
                            input,
                        }
                    })
                    .collect();
                OutputProgram { first_input, steps }
            })
            .collect();
        Ok(Self {
            n,
            m,
            o,
            seed,
            programs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn o(&self) -> usize {
        self.o
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn programs(&self) -> &[OutputProgram] {
        &self.programs
    }

    /// Total step count, `m · o`.
    pub fn len(&self) -> usize {
        self.programs.iter().map(|p| p.steps.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl DifferentiableFunction for BenchmarkSpec {
    fn num_inputs(&self) -> usize {
        self.n
    }

    fn num_outputs(&self) -> usize {
        self.m
    }

    fn call<T: Scalar>(&self, inputs: &[T]) -> Vec<T> {
        assert_eq!(inputs.len(), self.n, "benchmark arity mismatch");
        self.programs
            .iter()
            .map(|program| {
                let mut acc = inputs[program.first_input];
                for step in &program.steps {
                    let combined = match step.combine {
                        CombineOp::Add => acc + inputs[step.input],
                        CombineOp::Mul => acc * inputs[step.input],
                    };
                    acc = match step.trig {
                        TrigOp::Sin => combined.sin(),
                        TrigOp::Cos => combined.cos(),
                    };
                }
                acc
            })
            .collect()
    }
}
