//! Scalar automatic differentiation with swappable derivative backends.
//!
//! Numeric code written once against the [`Scalar`] trait can be evaluated
//! with plain `f64`, with forward-mode duals carrying a fixed-width tangent
//! block ([`Dual`]), or with a reverse-mode scalar that records onto a tape
//! ([`Rev`]). The [`engine`] module turns any of those backends into a dense
//! Jacobian behind one interface, so finite differencing, single-tangent
//! forward mode, batched multi-tangent forward mode, and tape-based reverse
//! mode are drop-in replacements for each other.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable default
//! features and enable `libm` to build without the standard library.
//!
//! ```
//! use derivkit::engine::{DerivativeMethod, DifferentiableBlock, DifferentiableFunction};
//! use derivkit::Scalar;
//!
//! struct Product;
//!
//! impl DifferentiableFunction for Product {
//!     fn num_inputs(&self) -> usize { 2 }
//!     fn num_outputs(&self) -> usize { 1 }
//!     fn call<T: Scalar>(&self, inputs: &[T]) -> Vec<T> {
//!         vec![inputs[0] * inputs[1]]
//!     }
//! }
//!
//! let mut block = DifferentiableBlock::new(Product, DerivativeMethod::ReverseAd).unwrap();
//! let result = block.derivative(&[2.0, 3.0]).unwrap();
//! assert_eq!(result.values, vec![6.0]);
//! assert_eq!(result.jacobian.row(0), &[3.0, 2.0]);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("derivkit needs either the `std` feature or the `libm` feature");

mod math;

pub mod bench;
pub mod dual;
pub mod engine;
pub mod kin;
pub mod linalg;
pub mod rev;
pub mod rng;
pub mod rules;
pub mod scalar;
pub mod tape;

pub use dual::Dual;
pub use rev::Rev;
pub use scalar::{Scalar, ScalarKind};
pub use tape::Tape;
