//! Property tests for the scalar backends: rule correctness against a
//! central-difference oracle, tangent linearity, comparison neutrality, and
//! value-channel fidelity.

use std::cell::RefCell;

use derivkit::bench::BenchmarkSpec;
use derivkit::engine::{self, DifferentiableFunction};
use derivkit::rules::{BinaryOp, UnaryOp};
use derivkit::{Dual, Rev, Scalar, Tape};
use proptest::prelude::*;

/// Central difference with h = 1e-6.
fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6;
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Forward-dual and reverse partials for one unary op at one point.
fn unary_partials(op: UnaryOp, x: f64) -> (f64, f64) {
    let d = apply_unary(op, Dual::<1>::seeded(x, [1.0])).tangent()[0];

    let tape = RefCell::new(Tape::new());
    let input = Rev::input(&tape, x);
    let out = apply_unary(op, input);
    let r = match out.node() {
        Some(node) => {
            let adj = tape.borrow().backward(node, 1.0);
            adj.get(input.node().unwrap())
        }
        None => 0.0,
    };
    (d, r)
}

fn apply_unary<T: Scalar>(op: UnaryOp, x: T) -> T {
    match op {
        UnaryOp::Sin => x.sin(),
        UnaryOp::Cos => x.cos(),
        UnaryOp::Tan => x.tan(),
        UnaryOp::Exp => x.exp(),
        UnaryOp::Ln => x.ln(),
        UnaryOp::Sqrt => x.sqrt(),
        UnaryOp::Neg => -x,
        UnaryOp::Abs => x.abs(),
    }
}

fn apply_binary<T: Scalar>(op: BinaryOp, a: T, b: T) -> T {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => a / b,
        BinaryOp::Pow => a.powf(b),
        BinaryOp::Min => a.min(b),
        BinaryOp::Max => a.max(b),
    }
}

proptest! {
    #[test]
    fn unary_rules_match_central_differences_everywhere(x in -2.5f64..2.5) {
        for op in [UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Exp, UnaryOp::Neg] {
            let want = central(|t| op.eval(t), x);
            let (fwd, rev) = unary_partials(op, x);
            prop_assert!(rel_err(fwd, want) <= 1e-5, "{op:?} forward at {x}");
            prop_assert!(rel_err(rev, want) <= 1e-5, "{op:?} reverse at {x}");
        }
    }

    #[test]
    fn positive_domain_rules_match_central_differences(x in 0.1f64..8.0) {
        for op in [UnaryOp::Ln, UnaryOp::Sqrt] {
            let want = central(|t| op.eval(t), x);
            let (fwd, rev) = unary_partials(op, x);
            prop_assert!(rel_err(fwd, want) <= 1e-5, "{op:?} forward at {x}");
            prop_assert!(rel_err(rev, want) <= 1e-5, "{op:?} reverse at {x}");
        }
    }

    #[test]
    fn binary_rules_match_central_differences(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        // keep away from the division pole and the min/max tie set
        prop_assume!(b.abs() > 0.05 && (a - b).abs() > 1e-3);
        for op in [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div,
                   BinaryOp::Min, BinaryOp::Max] {
            let want_a = central(|t| op.eval(t, b), a);
            let want_b = central(|t| op.eval(a, t), b);
            let da = apply_binary(op, Dual::<2>::variable(a, 0), Dual::<2>::variable(b, 1));
            prop_assert!(rel_err(da.tangent()[0], want_a) <= 1e-5, "{op:?} d/da");
            prop_assert!(rel_err(da.tangent()[1], want_b) <= 1e-5, "{op:?} d/db");
        }
    }

    #[test]
    fn pow_rule_matches_central_differences(a in 0.2f64..3.0, b in -2.0f64..2.0) {
        let op = BinaryOp::Pow;
        let want_a = central(|t| op.eval(t, b), a);
        let want_b = central(|t| op.eval(a, t), b);
        let d = apply_binary(op, Dual::<2>::variable(a, 0), Dual::<2>::variable(b, 1));
        prop_assert!(rel_err(d.tangent()[0], want_a) <= 1e-5);
        prop_assert!(rel_err(d.tangent()[1], want_b) <= 1e-5);
    }

    /// Seeding with alpha*u + beta*w equals alpha*JVP(u) + beta*JVP(w).
    #[test]
    fn tangent_seeding_is_linear(
        seed in any::<u64>(),
        o in 1usize..25,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        u in proptest::array::uniform3(-2.0f64..2.0),
        w in proptest::array::uniform3(-2.0f64..2.0),
        x in proptest::array::uniform3(-3.0f64..3.0),
    ) {
        let spec = BenchmarkSpec::generate(3, 2, o, seed).unwrap();
        let jvp_u = engine::jvp(&spec, &x, &u).unwrap();
        let jvp_w = engine::jvp(&spec, &x, &w).unwrap();
        let combo: Vec<f64> = u.iter().zip(&w).map(|(a, b)| alpha * a + beta * b).collect();
        let jvp_combo = engine::jvp(&spec, &x, &combo).unwrap();
        for i in 0..2 {
            let want = alpha * jvp_u[i] + beta * jvp_w[i];
            prop_assert!((jvp_combo[i] - want).abs() <= 1e-10,
                "lane {i}: {} vs {want}", jvp_combo[i]);
        }
    }

    /// Comparisons depend only on value channels, whatever the tangents.
    #[test]
    fn comparisons_ignore_derivative_state(
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        ta in proptest::array::uniform4(-100.0f64..100.0),
        tb in proptest::array::uniform4(-100.0f64..100.0),
    ) {
        let da = Dual::<4>::seeded(a, ta);
        let db = Dual::<4>::seeded(b, tb);
        prop_assert_eq!(da < db, a < b);
        prop_assert_eq!(da <= db, a <= b);
        prop_assert_eq!(da > db, a > b);
        prop_assert_eq!(da >= db, a >= b);
        prop_assert_eq!(da == db, a == b);

        let tape = RefCell::new(Tape::new());
        let ra = Rev::input(&tape, a);
        let rb = Rev::input(&tape, b);
        prop_assert_eq!(ra < rb, a < b);
        prop_assert_eq!(ra == rb, a == b);
        prop_assert_eq!(ra >= rb, a >= b);
    }

    /// Every backend's value channel is bit-identical to plain evaluation.
    #[test]
    fn value_channels_are_bit_identical(
        seed in any::<u64>(),
        n in 1usize..6,
        m in 1usize..4,
        o in 1usize..40,
        raw in proptest::collection::vec(-3.2f64..3.2, 6),
    ) {
        let spec = BenchmarkSpec::generate(n, m, o, seed).unwrap();
        let x = &raw[..n];

        let plain = spec.call::<f64>(x);

        let duals: Vec<Dual<4>> = x.iter().map(|&v| Dual::constant(v)).collect();
        let dual_out = spec.call(&duals);

        let tape = RefCell::new(Tape::new());
        let revs: Vec<Rev> = x.iter().map(|&v| Rev::input(&tape, v)).collect();
        let rev_out = spec.call(&revs);

        for i in 0..m {
            prop_assert_eq!(plain[i].to_bits(), dual_out[i].value().to_bits());
            prop_assert_eq!(plain[i].to_bits(), rev_out[i].value().to_bits());
        }
    }
}
