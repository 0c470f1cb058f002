//! Serial-chain kinematics demo: a 24-DoF, trig-heavy constraint function
//! with a 5-component residual, plus a damped Jacobian-pseudo-inverse root
//! finder that runs under every derivative backend.
//!
//! The chain is synthetic with fixed, documented axes and offsets; four task
//! points stand in for foot placements and a fifth for an end-effector pose
//! (its position and a tool point folded into one scalar residual). Each
//! residual is the squared distance between a task point and its target, so
//! the root (all residuals zero) is exactly "all targets met" and the
//! constraint Jacobian is a 5×24 matrix.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::engine::{DifferentiableBlock, DifferentiableFunction, EngineError};
use crate::linalg::{self, DampedPseudoInverseConfig};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Joints in the chain (a floating-base analogue is not modeled; all 24
/// degrees of freedom are revolute).
pub const CHAIN_DOF: usize = 24;

/// Residual rows: four foot analogues plus one end-effector pose scalar.
pub const NUM_RESIDUALS: usize = 5;

type Vec3 = [f64; 3];
type Mat3<T> = [[T; 3]; 3];

/// Iterations of the kinematic loop after which the four placement task
/// points are read; the fourth anchor sits at the chain tip.
const FOOT_FRAMES: [usize; 4] = [5, 11, 17, 23];

/// A fixed 24-joint serial chain.
///
/// Joint `k` rotates about a canonical axis cycling z, y, x; its link offset
/// is `[0.2, 0.05, 0.04]` meters on even joints and `[-0.19, 0.05, 0.04]` on
/// odd ones, so the chain folds back on itself concertina-style. The fold
/// keeps every lever arm short, which the pseudo-inverse iteration needs:
/// on a straight chain the minimum-norm step loads the proximal joints
/// (longest levers) and drags already-satisfied task points off their
/// targets. No two consecutive axes are parallel. The model is immutable
/// after construction.
#[derive(Debug, Clone)]
pub struct ChainModel {
    axes: [Vec3; CHAIN_DOF],
    offsets: [Vec3; CHAIN_DOF],
    tool_offset: Vec3,
}

impl ChainModel {
    /// The demo chain described above.
    pub fn standard() -> Self {
        let mut axes = [[0.0; 3]; CHAIN_DOF];
        let mut offsets = [[0.0; 3]; CHAIN_DOF];
        for (k, (axis, offset)) in axes.iter_mut().zip(&mut offsets).enumerate() {
            *axis = match k % 3 {
                0 => [0.0, 0.0, 1.0],
                1 => [0.0, 1.0, 0.0],
                _ => [1.0, 0.0, 0.0],
            };
            *offset = [
                0.2 * if k % 2 == 0 { 1.0 } else { -0.95 },
                0.05,
                0.04,
            ];
        }
        Self {
            axes,
            offsets,
            tool_offset: [0.08, 0.08, 0.0],
        }
    }

    /// The documented feasible configuration targets are generated from:
    /// `q_k = 0.4·sin(2.4·k + 0.7)`.
    pub fn reference_configuration() -> Vec<f64> {
        (0..CHAIN_DOF)
            .map(|k| 0.4 * crate::math::sin(2.4 * k as f64 + 0.7))
            .collect()
    }

    pub fn dof(&self) -> usize {
        CHAIN_DOF
    }

    pub fn axes(&self) -> &[Vec3; CHAIN_DOF] {
        &self.axes
    }

    pub fn offsets(&self) -> &[Vec3; CHAIN_DOF] {
        &self.offsets
    }

    /// Forward kinematics: composes per-joint rotations and translations
    /// along the chain and returns the task points. Fully differentiable;
    /// the value channel matches plain `f64` evaluation bit for bit.
    ///
    /// Panics unless `q` has length [`CHAIN_DOF`].
    pub fn fk<T: Scalar>(&self, q: &[T]) -> TaskPoints<T> {
        assert_eq!(q.len(), CHAIN_DOF, "configuration arity mismatch");
        let zero = T::constant(0.0);
        let mut rot = mat_identity::<T>();
        let mut pos = [zero; 3];
        let mut feet = [[zero; 3]; 4];
        let mut next_foot = 0;

        for k in 0..CHAIN_DOF {
            // translate along the link, then rotate about the joint axis
            let offset = mat_vec(&rot, &lift(self.offsets[k]));
            pos = vec_add(&pos, &offset);
            rot = mat_mul(&rot, &axis_rotation(self.axes[k], q[k]));
            if next_foot < feet.len() && k == FOOT_FRAMES[next_foot] {
                feet[next_foot] = pos;
                next_foot += 1;
            }
        }

        let tool = vec_add(&pos, &mat_vec(&rot, &lift(self.tool_offset)));
        TaskPoints { feet, ee: pos, tool }
    }
}

/// Task-point positions produced by [`ChainModel::fk`]: four foot analogues,
/// the end-effector origin, and a tool point rigidly offset from the
/// end-effector frame (standing in for its orientation).
#[derive(Debug, Clone)]
pub struct TaskPoints<T> {
    pub feet: [[T; 3]; 4],
    pub ee: [T; 3],
    pub tool: [T; 3],
}

/// Target positions for the five task points. Built from a feasible
/// configuration, so the residual root is reachable by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintTargets {
    pub feet: [Vec3; 4],
    pub ee: Vec3,
    pub tool: Vec3,
}

impl ConstraintTargets {
    pub fn from_configuration(model: &ChainModel, q: &[f64]) -> Self {
        let points = model.fk::<f64>(q);
        Self {
            feet: points.feet,
            ee: points.ee,
            tool: points.tool,
        }
    }
}

/// The five-output constraint: residual `i` is the squared distance between
/// task point `i` and its target; the end-effector row folds in the tool
/// point as well. All residuals are nonnegative and vanish exactly at a
/// solution.
#[derive(Debug, Clone)]
pub struct ChainConstraint {
    model: ChainModel,
    targets: ConstraintTargets,
}

impl ChainConstraint {
    pub fn new(model: ChainModel, targets: ConstraintTargets) -> Self {
        Self { model, targets }
    }

    pub fn model(&self) -> &ChainModel {
        &self.model
    }

    pub fn targets(&self) -> &ConstraintTargets {
        &self.targets
    }
}

impl DifferentiableFunction for ChainConstraint {
    fn num_inputs(&self) -> usize {
        CHAIN_DOF
    }

    fn num_outputs(&self) -> usize {
        NUM_RESIDUALS
    }

    fn call<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let points = self.model.fk(q);
        let mut out = Vec::with_capacity(NUM_RESIDUALS);
        for (point, target) in points.feet.iter().zip(&self.targets.feet) {
            out.push(squared_distance(point, target));
        }
        out.push(
            squared_distance(&points.ee, &self.targets.ee)
                + squared_distance(&points.tool, &self.targets.tool),
        );
        out
    }
}

/// Root-finder hyperparameters. The defaults are the pinned demo values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFindConfig {
    /// Fixed scale applied to each pseudo-inverse step.
    pub step_scale: f64,
    /// Damping lambda for the pseudo-inverse solve.
    pub damping: f64,
    /// Convergence threshold on the residual 2-norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Consecutive residual-growth iterations before giving up.
    pub divergence_patience: usize,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        Self {
            step_scale: 0.5,
            damping: 1e-8,
            tolerance: 1e-4,
            max_iterations: 1000,
            divergence_patience: 25,
        }
    }
}

/// Outcome of a root-finding run. Wall time is measured by callers that own
/// a clock; this crate stays clock-free.
#[derive(Debug, Clone)]
pub struct RootFindReport {
    /// True iff the final residual norm is within tolerance.
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub final_configuration: Vec<f64>,
    /// Residual 2-norm before each iteration and after the last.
    pub residual_history: Vec<f64>,
}

/// Damped Gauss–Newton iteration `x ← x − α·Jᵀ(JJᵀ + λI)⁻¹ r` until the
/// residual norm reaches tolerance or the budget runs out.
///
/// Divergence (a residual that grows for `divergence_patience` consecutive
/// iterations), non-finite residuals, and singular solves all end the run
/// with a non-converged report rather than an error.
pub fn root_find<F: DifferentiableFunction>(
    block: &mut DifferentiableBlock<F>,
    x0: &[f64],
    config: &RootFindConfig,
) -> Result<RootFindReport, EngineError> {
    assert!(config.tolerance > 0.0, "tolerance must be positive");
    assert!(config.step_scale > 0.0, "step scale must be positive");
    let pinv_cfg = DampedPseudoInverseConfig::new(config.damping)
        .expect("damping must be non-negative and finite");

    let mut x = x0.to_vec();
    let mut result = block.derivative(&x)?;
    let mut residual_norm = linalg::norm2(&result.values);
    let mut history = Vec::with_capacity(config.max_iterations + 1);
    history.push(residual_norm);

    let mut iterations = 0;
    let mut growth_streak = 0;
    loop {
        if residual_norm <= config.tolerance
            || iterations >= config.max_iterations
            || !residual_norm.is_finite()
            || result.flagged
        {
            break;
        }
        let Ok(step) = linalg::pinv_solve(&result.jacobian, &result.values, &pinv_cfg) else {
            break;
        };

        for (xj, dj) in x.iter_mut().zip(&step) {
            *xj -= config.step_scale * dj;
        }
        iterations += 1;

        result = block.derivative(&x)?;
        let next = linalg::norm2(&result.values);
        history.push(next);
        if next > residual_norm {
            growth_streak += 1;
        } else {
            growth_streak = 0;
        }
        residual_norm = next;
        if growth_streak >= config.divergence_patience {
            break;
        }
    }

    Ok(RootFindReport {
        converged: residual_norm <= config.tolerance,
        iterations,
        residual_norm,
        final_configuration: x,
        residual_history: history,
    })
}

/// Uniform sample from `[-π/2, π/2]^24`, the demo's configuration
/// distribution for both target-generating poses and initial guesses.
pub fn sample_configuration(rng: &mut SplitMix64) -> Vec<f64> {
    (0..CHAIN_DOF)
        .map(|_| rng.next_range(-FRAC_PI_2, FRAC_PI_2))
        .collect()
}

fn lift<T: Scalar>(v: Vec3) -> [T; 3] {
    [T::constant(v[0]), T::constant(v[1]), T::constant(v[2])]
}

fn vec_add<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn squared_distance<T: Scalar>(p: &[T; 3], target: &Vec3) -> T {
    let dx = p[0] - T::constant(target[0]);
    let dy = p[1] - T::constant(target[1]);
    let dz = p[2] - T::constant(target[2]);
    dx * dx + dy * dy + dz * dz
}

fn mat_identity<T: Scalar>() -> Mat3<T> {
    let (zero, one) = (T::constant(0.0), T::constant(1.0));
    [[one, zero, zero], [zero, one, zero], [zero, zero, one]]
}

fn mat_vec<T: Scalar>(m: &Mat3<T>, v: &[T; 3]) -> [T; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_mul<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::constant(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// Rodrigues rotation about a fixed unit axis by a differentiable angle.
fn axis_rotation<T: Scalar>(axis: Vec3, angle: T) -> Mat3<T> {
    let (ux, uy, uz) = (
        T::constant(axis[0]),
        T::constant(axis[1]),
        T::constant(axis[2]),
    );
    let c = angle.cos();
    let s = angle.sin();
    let k = T::constant(1.0) - c;

    [
        [
            c + ux * ux * k,
            ux * uy * k - uz * s,
            ux * uz * k + uy * s,
        ],
        [
            uy * ux * k + uz * s,
            c + uy * uy * k,
            uy * uz * k - ux * s,
        ],
        [
            uz * ux * k - uy * s,
            uz * uy * k + ux * s,
            c + uz * uz * k,
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Dual;
    use crate::engine::{derivative_forward, DerivativeMethod};

    fn zero_q() -> Vec<f64> {
        alloc::vec![0.0; CHAIN_DOF]
    }

    #[test]
    fn home_positions_are_offset_prefix_sums() {
        let model = ChainModel::standard();
        let points = model.fk::<f64>(&zero_q());

        let mut acc = [0.0; 3];
        let mut expect_feet = [[0.0; 3]; 4];
        let mut next = 0;
        for (k, offset) in model.offsets().iter().enumerate() {
            for (a, o) in acc.iter_mut().zip(offset) {
                *a += o;
            }
            if next < 4 && k == FOOT_FRAMES[next] {
                expect_feet[next] = acc;
                next += 1;
            }
        }
        for (got, want) in points.feet.iter().zip(&expect_feet) {
            assert_eq!(got, want);
        }
        assert_eq!(points.ee, acc);
        // at q = 0 the tool sits one tool offset past the end effector
        assert_eq!(points.tool, [acc[0] + 0.08, acc[1] + 0.08, acc[2]]);
    }

    #[test]
    fn last_joint_moves_only_the_tool() {
        let model = ChainModel::standard();
        let home = model.fk::<f64>(&zero_q());
        let mut q = zero_q();
        q[CHAIN_DOF - 1] = 0.9;
        let bent = model.fk::<f64>(&q);

        for (a, b) in home.feet.iter().zip(&bent.feet) {
            assert_eq!(a, b, "feet are upstream of the last joint");
        }
        assert_eq!(home.ee, bent.ee);
        assert_ne!(home.tool, bent.tool);
    }

    #[test]
    fn fk_value_channel_is_bit_identical_under_duals() {
        let model = ChainModel::standard();
        let mut rng = SplitMix64::new(31);
        let q = sample_configuration(&mut rng);
        let plain = model.fk::<f64>(&q);
        let duals: Vec<Dual<2>> = q.iter().map(|&v| Dual::constant(v)).collect();
        let dual_points = model.fk(&duals);
        for i in 0..3 {
            assert_eq!(plain.ee[i].to_bits(), dual_points.ee[i].value().to_bits());
            assert_eq!(
                plain.tool[i].to_bits(),
                dual_points.tool[i].value().to_bits()
            );
        }
    }

    #[test]
    fn residuals_vanish_at_the_generating_configuration() {
        let model = ChainModel::standard();
        let mut rng = SplitMix64::new(77);
        let q_star = sample_configuration(&mut rng);
        let targets = ConstraintTargets::from_configuration(&model, &q_star);
        let constraint = ChainConstraint::new(model, targets);
        let residuals = constraint.call::<f64>(&q_star);
        assert_eq!(residuals.len(), NUM_RESIDUALS);
        for r in residuals {
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn residuals_are_nonnegative_everywhere_sampled() {
        let model = ChainModel::standard();
        let mut rng = SplitMix64::new(13);
        let targets = ConstraintTargets::from_configuration(&model, &sample_configuration(&mut rng));
        let constraint = ChainConstraint::new(model, targets);
        for _ in 0..50 {
            let q = sample_configuration(&mut rng);
            for r in constraint.call::<f64>(&q) {
                assert!(r >= 0.0);
            }
        }
    }

    #[test]
    fn jacobian_at_the_root_is_five_by_24_and_zero() {
        let model = ChainModel::standard();
        let mut rng = SplitMix64::new(41);
        let q_star = sample_configuration(&mut rng);
        let targets = ConstraintTargets::from_configuration(&model, &q_star);
        let constraint = ChainConstraint::new(model, targets);
        let res = derivative_forward(&constraint, &q_star).unwrap();
        assert_eq!(res.jacobian.rows(), NUM_RESIDUALS);
        assert_eq!(res.jacobian.cols(), CHAIN_DOF);
        for v in res.jacobian.data() {
            // minimum of a smooth nonnegative function
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn root_find_from_the_root_takes_zero_iterations() {
        let model = ChainModel::standard();
        let mut rng = SplitMix64::new(3);
        let q_star = sample_configuration(&mut rng);
        let targets = ConstraintTargets::from_configuration(&model, &q_star);
        let constraint = ChainConstraint::new(model, targets);
        let mut block = DifferentiableBlock::new(constraint, DerivativeMethod::ReverseAd).unwrap();
        let report = root_find(&mut block, &q_star, &RootFindConfig::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.residual_norm, 0.0);
    }

    #[test]
    fn root_find_converges_from_a_perturbed_start() {
        let model = ChainModel::standard();
        let q_star = ChainModel::reference_configuration();
        let targets = ConstraintTargets::from_configuration(&model, &q_star);
        let constraint = ChainConstraint::new(model, targets);
        let mut rng = SplitMix64::new(17);
        let x0 = sample_configuration(&mut rng);
        let cfg = RootFindConfig::default();

        let mut block =
            DifferentiableBlock::new(constraint, DerivativeMethod::ForwardAdMulti { width: 24 })
                .unwrap();
        let report = root_find(&mut block, &x0, &cfg).unwrap();
        assert!(
            report.converged,
            "residual stalled at {} after {} iterations",
            report.residual_norm, report.iterations
        );
        assert!(report.residual_norm <= cfg.tolerance);
        // the final configuration actually satisfies the constraint
        let residuals = block.call(&report.final_configuration).unwrap();
        assert!(linalg::norm2(&residuals) <= cfg.tolerance);
    }

    #[test]
    fn backends_agree_on_shared_starts() {
        // Per-start counts wander (sub-ulp Jacobian differences amplify over
        // hundreds of nonlinear iterations), so method agreement is judged
        // on mean iterations over a shared start set.
        let model = ChainModel::standard();
        let q_star = ChainModel::reference_configuration();
        let targets = ConstraintTargets::from_configuration(&model, &q_star);
        let mut rng = SplitMix64::new(29);
        let starts: Vec<Vec<f64>> = (0..20).map(|_| sample_configuration(&mut rng)).collect();
        let cfg = RootFindConfig::default();

        let mut means = Vec::new();
        for method in [
            DerivativeMethod::fd(),
            DerivativeMethod::ForwardAd,
            DerivativeMethod::ForwardAdMulti { width: 24 },
            DerivativeMethod::ReverseAd,
        ] {
            let constraint = ChainConstraint::new(model.clone(), targets.clone());
            let mut block = DifferentiableBlock::new(constraint, method).unwrap();
            let mut total = 0usize;
            for x0 in &starts {
                let report = root_find(&mut block, x0, &cfg).unwrap();
                assert!(report.converged, "{method} failed to converge");
                total += report.iterations;
            }
            means.push(total as f64 / starts.len() as f64);
        }
        let max = means.iter().cloned().fold(f64::MIN, f64::max);
        let min = means.iter().cloned().fold(f64::MAX, f64::min);
        // smoke bound; the acceptance suite holds the 5% line at 500 trials
        assert!(
            (max - min) / max <= 0.10,
            "mean iteration counts spread too far: {means:?}"
        );
    }
}
