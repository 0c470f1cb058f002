//! Append-only computation graph (Wengert list) for reverse-mode sweeps.
//!
//! A forward pass records one [`TapeNode`] per primitive operation, holding
//! the parent indices and the precomputed numeric local partials. The reverse
//! sweep is then a pure multiply-accumulate over the node list and never
//! looks at operation kinds or operand values. Storage is reserved up front
//! where possible and retained across [`Tape::reset`], so re-recording the
//! same function reuses the first pass's allocation.

use alloc::vec::Vec;

use crate::rules::{BinaryOp, UnaryOp};

/// Index of a node on a [`Tape`].
pub type NodeId = u32;

/// Operation recorded on a node. `Leaf` marks inputs and constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// One recorded primitive: up to two parents with the local partials
/// d(node)/d(parent), already evaluated at record time.
#[derive(Debug, Clone, Copy)]
pub struct TapeNode {
    op: Op,
    arity: u8,
    parents: [NodeId; 2],
    partials: [f64; 2],
}

impl TapeNode {
    pub fn op(&self) -> Op {
        self.op
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parents[..self.arity as usize]
    }

    pub fn partials(&self) -> &[f64] {
        &self.partials[..self.arity as usize]
    }
}

/// Adjoints produced by a reverse sweep, one per tape node.
///
/// The buffer is reusable: sweeping again clears and resizes it in place, so
/// a full Jacobian (one sweep per output) performs no allocation after the
/// first sweep.
#[derive(Debug, Default, Clone)]
pub struct AdjointVector {
    adjoints: Vec<f64>,
}

impl AdjointVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// d(seeded output)/d(node) for the most recent sweep.
    pub fn get(&self, node: NodeId) -> f64 {
        self.adjoints[node as usize]
    }

    pub fn len(&self) -> usize {
        self.adjoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjoints.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.adjoints
    }

    fn clear_to(&mut self, len: usize) {
        self.adjoints.clear();
        self.adjoints.resize(len, 0.0);
    }
}

/// The Wengert list: nodes in topological order by construction (every
/// parent index is smaller than its child's).
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<TapeNode>,
    input_nodes: Vec<NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty tape with storage reserved for `capacity_hint` nodes.
    pub fn with_capacity(capacity_hint: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(capacity_hint),
            input_nodes: Vec::new(),
        }
    }

    /// Number of recorded nodes (leaves included).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reserved node storage; does not shrink on [`reset`](Self::reset).
    pub fn capacity(&self) -> usize {
        self.nodes.capacity()
    }

    /// The indices of leaves registered through [`record_input`],
    /// in registration order.
    ///
    /// [`record_input`]: Self::record_input
    pub fn input_nodes(&self) -> &[NodeId] {
        &self.input_nodes
    }

    pub fn node(&self, id: NodeId) -> &TapeNode {
        &self.nodes[id as usize]
    }

    /// Appends a node and returns its index (the previous node count).
    ///
    /// Panics if more than two parents are given, if `parents` and
    /// `partials` disagree in length, or if any parent index is not already
    /// on the tape.
    pub fn record(&mut self, op: Op, parents: &[NodeId], partials: &[f64]) -> NodeId {
        assert!(parents.len() <= 2, "a tape node has at most 2 parents");
        assert_eq!(
            parents.len(),
            partials.len(),
            "one local partial per parent"
        );
        let id = self.next_id();
        let mut node = TapeNode {
            op,
            arity: parents.len() as u8,
            parents: [0; 2],
            partials: [0.0; 2],
        };
        for (k, (&p, &d)) in parents.iter().zip(partials).enumerate() {
            assert!(p < id, "parent {p} is not on the tape (len {id})");
            node.parents[k] = p;
            node.partials[k] = d;
        }
        self.nodes.push(node);
        id
    }

    /// Records a leaf and registers it as the next function input.
    pub fn record_input(&mut self) -> NodeId {
        let id = self.record(Op::Leaf, &[], &[]);
        self.input_nodes.push(id);
        id
    }

    /// Records a leaf that is not a function input (a constant).
    pub fn record_constant(&mut self) -> NodeId {
        self.record(Op::Leaf, &[], &[])
    }

    /// Drops all nodes and input registrations but keeps the reserved
    /// storage. Scalars that referenced this tape must not be used again.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.input_nodes.clear();
    }

    /// Reverse sweep from `output` with the given adjoint seed; returns the
    /// full adjoint vector. Restricting the result to [`input_nodes`] gives
    /// the VJP row.
    ///
    /// Panics when `output` is not on the tape or `seed` is non-finite.
    ///
    /// [`input_nodes`]: Self::input_nodes
    pub fn backward(&self, output: NodeId, seed: f64) -> AdjointVector {
        let mut adjoints = AdjointVector::new();
        self.backward_into(output, seed, &mut adjoints);
        adjoints
    }

    /// [`backward`](Self::backward) writing into a caller-owned buffer.
    pub fn backward_into(&self, output: NodeId, seed: f64, adjoints: &mut AdjointVector) {
        assert!(seed.is_finite(), "adjoint seed must be finite");
        self.backward_seeded_into(&[(output, seed)], adjoints);
    }

    /// Reverse sweep with several seeded nodes at once (a general adjoint
    /// direction); seeds on the same node accumulate.
    pub fn backward_seeded_into(&self, seeds: &[(NodeId, f64)], adjoints: &mut AdjointVector) {
        adjoints.clear_to(self.nodes.len());
        let mut start = 0usize;
        for &(node, seed) in seeds {
            assert!(
                (node as usize) < self.nodes.len(),
                "node {node} is not on the tape (len {})",
                self.nodes.len()
            );
            adjoints.adjoints[node as usize] += seed;
            start = start.max(node as usize);
        }
        if seeds.is_empty() {
            return;
        }
        // One pass from the highest seeded node down to the leaves; every
        // node's adjoint is final by the time it is visited.
        for i in (0..=start).rev() {
            let node = &self.nodes[i];
            let adjoint = adjoints.adjoints[i];
            for k in 0..node.arity as usize {
                adjoints.adjoints[node.parents[k] as usize] += adjoint * node.partials[k];
            }
        }
    }

    fn next_id(&self) -> NodeId {
        let len = self.nodes.len();
        assert!(len < NodeId::MAX as usize, "tape is full");
        len as NodeId
    }
}
