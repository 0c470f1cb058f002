//! Benchmark and kinematics harness (placeholder).
