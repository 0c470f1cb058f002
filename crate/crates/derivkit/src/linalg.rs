//! Minimal dense matrix/vector support: products, transpose, norms, an SPD
//! solve, and the damped pseudo-inverse used by the root finder.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::math;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinalgError {
    /// Operand shapes do not line up.
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// A Cholesky pivot was not strictly positive: the matrix is not SPD.
    NotSpd {
        pivot: usize,
    },
    /// `J·Jᵀ` is singular with zero damping; retry with `lambda > 0`.
    RankDeficient,
    NegativeDamping,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            LinalgError::NotSpd { pivot } => {
                write!(f, "matrix is not symmetric positive definite (pivot {pivot})")
            }
            LinalgError::RankDeficient => {
                write!(f, "J·Jᵀ is rank-deficient; use damping lambda > 0")
            }
            LinalgError::NegativeDamping => write!(f, "damping must be non-negative and finite"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from a row-major slice; `data` must hold `rows * cols` values.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            data: data.to_vec(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `A·x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (i, out_i) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (a, b) in self.row(i).iter().zip(x) {
                acc += a * b;
            }
            *out_i = acc;
        }
        Ok(out)
    }

    /// `A·B`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if rhs.rows != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: rhs.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    math::sqrt(x.iter().map(|v| v * v).sum())
}

/// Solves `A·x = b` for symmetric positive definite `A` by Cholesky
/// factorization.
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let k = a.rows;
    if a.cols != k {
        return Err(LinalgError::DimensionMismatch {
            expected: k,
            got: a.cols,
        });
    }
    if b.len() != k {
        return Err(LinalgError::DimensionMismatch {
            expected: k,
            got: b.len(),
        });
    }

    // lower-triangular factor L with A = L·Lᵀ
    let mut l = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let mut acc = a[(i, j)];
            for p in 0..j {
                acc -= l[(i, p)] * l[(j, p)];
            }
            if i == j {
                // !(acc > 0) also catches NaN pivots
                if !(acc > 0.0) {
                    return Err(LinalgError::NotSpd { pivot: i });
                }
                l[(i, j)] = math::sqrt(acc);
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }

    // forward substitution L·y = b
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut acc = b[i];
        for p in 0..i {
            acc -= l[(i, p)] * y[p];
        }
        y[i] = acc / l[(i, i)];
    }
    // back substitution Lᵀ·x = y
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = y[i];
        for p in i + 1..k {
            acc -= l[(p, i)] * x[p];
        }
        x[i] = acc / l[(i, i)];
    }
    Ok(x)
}

/// Damping configuration for [`pinv_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedPseudoInverseConfig {
    pub lambda: f64,
}

impl DampedPseudoInverseConfig {
    pub const DEFAULT_LAMBDA: f64 = 1e-8;

    pub fn new(lambda: f64) -> Result<Self, LinalgError> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(Self { lambda })
        } else {
            Err(LinalgError::NegativeDamping)
        }
    }
}

impl Default for DampedPseudoInverseConfig {
    fn default() -> Self {
        Self {
            lambda: Self::DEFAULT_LAMBDA,
        }
    }
}

/// Damped minimum-norm solve `Jᵀ(J·Jᵀ + λI)⁻¹ r` for a wide system
/// (`rows ≤ cols`). With `λ = 0` and full row rank this is the Moore–Penrose
/// solution of `J·Δ = r`.
pub fn pinv_solve(
    j: &DenseMatrix,
    r: &[f64],
    cfg: &DampedPseudoInverseConfig,
) -> Result<Vec<f64>, LinalgError> {
    let (m, n) = (j.rows, j.cols);
    if m > n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: m });
    }
    if r.len() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: m,
            got: r.len(),
        });
    }
    if !(cfg.lambda.is_finite() && cfg.lambda >= 0.0) {
        return Err(LinalgError::NegativeDamping);
    }

    // gram = J·Jᵀ + λI, an m×m SPD system
    let mut gram = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for k in 0..=i {
            let mut acc = 0.0;
            for (a, b) in j.row(i).iter().zip(j.row(k)) {
                acc += a * b;
            }
            gram[(i, k)] = acc;
            gram[(k, i)] = acc;
        }
        gram[(i, i)] += cfg.lambda;
    }

    let y = solve_spd(&gram, r).map_err(|e| {
        if cfg.lambda == 0.0 {
            LinalgError::RankDeficient
        } else {
            e
        }
    })?;

    // Δ = Jᵀ·y
    let mut out = vec![0.0; n];
    for i in 0..m {
        let yi = y[i];
        for (o, a) in out.iter_mut().zip(j.row(i)) {
            *o += a * yi;
        }
    }
    Ok(out)
}
