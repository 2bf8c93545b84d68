//! Dense linear algebra for small symmetric systems.
//!
//! The problem sizes here are modest (field designs up to a couple of
//! hundred points, parameter blocks below thirty), so a self-contained
//! row-major matrix with a Cholesky factorization and a Jacobi eigensolver
//! covers everything the samplers need. Keeping the factorization in-crate
//! also lets the jitter escalation policy live next to the code that needs
//! it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative jitter added to the diagonal on the first factorization retry.
pub const JITTER_INITIAL_REL: f64 = 1e-10;
/// Relative jitter beyond which factorization failure becomes an error.
pub const JITTER_MAX_REL: f64 = 1e-6;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("rows of unequal length"));
        }
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: n, cols, data })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .sum()
    }

    /// `self * v`.
    pub fn mat_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "mat_vec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Largest absolute difference against another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor<T> {
    l: Matrix<T>,
}

impl<T: Scalar> CholeskyFactor<T> {
    pub fn order(&self) -> usize {
        self.l.n_rows()
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    /// `log |A| = 2 Σ ln L_ii`.
    pub fn log_det(&self) -> T {
        let two = T::from_f(2.0);
        (0..self.order())
            .map(|i| self.l[(i, i)].ln())
            .sum::<T>()
            * two
    }

    /// Solve `L x = b` (forward substitution).
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.order();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let mut s = x[i];
            for j in 0..i {
                s = s - row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }

    /// Solve `Lᵀ x = b` (backward substitution).
    pub fn solve_lower_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.order();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - self.l[(j, i)] * x[j];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_lower_transpose(&self.solve_lower(b))
    }

    /// Quadratic form `bᵀ A⁻¹ b`.
    pub fn inv_quad_form(&self, b: &[T]) -> T {
        let z = self.solve_lower(b);
        z.iter().map(|&v| v * v).sum()
    }

    /// Draw `L ξ` with `ξ` standard normal components, consuming `d` draws
    /// from `rng` in coordinate order.
    pub fn correlated_normal<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let n = self.order();
        let xi: Vec<T> = (0..n).map(|_| T::standard_normal(rng)).collect();
        (0..n)
            .map(|i| {
                self.l.row(i)[..=i]
                    .iter()
                    .zip(&xi)
                    .fold(T::zero(), |acc, (&l, &x)| acc + l * x)
            })
            .collect()
    }
}

/// Plain Cholesky factorization; `None` when the matrix is not numerically
/// positive definite.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> Option<CholeskyFactor<T>> {
    assert!(a.is_square(), "cholesky requires a square matrix");
    let n = a.n_rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return None;
                }
                l[(i, j)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(CholeskyFactor { l })
}

/// Cholesky with the standard conditioning fix for Gaussian-process
/// covariances: on failure, add `10^-10 · (trace/n)` to the diagonal and
/// escalate by factors of ten up to `10^-6 · (trace/n)` before giving up.
///
/// Returns the factor and the jitter that was added (zero when the plain
/// factorization succeeded).
pub fn cholesky_with_jitter<T: Scalar>(a: &Matrix<T>) -> Result<(CholeskyFactor<T>, T)> {
    if let Some(f) = cholesky(a) {
        return Ok((f, T::zero()));
    }
    let n = a.n_rows();
    let scale = a.trace() / T::from_f(n as f64);
    let mut rel = JITTER_INITIAL_REL;
    while rel <= JITTER_MAX_REL * 1.5 {
        let jitter = scale * T::from_f(rel);
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] = shifted[(i, i)] + jitter;
        }
        if let Some(f) = cholesky(&shifted) {
            log::debug!("factorization needed jitter {:e}", jitter.to_f());
            return Ok((f, jitter));
        }
        rel *= 10.0;
    }
    Err(Error::FactorizationFailed {
        n,
        last_jitter: (scale * T::from_f(JITTER_MAX_REL)).to_f(),
    })
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` with `vectors` holding eigenvectors as
/// columns, `A = V diag(values) Vᵀ`. Intended for small matrices (parameter
/// blocks), not for the field covariance.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    assert!(a.is_square());
    let n = a.n_rows();
    let mut m = a.clone();
    let mut v = Matrix::<T>::identity(n);
    let tol = T::from_f(1e-14);
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m[(i, j)] * m[(i, j)];
            }
        }
        let scale = m.trace().abs().max(T::one());
        if off.sqrt() <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let tau = (aqq - app) / (T::from_f(2.0) * apq);
                let t = {
                    let sign = if tau >= T::zero() { T::one() } else { -T::one() };
                    sign / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[(i, i)]).collect();
    (values, v)
}

/// Rebuild `V diag(values) Vᵀ`.
pub fn from_eigen<T: Scalar>(values: &[T], vectors: &Matrix<T>) -> Matrix<T> {
    let n = values.len();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = T::zero();
            for (k, &lam) in values.iter().enumerate() {
                s = s + vectors[(i, k)] * lam * vectors[(j, k)];
            }
            out[(i, j)] = s;
        }
    }
    out
}
