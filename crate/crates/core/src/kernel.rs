//! Separable power-exponential correlation in the ρ-parametrization, and
//! covariance assembly.
//!
//! The per-input correlation is `c(x_i, x_j | ρ_ℓ) = ρ_ℓ^{|x_i − x_j|^a}`
//! with `ρ_ℓ ∈ (0, 1]`. This is the classical power-exponential kernel
//! `exp(−|x_i − x_j|^a / ψ_ℓ)` rewritten through `ρ_ℓ = exp(−1 / ψ_ℓ)`, so
//! ρ_ℓ is the correlation across the full range of the `[0, 1]`-scaled
//! input, and `ρ_ℓ = 1` means the input does not enter the correlation at
//! all. Anchoring ρ at the full input range keeps the Beta(α, 1) spike
//! narrow in effect-size terms, which is what makes the screening
//! thresholds of the benchmarks behave.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Kernel hyperparameters, fixed for one analysis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KernelConfig<T> {
    a: T,
}

impl<T: Scalar> KernelConfig<T> {
    /// Smoothness exponent `a`, required to lie in `(0, 2]`.
    pub fn new(a: T) -> Result<Self> {
        validate_exponent(a)?;
        Ok(KernelConfig { a })
    }

    pub fn a(&self) -> T {
        self.a
    }
}

fn validate_exponent<T: Scalar>(a: T) -> Result<()> {
    if !(a > T::zero() && a <= T::from_f(2.0)) {
        return Err(Error::invalid(format!(
            "kernel exponent a must lie in (0, 2], got {a}"
        )));
    }
    Ok(())
}

fn validate_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho > T::zero() && rho <= T::one()) {
        return Err(Error::invalid(format!(
            "correlation parameter rho must lie in (0, 1], got {rho}"
        )));
    }
    Ok(())
}

/// Per-input correlation parameters; the screening target.
///
/// `ρ_ℓ = 1` marks input `ℓ` as inert.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> RhoVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        for &r in &values {
            validate_rho(r)?;
        }
        Ok(RhoVector { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Copy with coordinate `l` removed.
    pub fn without(&self, l: usize) -> RhoVector<T> {
        let mut v = self.values.clone();
        v.remove(l);
        RhoVector { values: v }
    }
}

/// An `n × p` design of input configurations, every coordinate in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design<T> {
    mat: Matrix<T>,
}

impl<T: Scalar> Design<T> {
    pub fn new(mat: Matrix<T>) -> Result<Self> {
        if mat.n_rows() == 0 || mat.n_cols() == 0 {
            return Err(Error::invalid("design needs n >= 1 and p >= 1"));
        }
        if mat.data().iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::invalid("design entries must lie in [0, 1]"));
        }
        Ok(Design { mat })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Design::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.mat.n_rows()
    }

    pub fn p(&self) -> usize {
        self.mat.n_cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.mat.row(i)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.mat
    }

    /// Copy with column `l` removed.
    pub fn without_column(&self, l: usize) -> Design<T> {
        let rows: Vec<Vec<T>> = (0..self.n())
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.remove(l);
                r
            })
            .collect();
        Design {
            mat: Matrix::from_rows(&rows).expect("rows stay consistent"),
        }
    }

    /// Copy with one extra column appended.
    pub fn with_column(&self, col: &[T]) -> Result<Design<T>> {
        if col.len() != self.n() {
            return Err(Error::dim(format!(
                "appended column has {} entries for n = {}",
                col.len(),
                self.n()
            )));
        }
        let rows: Vec<Vec<T>> = (0..self.n())
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.push(col[i]);
                r
            })
            .collect();
        Design::from_rows(&rows)
    }
}

/// One-dimensional correlation `ρ^{|xi − xj|^a}`.
///
/// Exactly 1 at zero distance and for `ρ = 1`.
pub fn corr1d<T: Scalar>(xi: T, xj: T, rho: T, a: T) -> Result<T> {
    validate_rho(rho)?;
    validate_exponent(a)?;
    let d = (xi - xj).abs();
    Ok(rho.powf(d.powf(a)))
}

/// Full `n × n` correlation matrix: the product over inputs of [`corr1d`].
///
/// Symmetric with a unit diagonal by construction.
pub fn corr_matrix<T: Scalar>(design: &Design<T>, rho: &RhoVector<T>, a: T) -> Result<Matrix<T>> {
    if rho.len() != design.p() {
        return Err(Error::dim(format!(
            "rho has {} entries for a design with p = {}",
            rho.len(),
            design.p()
        )));
    }
    validate_exponent(a)?;
    let n = design.n();
    let mut r = Matrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            let mut c = T::one();
            for (l, &rl) in rho.values().iter().enumerate() {
                c = c * corr1d(design.row(i)[l], design.row(j)[l], rl, a)?;
            }
            r[(i, j)] = c;
            r[(j, i)] = c;
        }
    }
    Ok(r)
}

/// `Σ = σ² R + σ₀² I`.
pub fn assemble_covariance<T: Scalar>(r: &Matrix<T>, sigma2: T, sigma02: T) -> Result<Matrix<T>> {
    if !(sigma2 > T::zero()) || !(sigma02 > T::zero()) {
        return Err(Error::invalid(format!(
            "variances must be positive, got sigma2 = {sigma2}, sigma02 = {sigma02}"
        )));
    }
    if !r.is_square() {
        return Err(Error::dim("correlation matrix must be square"));
    }
    let n = r.n_rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = sigma2 * r[(i, j)];
            if i == j {
                v = v + sigma02;
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Precomputed pairwise distance weights `|x_ℓi − x_ℓj|^a`.
///
/// The correlation matrix for any ρ is then `exp(Σ_ℓ w_ℓ ln ρ_ℓ)` per pair,
/// which turns the `O(n² p)` `powf` work into a one-off cost; samplers
/// re-evaluate the correlation thousands of times on a fixed design. Terms
/// with `ρ_ℓ = 1` contribute an exact zero to the sum, so inert inputs drop
/// out bit-exactly, matching the plain product route.
#[derive(Clone, Debug)]
pub struct CorrWeights<T> {
    n: usize,
    p: usize,
    /// Pair-major layout: for each `i > j` (row order), the `p` weights.
    weights: Vec<T>,
}

impl<T: Scalar> CorrWeights<T> {
    pub fn new(design: &Design<T>, a: T) -> Result<Self> {
        validate_exponent(a)?;
        let n = design.n();
        let p = design.p();
        let mut weights = Vec::with_capacity(n * (n - 1) / 2 * p);
        for i in 0..n {
            for j in 0..i {
                let (ri, rj) = (design.row(i), design.row(j));
                for l in 0..p {
                    let d = (ri[l] - rj[l]).abs();
                    weights.push(d.powf(a));
                }
            }
        }
        Ok(CorrWeights { n, p, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Correlation matrix for the given ρ.
    pub fn corr_matrix(&self, rho: &RhoVector<T>) -> Result<Matrix<T>> {
        if rho.len() != self.p {
            return Err(Error::dim(format!(
                "rho has {} entries for p = {}",
                rho.len(),
                self.p
            )));
        }
        let log_rho: Vec<T> = rho.values().iter().map(|&r| r.ln()).collect();
        let mut out = Matrix::identity(self.n);
        let mut idx = 0;
        for i in 0..self.n {
            for j in 0..i {
                let w = &self.weights[idx..idx + self.p];
                idx += self.p;
                let mut s = T::zero();
                for (wk, &lr) in w.iter().zip(&log_rho) {
                    s = s + *wk * lr;
                }
                let c = s.exp();
                out[(i, j)] = c;
                out[(j, i)] = c;
            }
        }
        Ok(out)
    }
}

/// Power-exponential correlation in the ψ (range) parametrization,
/// `exp(−Σ_ℓ |u_ℓ − v_ℓ|^a / ψ_ℓ)`, used by the emulator over the combined
/// input/parameter space.
pub fn corr_psi<T: Scalar>(u: &[T], v: &[T], ranges: &[T], a: T) -> T {
    debug_assert_eq!(u.len(), v.len());
    debug_assert_eq!(u.len(), ranges.len());
    let mut s = T::zero();
    for l in 0..u.len() {
        let d = (u[l] - v[l]).abs();
        s = s + d.powf(a) / ranges[l];
    }
    (-s).exp()
}
