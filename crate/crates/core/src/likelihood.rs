//! Multivariate-normal log-density of the field data.
//!
//! The sampling model is `y ~ N_n(f(θ), σ² R + σ₀² I)`. The log-density is
//! computed through a triangular factorization of the covariance: the
//! log-determinant from the factor diagonal, the quadratic form by forward
//! substitution.

use crate::error::{Error, Result};
use crate::kernel::{assemble_covariance, corr_matrix, Design, KernelConfig, RhoVector};
use crate::linalg::{cholesky_with_jitter, Matrix};
use crate::scalar::Scalar;

/// Field observations paired with the design rows they were taken at.
#[derive(Clone, Debug)]
pub struct FieldObservations<T> {
    y: Vec<T>,
    design: Design<T>,
}

impl<T: Scalar> FieldObservations<T> {
    pub fn new(design: Design<T>, y: Vec<T>) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::dim(format!(
                "{} observations for a design with n = {}",
                y.len(),
                design.n()
            )));
        }
        Ok(FieldObservations { y, design })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn design(&self) -> &Design<T> {
        &self.design
    }

    /// Same observations on a different design (used by the RDVS
    /// augmentation; the row count must match).
    pub fn with_design(&self, design: Design<T>) -> Result<Self> {
        FieldObservations::new(design, self.y.clone())
    }
}

/// A deterministic computer model `f(x, θ)`.
///
/// Implementations that are `Sync` may be used by the parallel replication
/// runners; a non-`Sync` implementation restricts the pipeline to serial
/// execution, which the type system enforces at the call site.
pub trait ComputerModel<T: Scalar> {
    fn eval(&self, x: &[T], theta: &[T]) -> Result<T>;
}

impl<T: Scalar, F> ComputerModel<T> for F
where
    F: Fn(&[T], &[T]) -> T,
{
    fn eval(&self, x: &[T], theta: &[T]) -> Result<T> {
        Ok(self(x, theta))
    }
}

/// The identically-zero model: screening a process with no simulator mean.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroModel;

impl<T: Scalar> ComputerModel<T> for ZeroModel {
    fn eval(&self, _x: &[T], _theta: &[T]) -> Result<T> {
        Ok(T::zero())
    }
}

/// Affine rescaling of a model's output, `(f(x, θ) − offset) / scale`.
///
/// Needed when the observations have been normalized at ingestion: the model
/// must be carried onto the same scale.
#[derive(Clone, Debug)]
pub struct ScaledModel<M> {
    pub inner: M,
    pub offset: f64,
    pub scale: f64,
}

impl<T: Scalar, M: ComputerModel<T>> ComputerModel<T> for ScaledModel<M> {
    fn eval(&self, x: &[T], theta: &[T]) -> Result<T> {
        let f = self.inner.eval(x, theta)?;
        Ok((f - T::from_f(self.offset)) / T::from_f(self.scale))
    }
}

/// Evaluate `f(θ)` over every design row.
pub fn mean_vector<T: Scalar, M: ComputerModel<T> + ?Sized>(
    model: &M,
    design: &Design<T>,
    theta: &[T],
) -> Result<Vec<T>> {
    (0..design.n())
        .map(|i| model.eval(design.row(i), theta))
        .collect()
}

/// Exact log-density of `N(mean, cov)` at `y`.
///
/// `cov` must be symmetric positive definite up to the jitter policy.
pub fn mvn_logpdf<T: Scalar>(y: &[T], mean: &[T], cov: &Matrix<T>) -> Result<T> {
    let n = y.len();
    if mean.len() != n || cov.n_rows() != n || cov.n_cols() != n {
        return Err(Error::dim(format!(
            "mvn_logpdf: y has {n} entries, mean {}, cov {}x{}",
            mean.len(),
            cov.n_rows(),
            cov.n_cols()
        )));
    }
    let (factor, _) = cholesky_with_jitter(cov)?;
    let resid: Vec<T> = y.iter().zip(mean).map(|(&a, &b)| a - b).collect();
    let quad = factor.inv_quad_form(&resid);
    let half = T::from_f(0.5);
    Ok(-half * (T::from_f(n as f64) * T::ln_2pi() + factor.log_det() + quad))
}

/// Log-likelihood of the field data under the direct (fast-model) pipeline:
/// `mvn_logpdf(y, f(θ), σ² R(ρ) + σ₀² I)`.
pub fn field_log_likelihood<T: Scalar, M: ComputerModel<T> + ?Sized>(
    data: &FieldObservations<T>,
    kernel: &KernelConfig<T>,
    theta: &[T],
    rho: &RhoVector<T>,
    sigma2: T,
    sigma02: T,
    model: &M,
) -> Result<T> {
    let mean = mean_vector(model, data.design(), theta)?;
    let r = corr_matrix(data.design(), rho, kernel.a())?;
    let cov = assemble_covariance(&r, sigma2, sigma02)?;
    mvn_logpdf(data.y(), &mean, &cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::scalar::LN_2PI;
    use proptest::prelude::*;

    #[test]
    fn standard_normal_at_origin() {
        let cov = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let lp = mvn_logpdf(&[0.0], &[0.0], &cov).unwrap();
        assert!((lp - (-0.5 * LN_2PI)).abs() < 1e-12);
        assert!((lp - (-0.918_938_533_204_672_7)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_cov_factorizes_into_univariate_terms() {
        let vars = [0.5, 2.0, 1.3];
        let y = [0.3, -1.2, 0.7];
        let mean = [0.0, 0.5, -0.4];
        let mut cov = Matrix::<f64>::zeros(3, 3);
        for (i, &v) in vars.iter().enumerate() {
            cov[(i, i)] = v;
        }
        let joint = mvn_logpdf(&y, &mean, &cov).unwrap();
        let uni: f64 = (0..3)
            .map(|i| {
                let z = (y[i] - mean[i]).powi(2) / vars[i];
                -0.5 * (LN_2PI + vars[i].ln() + z)
            })
            .sum();
        assert!((joint - uni).abs() < 1e-12);
    }

    /// Oracle: log-density from an explicit inverse and determinant, using a
    /// different linear-algebra implementation (nalgebra).
    fn dense_inverse_oracle(y: &[f64], mean: &[f64], cov: &Matrix<f64>) -> f64 {
        let n = y.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| cov[(i, j)]);
        let det = m.determinant();
        let inv = m.try_inverse().expect("oracle inverse");
        let r = nalgebra::DVector::from_iterator(n, y.iter().zip(mean).map(|(&a, &b)| a - b));
        let quad = (&inv * &r).dot(&r);
        -0.5 * (n as f64 * LN_2PI + det.ln() + quad)
    }

    fn random_spd(n: usize, rng: &mut impl rand::Rng) -> Matrix<f64> {
        // A Aᵀ + n·I is comfortably positive definite.
        let mut a = Matrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = f64::standard_normal(rng);
            }
        }
        let mut s = Matrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = if i == j { n as f64 } else { 0.0 };
                for k in 0..n {
                    acc += a[(i, k)] * a[(j, k)];
                }
                s[(i, j)] = acc;
            }
        }
        s
    }

    #[test]
    fn matches_dense_inverse_oracle_on_random_spd() {
        let mut rng = rng_from_seed(11);
        for trial in 0..20 {
            let n = 2 + (trial % 5);
            let cov = random_spd(n, &mut rng);
            let y: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
            let mean: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
            let lp = mvn_logpdf(&y, &mean, &cov).unwrap();
            let oracle = dense_inverse_oracle(&y, &mean, &cov);
            assert!(
                (lp - oracle).abs() < 1e-8,
                "trial {trial}: {lp} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn mvn_rejects_dimension_mismatch() {
        let cov = Matrix::<f64>::identity(2);
        assert!(mvn_logpdf(&[0.0], &[0.0, 0.0], &cov).is_err());
    }

    #[test]
    fn zero_residual_single_point_approaches_nugget_only_density() {
        // n = 1, y = f(x, θ), σ² small: density tends to N(0, σ₀² = 1).
        let design = Design::from_rows(&[vec![0.5]]).unwrap();
        let model = |x: &[f64], theta: &[f64]| x[0] + theta[0];
        let y = vec![model(&[0.5], &[0.25])];
        let data = FieldObservations::new(design, y).unwrap();
        let kernel = KernelConfig::new(1.9).unwrap();
        let rho = RhoVector::new(vec![0.5]).unwrap();
        let lp =
            field_log_likelihood(&data, &kernel, &[0.25], &rho, 1e-12, 1.0, &model).unwrap();
        assert!((lp - (-0.5 * LN_2PI)).abs() < 1e-10);
    }

    #[test]
    fn zero_residuals_with_spherical_cov() {
        // Residuals all zero, Σ = c·I → −(n/2)·ln(2πc).
        let design = Design::from_rows(&[vec![0.1], vec![0.9]]).unwrap();
        let c = 0.7;
        let y = vec![0.0, 0.0];
        let mean = vec![0.0, 0.0];
        let mut cov = Matrix::<f64>::zeros(2, 2);
        cov[(0, 0)] = c;
        cov[(1, 1)] = c;
        let lp = mvn_logpdf(&y, &mean, &cov).unwrap();
        assert!((lp - (-(LN_2PI + c.ln()))).abs() < 1e-12);
        drop(design);
    }

    #[test]
    fn field_log_likelihood_composes_module_outputs() {
        let design =
            Design::from_rows(&[vec![0.2, 0.7], vec![0.5, 0.1], vec![0.9, 0.8]]).unwrap();
        let y = vec![1.2, 0.4, -0.3];
        let data = FieldObservations::new(design.clone(), y.clone()).unwrap();
        let kernel = KernelConfig::new(1.9).unwrap();
        let rho = RhoVector::new(vec![0.4, 0.9]).unwrap();
        let theta = [0.3];
        let model = |x: &[f64], t: &[f64]| x[0] * 2.0 + t[0];
        let (s2, s02) = (1.4, 0.02);

        let direct =
            field_log_likelihood(&data, &kernel, &theta, &rho, s2, s02, &model).unwrap();

        let mean = mean_vector(&model, &design, &theta).unwrap();
        let r = corr_matrix(&design, &rho, 1.9).unwrap();
        let cov = assemble_covariance(&r, s2, s02).unwrap();
        let composed = mvn_logpdf(&y, &mean, &cov).unwrap();
        assert_eq!(direct, composed);
    }

    #[test]
    fn scaled_model_matches_manual_transform() {
        let model = |x: &[f64], _t: &[f64]| 3.0 * x[0];
        let scaled = ScaledModel { inner: model, offset: 1.0, scale: 2.0 };
        let v = scaled.eval(&[0.5], &[]).unwrap();
        assert!((v - (1.5 - 1.0) / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn translation_invariance(
            shift in -5.0..5.0f64,
            y0 in -2.0..2.0f64,
            y1 in -2.0..2.0f64,
        ) {
            let cov = Matrix::from_rows(&[vec![1.3, 0.4], vec![0.4, 0.9]]).unwrap();
            let y = [y0, y1];
            let mean = [0.1, -0.2];
            let base = mvn_logpdf(&y, &mean, &cov).unwrap();
            let shifted = mvn_logpdf(
                &[y0 + shift, y1 + shift],
                &[mean[0] + shift, mean[1] + shift],
                &cov,
            ).unwrap();
            prop_assert!((base - shifted).abs() < 1e-10);
        }

        #[test]
        fn density_is_maximal_at_the_mean(y0 in -3.0..3.0f64, y1 in -3.0..3.0f64) {
            let cov = Matrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 2.0]]).unwrap();
            let mean = [0.5, -0.5];
            let at_mean = mvn_logpdf(&mean, &mean, &cov).unwrap();
            let elsewhere = mvn_logpdf(&[y0, y1], &mean, &cov).unwrap();
            prop_assert!(elsewhere <= at_mean + 1e-12);
        }
    }
}
