//! Gaussian-process emulator for slow computer models.
//!
//! The emulator is fitted by modularization: it sees only the design runs
//! `f(D)`, never the field data — the fit function's signature enforces
//! that. A constant-mean process with the power-exponential kernel in the
//! ψ (range) parametrization is fitted by maximizing the profile marginal
//! likelihood over the log-ranges (the process variance and the mean are
//! profiled out in closed form), with multi-start quasi-Newton search.
//! After the fit, the parameters are frozen and the emulator only ever
//! predicts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{corr_matrix, corr_psi, assemble_covariance, Design, KernelConfig, RhoVector};
use crate::likelihood::{mvn_logpdf, FieldObservations};
use crate::linalg::{cholesky_with_jitter, CholeskyFactor, Matrix};
use crate::mcmc::FieldModel;
use crate::optimize::{minimize_bfgs, BfgsOptions};
use crate::rng::{derive_seed, TAG_EMULATOR};
use crate::scalar::Scalar;
use crate::scenarios::lhd;

/// Lower bound for the profiled process variance; hit only for degenerate
/// (constant) training outputs.
pub const SIGMA_F2_FLOOR: f64 = 1e-12;

/// Model runs on a design over the combined input/parameter space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmulatorDesign<T> {
    points: Matrix<T>,
    outputs: Vec<T>,
}

impl<T: Scalar> EmulatorDesign<T> {
    pub fn new(points: Matrix<T>, outputs: Vec<T>) -> Result<Self> {
        let n = points.n_rows();
        let d = points.n_cols();
        if outputs.len() != n {
            return Err(Error::dim(format!(
                "{} outputs for {n} design rows",
                outputs.len()
            )));
        }
        if n < d + 2 {
            return Err(Error::invalid(format!(
                "emulator fit needs at least dims + 2 = {} runs, got {n}",
                d + 2
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if points.row(i) == points.row(j) {
                    return Err(Error::invalid(format!(
                        "design rows {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(EmulatorDesign { points, outputs })
    }

    pub fn n_runs(&self) -> usize {
        self.points.n_rows()
    }

    pub fn dims(&self) -> usize {
        self.points.n_cols()
    }

    pub fn points(&self) -> &Matrix<T> {
        &self.points
    }

    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }
}

/// Multi-start schedule of the fit.
#[derive(Clone, Debug)]
pub struct EmulatorFitOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub bfgs: BfgsOptions,
    /// Box in log-range space the starts are spread over.
    pub start_log_range: (f64, f64),
}

impl EmulatorFitOptions {
    pub fn new(seed: u64) -> Self {
        EmulatorFitOptions {
            n_starts: 8,
            seed,
            bfgs: BfgsOptions::default(),
            start_log_range: ((0.02f64).ln(), (20.0f64).ln()),
        }
    }
}

/// A fitted, frozen emulator: plug-in ranges, process variance, constant
/// mean, and the factorized design correlation.
#[derive(Clone, Debug)]
pub struct FittedEmulator<T> {
    a: T,
    ranges: Vec<T>,
    sigma_f2: T,
    beta: T,
    design: EmulatorDesign<T>,
    chol: CholeskyFactor<T>,
    /// `C⁻¹ (f − β·1)`.
    resid_solve: Vec<T>,
}

fn design_corr<T: Scalar>(points: &Matrix<T>, ranges: &[T], a: T) -> Matrix<T> {
    let n = points.n_rows();
    let mut c = Matrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            let v = corr_psi(points.row(i), points.row(j), ranges, a);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Profiled parts of the marginal likelihood for fixed ranges: the GLS
/// constant mean and the plug-in process variance.
fn profile_parts<T: Scalar>(
    design: &EmulatorDesign<T>,
    ranges: &[T],
    a: T,
) -> Result<(CholeskyFactor<T>, T, T, Vec<T>)> {
    let c = design_corr(design.points(), ranges, a);
    let (chol, _) = cholesky_with_jitter(&c)?;
    let n = design.n_runs();
    let ones = vec![T::one(); n];
    let u1 = chol.solve(&ones);
    let uf = chol.solve(design.outputs());
    let denom: T = u1.iter().copied().sum();
    let beta = uf.iter().copied().sum::<T>() / denom;
    let resid_solve: Vec<T> = uf.iter().zip(&u1).map(|(&a_, &b)| a_ - beta * b).collect();
    let rss: T = design
        .outputs()
        .iter()
        .zip(&resid_solve)
        .map(|(&f, &s)| (f - beta) * s)
        .sum();
    let sigma_f2 = (rss / T::from_f(n as f64)).max(T::from_f(SIGMA_F2_FLOOR));
    Ok((chol, beta, sigma_f2, resid_solve))
}

/// Negative profile log-likelihood up to constants: `½(n ln σ̂² + ln |C|)`.
fn neg_profile_loglik<T: Scalar>(design: &EmulatorDesign<T>, log_psi: &[T], a: T) -> T {
    let ranges: Vec<T> = log_psi.iter().map(|&v| v.exp()).collect();
    if ranges.iter().any(|&r| !(r > T::zero()) || !r.is_finite()) {
        return T::infinity();
    }
    match profile_parts(design, &ranges, a) {
        Ok((chol, _, sigma_f2, _)) => {
            let n = T::from_f(design.n_runs() as f64);
            T::from_f(0.5) * (n * sigma_f2.ln() + chol.log_det())
        }
        Err(_) => T::infinity(),
    }
}

/// Fit the emulator on its design runs only.
pub fn fit_emulator<T: Scalar>(
    design: &EmulatorDesign<T>,
    kernel: &KernelConfig<T>,
    opts: &EmulatorFitOptions,
) -> Result<FittedEmulator<T>> {
    if opts.n_starts == 0 {
        return Err(Error::invalid("need at least one optimizer start"));
    }
    let d = design.dims();
    let a = kernel.a();
    let (lo, hi) = opts.start_log_range;
    let grid = lhd::<T>(opts.n_starts, d, derive_seed(opts.seed, TAG_EMULATOR));
    let starts: Vec<Vec<T>> = (0..opts.n_starts)
        .map(|i| {
            grid.row(i)
                .iter()
                .map(|&u| T::from_f(lo) + (T::from_f(hi) - T::from_f(lo)) * u)
                .collect()
        })
        .collect();

    let outcomes: Vec<(usize, crate::optimize::BfgsResult<T>)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, start)| {
            let result = minimize_bfgs(
                |log_psi: &[T]| neg_profile_loglik(design, log_psi, a),
                start,
                &opts.bfgs,
            );
            (i, result)
        })
        .collect();

    let mut best: Option<&(usize, crate::optimize::BfgsResult<T>)> = None;
    for o in &outcomes {
        if !o.1.value.is_finite() {
            continue;
        }
        best = match best {
            None => Some(o),
            Some(b) if o.1.value < b.1.value => Some(o),
            Some(b) => Some(b),
        };
    }
    let Some((_, winner)) = best else {
        return Err(Error::OptimizationFailed(format!(
            "no finite profile likelihood from {} starts",
            opts.n_starts
        )));
    };

    let ranges: Vec<T> = winner.x.iter().map(|&v| v.exp()).collect();
    FittedEmulator::assemble(a, ranges, design.clone())
}

impl<T: Scalar> FittedEmulator<T> {
    /// Build the frozen emulator from plug-in ranges: refactorize the design
    /// correlation and recompute the GLS mean and process variance.
    pub fn assemble(a: T, ranges: Vec<T>, design: EmulatorDesign<T>) -> Result<Self> {
        if ranges.len() != design.dims() {
            return Err(Error::dim(format!(
                "{} ranges for {} design dimensions",
                ranges.len(),
                design.dims()
            )));
        }
        let (chol, beta, sigma_f2, resid_solve) = profile_parts(&design, &ranges, a)?;
        Ok(FittedEmulator {
            a,
            ranges,
            sigma_f2,
            beta,
            design,
            chol,
            resid_solve,
        })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn ranges(&self) -> &[T] {
        &self.ranges
    }

    pub fn sigma_f2(&self) -> T {
        self.sigma_f2
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn dims(&self) -> usize {
        self.design.dims()
    }

    pub fn design(&self) -> &EmulatorDesign<T> {
        &self.design
    }

    fn cross_corr(&self, u: &[T]) -> Vec<T> {
        (0..self.design.n_runs())
            .map(|r| corr_psi(u, self.design.points().row(r), &self.ranges, self.a))
            .collect()
    }

    /// Conditional mean at one point of the combined space.
    pub fn predict_mean(&self, u: &[T]) -> T {
        let c = self.cross_corr(u);
        self.beta
            + c.iter()
                .zip(&self.resid_solve)
                .fold(T::zero(), |acc, (&ci, &si)| acc + ci * si)
    }

    /// Conditional variance at one point, as a fraction of σ_f².
    pub fn conditional_unit_variance(&self, u: &[T]) -> T {
        let c = self.cross_corr(u);
        let v = self.chol.solve_lower(&c);
        (T::one() - v.iter().map(|&x| x * x).sum::<T>()).max(T::zero())
    }
}

/// Conditional mean `e(θ)` at the field configurations paired with one θ,
/// and the conditional correlation matrix `K` (the conditional covariance
/// divided by σ_f²).
pub fn emulator_mean_cov<T: Scalar>(
    em: &FittedEmulator<T>,
    design: &Design<T>,
    theta: &[T],
) -> Result<(Vec<T>, Matrix<T>)> {
    if design.p() + theta.len() != em.dims() {
        return Err(Error::dim(format!(
            "p + k = {} does not match the emulator's {} dimensions",
            design.p() + theta.len(),
            em.dims()
        )));
    }
    let n = design.n();
    let points: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut u = design.row(i).to_vec();
            u.extend_from_slice(theta);
            u
        })
        .collect();

    let mut mean = Vec::with_capacity(n);
    let mut solved = Vec::with_capacity(n);
    for u in &points {
        let c = em.cross_corr(u);
        mean.push(
            em.beta
                + c.iter()
                    .zip(&em.resid_solve)
                    .fold(T::zero(), |acc, (&ci, &si)| acc + ci * si),
        );
        solved.push(em.chol.solve_lower(&c));
    }

    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let prior = if i == j {
                T::one()
            } else {
                corr_psi(&points[i], &points[j], em.ranges(), em.a)
            };
            let dot = solved[i]
                .iter()
                .zip(&solved[j])
                .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            let v = prior - dot;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok((mean, k))
}

/// Log-likelihood of the field data under the emulator-extended model:
/// `mvn_logpdf(y, e(θ), σ_f² K + σ² R + σ₀² I)`.
pub fn extended_log_likelihood<T: Scalar>(
    data: &FieldObservations<T>,
    kernel: &KernelConfig<T>,
    em: &FittedEmulator<T>,
    theta: &[T],
    rho: &RhoVector<T>,
    sigma2: T,
    sigma02: T,
    sigma_f2: T,
) -> Result<T> {
    if sigma_f2 < T::zero() {
        return Err(Error::invalid("sigma_f2 must be non-negative"));
    }
    let (mean, k) = emulator_mean_cov(em, data.design(), theta)?;
    let r = corr_matrix(data.design(), rho, kernel.a())?;
    let mut cov = assemble_covariance(&r, sigma2, sigma02)?;
    let n = data.n();
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = cov[(i, j)] + sigma_f2 * k[(i, j)];
        }
    }
    mvn_logpdf(data.y(), &mean, &cov)
}

/// Field model backed by a fitted emulator: mean `e(θ)` and extra
/// covariance `σ_f² K(θ)`, recomputed for every θ proposal (the design
/// factorization is the cached θ-independent part).
pub struct EmulatedFieldModel<'a, T> {
    em: &'a FittedEmulator<T>,
    design: &'a Design<T>,
}

impl<'a, T: Scalar> EmulatedFieldModel<'a, T> {
    pub fn new(em: &'a FittedEmulator<T>, design: &'a Design<T>) -> Self {
        EmulatedFieldModel { em, design }
    }
}

impl<'a, T: Scalar> FieldModel<T> for EmulatedFieldModel<'a, T> {
    fn mean_and_extra_cov(&self, theta: &[T]) -> Result<(Vec<T>, Option<Matrix<T>>)> {
        let (mean, mut k) = emulator_mean_cov(self.em, self.design, theta)?;
        let s = self.em.sigma_f2();
        let n = k.n_rows();
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = k[(i, j)] * s;
            }
        }
        Ok((mean, Some(k)))
    }
}

/// On-disk form of a fitted emulator: plug-in parameters plus the design
/// data; the factorization is rebuilt on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmulatorRecord {
    pub schema_version: u32,
    pub a: f64,
    pub ranges: Vec<f64>,
    pub sigma_f2: f64,
    pub beta: f64,
    pub points: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

impl<T: Scalar> FittedEmulator<T> {
    pub fn to_record(&self) -> EmulatorRecord {
        let points = (0..self.design.n_runs())
            .map(|i| self.design.points().row(i).iter().map(|&v| v.to_f()).collect())
            .collect();
        EmulatorRecord {
            schema_version: 1,
            a: self.a.to_f(),
            ranges: self.ranges.iter().map(|&v| v.to_f()).collect(),
            sigma_f2: self.sigma_f2.to_f(),
            beta: self.beta.to_f(),
            points,
            outputs: self.design.outputs().iter().map(|&v| v.to_f()).collect(),
        }
    }

    pub fn from_record(record: &EmulatorRecord) -> Result<Self> {
        let rows: Vec<Vec<T>> = record
            .points
            .iter()
            .map(|r| r.iter().map(|&v| T::from_f(v)).collect())
            .collect();
        let points = Matrix::from_rows(&rows)?;
        let outputs = record.outputs.iter().map(|&v| T::from_f(v)).collect();
        let design = EmulatorDesign::new(points, outputs)?;
        let ranges = record.ranges.iter().map(|&v| T::from_f(v)).collect();
        FittedEmulator::assemble(T::from_f(record.a), ranges, design)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean as smean, sd};

    fn grid_design_1d(n: usize, f: impl Fn(f64) -> f64) -> EmulatorDesign<f64> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let outputs = rows.iter().map(|r| f(r[0])).collect();
        EmulatorDesign::new(Matrix::from_rows(&rows).unwrap(), outputs).unwrap()
    }

    #[test]
    fn design_validation() {
        let points = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![1.0], vec![0.5]]).unwrap();
        assert!(EmulatorDesign::new(points, vec![0.0; 4]).is_err());
        let points = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(EmulatorDesign::new(points, vec![0.0; 2]).is_err(), "too few runs");
    }

    #[test]
    fn constant_outputs_hit_the_variance_floor() {
        let design = grid_design_1d(8, |_| 3.25);
        let em = fit_emulator(
            &design,
            &KernelConfig::new(1.9).unwrap(),
            &EmulatorFitOptions::new(5),
        )
        .unwrap();
        assert_eq!(em.sigma_f2(), SIGMA_F2_FLOOR);
        for &x in &[0.13, 0.5, 0.92] {
            assert!((em.predict_mean(&[x]) - 3.25).abs() < 1e-8);
        }
    }

    #[test]
    fn sine_fit_beats_the_sample_spread_on_holdout() {
        let f = |x: f64| (std::f64::consts::TAU * x).sin();
        let design = grid_design_1d(15, f);
        let em = fit_emulator(
            &design,
            &KernelConfig::new(1.9).unwrap(),
            &EmulatorFitOptions::new(7),
        )
        .unwrap();
        let holdout: Vec<f64> = (0..97).map(|i| 0.005 + 0.99 * i as f64 / 96.0).collect();
        let truth: Vec<f64> = holdout.iter().map(|&x| f(x)).collect();
        let preds: Vec<f64> = holdout.iter().map(|&x| em.predict_mean(&[x])).collect();
        let rmse = (truth
            .iter()
            .zip(&preds)
            .map(|(t, p)| (t - p).powi(2))
            .sum::<f64>()
            / truth.len() as f64)
            .sqrt();
        assert!(
            rmse < sd(&truth),
            "rmse {rmse} vs sd {}",
            sd(&truth)
        );
        assert!(rmse < 0.05, "sine should be easy: rmse {rmse}");
        drop(smean(&truth));
    }

    #[test]
    fn refit_is_deterministic() {
        let f = |x: f64| x * x + 0.3 * x;
        let design = grid_design_1d(10, f);
        let opts = EmulatorFitOptions::new(11);
        let kernel = KernelConfig::new(1.9).unwrap();
        let a = fit_emulator(&design, &kernel, &opts).unwrap();
        let b = fit_emulator(&design, &kernel, &opts).unwrap();
        assert_eq!(a.ranges(), b.ranges());
        assert_eq!(a.sigma_f2(), b.sigma_f2());
        assert_eq!(a.beta(), b.beta());
    }

    #[test]
    fn interpolates_at_design_points() {
        let f = |x: f64| 1.0 + 2.0 * x;
        let design = grid_design_1d(9, f);
        let em =
            FittedEmulator::assemble(1.9, vec![0.5], design.clone()).unwrap();
        for i in 0..design.n_runs() {
            let u = design.points().row(i);
            assert!(
                (em.predict_mean(u) - design.outputs()[i]).abs() < 1e-8,
                "mean misses f at design point {i}"
            );
            assert!(
                em.conditional_unit_variance(u) <= 1e-8,
                "conditional variance at a design point"
            );
        }
    }

    #[test]
    fn far_point_variance_approaches_the_prior_variance() {
        // Design clustered near 0; short ranges decay the correlation long
        // before the probe point.
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![0.03 * i as f64]).collect();
        let outputs: Vec<f64> = rows.iter().map(|r| r[0].sin()).collect();
        let design = EmulatorDesign::new(Matrix::from_rows(&rows).unwrap(), outputs).unwrap();
        let em = FittedEmulator::assemble(1.9, vec![0.01], design).unwrap();
        assert!(em.conditional_unit_variance(&[0.95]) > 0.99);
    }

    #[test]
    fn conditional_matrix_is_psd_and_symmetric() {
        let f = |x: f64| (3.0 * x).cos();
        let em_design = grid_design_1d(8, f);
        let em = FittedEmulator::assemble(1.9, vec![0.3], em_design).unwrap();
        let field = Design::from_rows(&[vec![0.11], vec![0.43], vec![0.77]]).unwrap();
        let (_, k) = emulator_mean_cov(&em, &field, &[]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k[(i, j)], k[(j, i)]);
            }
        }
        let mut shifted = k.clone();
        for i in 0..3 {
            shifted[(i, i)] += 1e-10;
        }
        assert!(crate::linalg::cholesky_with_jitter(&shifted).is_ok());
    }

    #[test]
    fn extended_likelihood_compositional_identity() {
        let f = |x: f64| x * (1.0 - x);
        let em_design = grid_design_1d(9, f);
        let em = FittedEmulator::assemble(1.9, vec![0.4], em_design).unwrap();
        let field = Design::from_rows(&[vec![0.2], vec![0.5], vec![0.8]]).unwrap();
        let y = vec![0.3, 0.1, 0.25];
        let data = FieldObservations::new(field.clone(), y.clone()).unwrap();
        let kernel = KernelConfig::new(1.9).unwrap();
        let rho = RhoVector::new(vec![0.6]).unwrap();
        let (s2, s02, sf2) = (0.8, 0.05, em.sigma_f2());

        let direct =
            extended_log_likelihood(&data, &kernel, &em, &[], &rho, s2, s02, sf2).unwrap();

        // Assemble the three-part covariance explicitly.
        let (e, k) = emulator_mean_cov(&em, &field, &[]).unwrap();
        let r = corr_matrix(&field, &rho, 1.9).unwrap();
        let mut cov = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] = sf2 * k[(i, j)] + s2 * r[(i, j)];
            }
            cov[(i, i)] += s02;
        }
        let manual = mvn_logpdf(&y, &e, &cov).unwrap();
        assert!((direct - manual).abs() < 1e-12);

        // σ_f² = 0 degenerates to the plain field likelihood with f ← e.
        let zero_sf =
            extended_log_likelihood(&data, &kernel, &em, &[], &rho, s2, s02, 0.0).unwrap();
        let plain_cov = assemble_covariance(&r, s2, s02).unwrap();
        let plain = mvn_logpdf(&y, &e, &plain_cov).unwrap();
        assert!((zero_sf - plain).abs() < 1e-12);
    }

    #[test]
    fn record_round_trip_preserves_predictions() {
        let f = |x: f64| (2.0 * x).exp() / 5.0;
        let design = grid_design_1d(10, f);
        let em = FittedEmulator::assemble(1.9, vec![0.7], design).unwrap();
        let record = em.to_record();
        let json = serde_json::to_string(&record).unwrap();
        let back: EmulatorRecord = serde_json::from_str(&json).unwrap();
        let em2 = FittedEmulator::<f64>::from_record(&back).unwrap();
        for &x in &[0.07, 0.33, 0.61, 0.94] {
            assert!((em.predict_mean(&[x]) - em2.predict_mean(&[x])).abs() < 1e-12);
        }
        assert_eq!(em.sigma_f2(), em2.sigma_f2());
    }
}
