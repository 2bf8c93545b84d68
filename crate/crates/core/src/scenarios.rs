//! Synthetic benchmark scenarios: space-filling designs, a test computer
//! model, a known discrepancy, and the idealized model-validation cases.
//!
//! The test model is a shifted Sobol' g-function sum,
//! `f(x, θ) = Σ_ℓ (|4 x_ℓ − 2| + θ_ℓ) / (1 + θ_ℓ)`, a standard choice for
//! screening studies because every term is exactly one input's contribution.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Design;
use crate::likelihood::ComputerModel;
use crate::rng::{derive_seed, rng_from_seed, TAG_DATASET, TAG_NOISE};
use crate::scalar::Scalar;

/// Latin hypercube design: each column holds exactly one point per stratum
/// `[(i−1)/n, i/n)`, in a random permutation.
pub fn lhd<T: Scalar>(n: usize, p: usize, seed: u64) -> Design<T> {
    assert!(n >= 1 && p >= 1, "lhd needs n >= 1 and p >= 1");
    let mut rng = rng_from_seed(seed);
    let nf = T::from_f(n as f64);
    let mut columns: Vec<Vec<T>> = Vec::with_capacity(p);
    for _ in 0..p {
        let mut col: Vec<T> = (0..n)
            .map(|i| (T::from_f(i as f64) + T::unit_uniform(&mut rng)) / nf)
            .collect();
        col.shuffle(&mut rng);
        columns.push(col);
    }
    let rows: Vec<Vec<T>> = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Design::from_rows(&rows).expect("stratified points lie in [0, 1]")
}

#[inline]
fn g_term<T: Scalar>(x: T, theta: T) -> T {
    ((T::from_f(4.0) * x - T::from_f(2.0)).abs() + theta) / (T::one() + theta)
}

/// The test computer model: `Σ_{ℓ ∈ dims} (|4 x_ℓ − 2| + θ_ℓ)/(1 + θ_ℓ)`
/// with zero-based `dims` selecting which inputs (and matching θ
/// coordinates) enter the sum.
pub fn model_f<T: Scalar>(x: &[T], theta: &[T], dims: &[usize]) -> T {
    dims.iter().map(|&l| g_term(x[l], theta[l])).sum()
}

/// The known discrepancy of the benchmark:
/// `sin(2π x₁ x₅) + x₂³ + (1 − x₆)³` (one-based input names).
pub fn bias_delta<T: Scalar>(x: &[T]) -> T {
    assert!(x.len() >= 6, "bias_delta needs at least six inputs");
    let two_pi = T::from_f(std::f64::consts::TAU);
    (two_pi * x[0] * x[4]).sin() + x[1].powi(3) + (T::one() - x[5]).powi(3)
}

/// The four idealized realities, each a structural change to the assumed
/// three-term model (one-based names as in the case descriptions):
///
/// 1. `x₁` enters squared,
/// 2. `x₂` has no effect,
/// 3. `x₄` also matters but was left out of the model,
/// 4. `x₅` matters instead of `x₃`.
pub fn scenario_zeta<T: Scalar>(case: u8, x: &[T], theta: &[T]) -> Result<T> {
    let t = |l: usize| g_term(x[l], theta[l]);
    match case {
        1 => Ok(g_term(x[0] * x[0], theta[0]) + t(1) + t(2)),
        2 => Ok(t(0) + t(2)),
        3 => Ok(t(0) + t(1) + t(2) + t(3)),
        4 => Ok(t(0) + t(1) + g_term(x[4], theta[4])),
        _ => Err(Error::UnknownScenario(format!("case {case}"))),
    }
}

/// A composite reality: the case-1 substitution (`x₁ → x₁²`) applied on top
/// of one of the other structural changes.
pub fn composite_zeta<T: Scalar>(second_case: u8, x: &[T], theta: &[T]) -> Result<T> {
    let sq = g_term(x[0] * x[0], theta[0]);
    let t = |l: usize| g_term(x[l], theta[l]);
    match second_case {
        2 => Ok(sq + t(2)),
        3 => Ok(sq + t(1) + t(2) + t(3)),
        4 => Ok(sq + t(1) + g_term(x[4], theta[4])),
        _ => Err(Error::UnknownScenario(format!(
            "composite with case {second_case}"
        ))),
    }
}

/// How the inputs of a scenario are drawn.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum InputDesign {
    /// Latin hypercube over `[0, 1]^p`.
    Lhd,
    /// Independent uniforms, except one pair tied together by
    /// `x_second = clamp(x_first + spread · z, 0, 1)` with `z` standard
    /// normal.
    CorrelatedPair {
        first: usize,
        second: usize,
        spread: f64,
    },
    /// Independent uniforms, pair tied through a Gaussian copula with the
    /// given correlation (rank-preserving alternative to the additive rule).
    CopulaPair {
        first: usize,
        second: usize,
        correlation: f64,
    },
}

/// The reality `ζ(x, θ)` that generates field data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Reality {
    /// Test model (four terms) plus the known discrepancy [`bias_delta`].
    ModelPlusBias,
    /// Composite idealized case (case 1 mixed with `second_case`).
    Composite { second_case: u8 },
}

/// Everything needed to generate one replication of a scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioDefinition<T> {
    pub id: String,
    pub p: usize,
    pub n: usize,
    pub true_theta: Vec<T>,
    pub noise_sd: T,
    pub reality: Reality,
    /// Zero-based dims of the assumed computer model.
    pub model_dims: Vec<usize>,
    pub input_design: InputDesign,
    /// Zero-based indices of the inputs truly active in the discrepancy.
    pub truth_active: Vec<usize>,
}

impl<T: Scalar> ScenarioDefinition<T> {
    /// The `n = 50`, `p = 8` benchmark: four-term model, the sine/cubic
    /// discrepancy, LHD inputs, noise sd 0.05. Truly active inputs:
    /// x1, x2, x5, x6.
    pub fn s41() -> Self {
        ScenarioDefinition {
            id: "s41".into(),
            p: 8,
            n: 50,
            true_theta: [0.3, 0.4, 0.5, 0.6].iter().map(|&t| T::from_f(t)).collect(),
            noise_sd: T::from_f(0.05),
            reality: Reality::ModelPlusBias,
            model_dims: vec![0, 1, 2, 3],
            input_design: InputDesign::Lhd,
            truth_active: vec![0, 1, 4, 5],
        }
    }

    /// The idealized validation scenarios: `n = 100`, `p = 5`, a three-term
    /// assumed model, reality = case 1 combined with `second_case` ∈
    /// {2, 3, 4}, and the (x3, x5) pair correlated.
    pub fn s42(second_case: u8) -> Result<Self> {
        let truth_active = match second_case {
            // ζ − f: case 1 changes x1, case 2 removes x2's term,
            // case 3 adds x4, case 4 swaps x3 for x5.
            2 => vec![0, 1],
            3 => vec![0, 3],
            4 => vec![0, 2, 4],
            _ => {
                return Err(Error::UnknownScenario(format!(
                    "s42 composite with case {second_case}"
                )))
            }
        };
        Ok(ScenarioDefinition {
            id: format!("s42c1{second_case}"),
            p: 5,
            n: 100,
            true_theta: [0.4, 0.5, 0.6, 0.7, 0.8]
                .iter()
                .map(|&t| T::from_f(t))
                .collect(),
            noise_sd: T::from_f(0.05),
            reality: Reality::Composite { second_case },
            model_dims: vec![0, 1, 2],
            input_design: InputDesign::CorrelatedPair {
                first: 2,
                second: 4,
                spread: 0.05,
            },
            truth_active,
        })
    }

    /// Look a scenario up by identifier (`s41`, `s42c12`, `s42c13`, `s42c14`).
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "s41" => Ok(Self::s41()),
            "s42c12" => Self::s42(2),
            "s42c13" => Self::s42(3),
            "s42c14" => Self::s42(4),
            other => Err(Error::UnknownScenario(other.into())),
        }
    }

    pub fn known_ids() -> &'static [&'static str] {
        &["s41", "s42c12", "s42c13", "s42c14"]
    }

    /// Evaluate the reality at one input row.
    pub fn reality_at(&self, x: &[T]) -> T {
        match &self.reality {
            Reality::ModelPlusBias => {
                model_f(x, &self.true_theta, &self.model_dims) + bias_delta(x)
            }
            Reality::Composite { second_case } => {
                composite_zeta(*second_case, x, &self.true_theta)
                    .expect("validated at construction")
            }
        }
    }

    /// The assumed computer model of this scenario.
    pub fn assumed_model(&self) -> ScenarioModel {
        ScenarioModel {
            dims: self.model_dims.clone(),
        }
    }
}

/// The assumed computer model of a scenario — the g-function sum over the
/// scenario's dims.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub dims: Vec<usize>,
}

impl<T: Scalar> ComputerModel<T> for ScenarioModel {
    fn eval(&self, x: &[T], theta: &[T]) -> Result<T> {
        if theta.iter().any(|&t| t < T::zero()) {
            return Err(Error::ModelEvaluation(format!(
                "g-function terms need theta >= 0, got {theta:?}"
            )));
        }
        Ok(model_f(x, theta, &self.dims))
    }
}

/// Sidecar metadata of a generated dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub noise_sd: f64,
    pub theta_true: Vec<f64>,
    /// Zero-based indices of the truly active inputs.
    pub truth_active: Vec<usize>,
}

/// A generated (or loaded) dataset: design, observations, ground truth.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub design: Design<T>,
    pub y: Vec<T>,
    pub meta: DatasetMeta,
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

fn draw_design<T: Scalar>(def: &ScenarioDefinition<T>, seed: u64) -> Design<T> {
    match &def.input_design {
        InputDesign::Lhd => lhd(def.n, def.p, seed),
        InputDesign::CorrelatedPair { first, second, spread } => {
            let mut rng = rng_from_seed(seed);
            let rows: Vec<Vec<T>> = (0..def.n)
                .map(|_| {
                    let mut row: Vec<T> =
                        (0..def.p).map(|_| T::unit_uniform(&mut rng)).collect();
                    let jitter = T::from_f(*spread) * T::standard_normal(&mut rng);
                    row[*second] = (row[*first] + jitter).max(T::zero()).min(T::one());
                    row
                })
                .collect();
            Design::from_rows(&rows).expect("clamped to [0, 1]")
        }
        InputDesign::CopulaPair { first, second, correlation } => {
            let mut rng = rng_from_seed(seed);
            let r = *correlation;
            let rows: Vec<Vec<T>> = (0..def.n)
                .map(|_| {
                    let mut row: Vec<T> =
                        (0..def.p).map(|_| T::unit_uniform(&mut rng)).collect();
                    let z1 = f64::standard_normal(&mut rng);
                    let z2 = f64::standard_normal(&mut rng);
                    let w = r * z1 + (1.0 - r * r).sqrt() * z2;
                    row[*first] = T::from_f(standard_normal_cdf(z1));
                    row[*second] = T::from_f(standard_normal_cdf(w));
                    row
                })
                .collect();
            Design::from_rows(&rows).expect("copula values lie in (0, 1)")
        }
    }
}

/// Generate one dataset replication: draw the design, evaluate the reality,
/// add `N(0, noise_sd²)` measurement error.
pub fn gen_dataset<T: Scalar>(def: &ScenarioDefinition<T>, seed: u64) -> Dataset<T> {
    let design_seed = derive_seed(seed, TAG_DATASET);
    let design = draw_design(def, design_seed);
    let mut rng = rng_from_seed(derive_seed(seed, TAG_NOISE));
    let y: Vec<T> = (0..def.n)
        .map(|i| def.reality_at(design.row(i)) + def.noise_sd * T::standard_normal(&mut rng))
        .collect();
    Dataset {
        design,
        y,
        meta: DatasetMeta {
            schema_version: 1,
            scenario: def.id.clone(),
            seed,
            n: def.n,
            p: def.p,
            noise_sd: def.noise_sd.to_f(),
            theta_true: def.true_theta.iter().map(|&t| t.to_f()).collect(),
            truth_active: def.truth_active.clone(),
        },
    }
}

/// Skewness and excess kurtosis of the residuals `y − ζ(x)`; a diagnostic
/// for the generator, not a gate.
pub fn residual_moments<T: Scalar>(def: &ScenarioDefinition<T>, ds: &Dataset<T>) -> (f64, f64) {
    let resid: Vec<f64> = (0..ds.meta.n)
        .map(|i| (ds.y[i] - def.reality_at(ds.design.row(i))).to_f())
        .collect();
    let n = resid.len() as f64;
    let m = resid.iter().sum::<f64>() / n;
    let var = resid.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n;
    let m3 = resid.iter().map(|r| (r - m).powi(3)).sum::<f64>() / n;
    let m4 = resid.iter().map(|r| (r - m).powi(4)).sum::<f64>() / n;
    (m3 / var.powf(1.5), m4 / (var * var) - 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lhd_stratification_four_points() {
        let d = lhd::<f64>(4, 1, 7);
        let mut strata: Vec<usize> = (0..4).map(|i| (d.row(i)[0] * 4.0) as usize).collect();
        strata.sort_unstable();
        assert_eq!(strata, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lhd_is_deterministic() {
        let a = lhd::<f64>(10, 3, 42);
        let b = lhd::<f64>(10, 3, 42);
        assert_eq!(a, b);
        let c = lhd::<f64>(10, 3, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn lhd_stratification_benchmark_size() {
        let (n, p) = (50, 8);
        let d = lhd::<f64>(n, p, 3);
        for col in 0..p {
            let mut strata: Vec<usize> = (0..n)
                .map(|i| ((d.row(i)[col] * n as f64) as usize).min(n - 1))
                .collect();
            strata.sort_unstable();
            let expected: Vec<usize> = (0..n).collect();
            assert_eq!(strata, expected, "column {col} misses a stratum");
        }
    }

    #[test]
    fn model_f_hand_values() {
        // All inputs at 1/2 kill the |4x − 2| term.
        let x = [0.5f64; 4];
        let theta = [0.3, 0.4, 0.5, 0.6];
        let expected = 0.3 / 1.3 + 0.4 / 1.4 + 0.5 / 1.5 + 0.6 / 1.6;
        let v = model_f(&x, &theta, &[0, 1, 2, 3]);
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 1.224_816_849_816_849_8).abs() < 1e-12);

        // x = 0, θ = 0: four terms of |−2| = 2.
        let v0 = model_f(&[0.0f64; 4], &[0.0; 4], &[0, 1, 2, 3]);
        assert_eq!(v0, 8.0);

        // Empty dims.
        assert_eq!(model_f(&[0.3f64; 4], &theta, &[]), 0.0);
    }

    #[test]
    fn bias_delta_hand_values() {
        // x = 0: sin 0 + 0 + 1.
        assert!((bias_delta(&[0.0f64; 8]) - 1.0).abs() < 1e-15);
        // x1 = x2 = 0, x6 = 1: every term vanishes.
        let x = [0.0f64, 0.0, 0.3, 0.9, 0.7, 1.0, 0.2, 0.4];
        assert!(bias_delta(&x).abs() < 1e-15);
    }

    #[test]
    fn bias_delta_ignores_absent_inputs() {
        let base = [0.3, 0.6, 0.1, 0.2, 0.8, 0.4, 0.5, 0.9];
        let mut changed = base;
        changed[2] = 0.99;
        changed[3] = 0.01;
        changed[6] = 0.42;
        changed[7] = 0.13;
        assert_eq!(bias_delta(&base), bias_delta(&changed));
    }

    #[test]
    fn scenario_zeta_hand_values() {
        let theta = [0.4f64, 0.5, 0.6, 0.7, 0.8];
        // Case 1 at x1 = 0.5: the first term uses x1² = 0.25, giving
        // (|1 − 2| + 0.4)/1.4 = 1.
        let x = [0.5, 0.5, 0.5, 0.5, 0.5];
        let v = scenario_zeta(1, &x, &theta).unwrap();
        let expected = 1.0 + 0.5 / 1.5 + 0.6 / 1.6;
        assert!((v - expected).abs() < 1e-12);

        // Case 2 never depends on x2.
        let mut x2 = x;
        x2[1] = 0.97;
        assert_eq!(
            scenario_zeta(2, &x, &theta).unwrap(),
            scenario_zeta(2, &x2, &theta).unwrap()
        );

        // Case 4 equals the case-2-style sum with (x5, θ5) replacing the
        // (x3, θ3) term.
        let y = [0.1, 0.9, 0.3, 0.6, 0.8];
        let case4 = scenario_zeta(4, &y, &theta).unwrap();
        let manual = g_term(y[0], theta[0]) + g_term(y[1], theta[1]) + g_term(y[4], theta[4]);
        assert_eq!(case4, manual);

        assert!(scenario_zeta(5, &x, &theta).is_err());
    }

    #[test]
    fn composite_applies_both_changes() {
        let theta = [0.4, 0.5, 0.6, 0.7, 0.8];
        let x = [0.3, 0.7, 0.2, 0.9, 0.6];
        let c13 = composite_zeta(3, &x, &theta).unwrap();
        let manual = g_term(x[0] * x[0], theta[0])
            + g_term(x[1], theta[1])
            + g_term(x[2], theta[2])
            + g_term(x[3], theta[3]);
        assert_eq!(c13, manual);
    }

    #[test]
    fn gen_dataset_without_noise_reproduces_reality() {
        let mut def = ScenarioDefinition::<f64>::s41();
        def.noise_sd = 0.0;
        def.n = 12;
        let ds = gen_dataset(&def, 5);
        for i in 0..def.n {
            assert_eq!(ds.y[i], def.reality_at(ds.design.row(i)));
        }
    }

    #[test]
    fn benchmark_truth_labels() {
        let def = ScenarioDefinition::<f64>::s41();
        assert_eq!(def.truth_active, vec![0, 1, 4, 5]);
        assert_eq!(def.true_theta, vec![0.3, 0.4, 0.5, 0.6]);
        let ds = gen_dataset(&def, 1);
        assert_eq!(ds.meta.truth_active, vec![0, 1, 4, 5]);
    }

    #[test]
    fn gen_dataset_is_deterministic() {
        let def = ScenarioDefinition::<f64>::s41();
        let a = gen_dataset(&def, 9);
        let b = gen_dataset(&def, 9);
        assert_eq!(a.y, b.y);
        assert_eq!(a.design, b.design);
    }

    #[test]
    fn correlated_pair_has_high_sample_correlation() {
        let def = ScenarioDefinition::<f64>::s42(3).unwrap();
        let ds = gen_dataset(&def, 21);
        let x3 = (0..def.n).map(|i| ds.design.row(i)[2]).collect::<Vec<_>>();
        let x5 = (0..def.n).map(|i| ds.design.row(i)[4]).collect::<Vec<_>>();
        let m3 = crate::stats::mean(&x3);
        let m5 = crate::stats::mean(&x5);
        let mut num = 0.0;
        let mut d3 = 0.0;
        let mut d5 = 0.0;
        for i in 0..def.n {
            num += (x3[i] - m3) * (x5[i] - m5);
            d3 += (x3[i] - m3).powi(2);
            d5 += (x5[i] - m5).powi(2);
        }
        let corr = num / (d3 * d5).sqrt();
        assert!(corr > 0.8, "sample correlation {corr}");
    }

    #[test]
    fn copula_pair_is_rank_preservingly_correlated() {
        let def = ScenarioDefinition::<f64> {
            input_design: InputDesign::CopulaPair {
                first: 2,
                second: 4,
                correlation: 0.99,
            },
            ..ScenarioDefinition::s42(3).unwrap()
        };
        let ds = gen_dataset(&def, 33);
        let x3 = (0..def.n).map(|i| ds.design.row(i)[2]).collect::<Vec<_>>();
        let x5 = (0..def.n).map(|i| ds.design.row(i)[4]).collect::<Vec<_>>();
        let m3 = crate::stats::mean(&x3);
        let m5 = crate::stats::mean(&x5);
        let mut num = 0.0;
        let mut d3 = 0.0;
        let mut d5 = 0.0;
        for i in 0..def.n {
            num += (x3[i] - m3) * (x5[i] - m5);
            d3 += (x3[i] - m3).powi(2);
            d5 += (x5[i] - m5).powi(2);
        }
        assert!(num / (d3 * d5).sqrt() > 0.8);
    }

    #[test]
    fn residuals_look_gaussian_at_large_n() {
        let mut def = ScenarioDefinition::<f64>::s41();
        def.n = 4000;
        let ds = gen_dataset(&def, 13);
        let (skew, ex_kurt) = residual_moments(&def, &ds);
        assert!(skew.abs() < 0.15, "skewness {skew}");
        assert!(ex_kurt.abs() < 0.3, "excess kurtosis {ex_kurt}");
    }

    #[test]
    fn scenario_lookup() {
        assert!(ScenarioDefinition::<f64>::by_id("s41").is_ok());
        assert!(ScenarioDefinition::<f64>::by_id("s42c13").is_ok());
        assert!(matches!(
            ScenarioDefinition::<f64>::by_id("nope"),
            Err(Error::UnknownScenario(_))
        ));
    }
}
