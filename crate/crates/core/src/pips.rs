//! Posterior inclusion probability screening.
//!
//! One MCMC sample from the full model is enough to rank all `2^p` input
//! subsets. For a subset γ, the Bayes factor against the full model is the
//! posterior expectation of the spike prior density evaluated at the
//! sampled ρ draws:
//!
//! ```text
//! B_γ ≈ (1/M) Σ_r  Π_{ℓ: γ_ℓ = 0}  α ρ_ℓ^(r)^{α−1}
//! ```
//!
//! because the full-model prior on ρ is a product of uniforms and the
//! likelihood is shared by every subset. Everything here is a deterministic
//! pass over the chain; no further sampling happens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mcmc::Chain;
use crate::priors::{spike_log_density, ModelSpacePrior, SpikeConfig};
use crate::scalar::Scalar;
use crate::stats;

/// Exhaustive enumeration is refused beyond this many inputs.
pub const ENUMERATION_CAP: usize = 20;

/// Weight ESS fraction below which a degeneracy warning is logged.
pub const ESS_WARN_FRACTION: f64 = 0.01;

/// A subset of inputs encoded as a bitmask: bit ℓ set means input ℓ is
/// active in the discrepancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelIndex(pub u32);

impl ModelIndex {
    /// The full model over `p` inputs.
    pub fn full(p: usize) -> Self {
        ModelIndex((1u32 << p) - 1)
    }

    pub fn is_active(self, l: usize) -> bool {
        self.0 >> l & 1 == 1
    }

    pub fn is_full(self, p: usize) -> bool {
        self == ModelIndex::full(p)
    }

    /// Active inputs, ascending.
    pub fn active_inputs(self, p: usize) -> Vec<usize> {
        (0..p).filter(|&l| self.is_active(l)).collect()
    }

    /// Every subset of `p` inputs.
    pub fn all(p: usize) -> impl Iterator<Item = ModelIndex> {
        (0..(1u32 << p)).map(ModelIndex)
    }

    /// Hex rendering used by the JSON export, e.g. `0x3`.
    pub fn hex(self) -> String {
        format!("{:#x}", self.0)
    }
}

/// One estimated log Bayes factor against the full model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BfEstimate<T> {
    pub log_bf: T,
    /// Delta-method standard error of the log estimate, with the batch-means
    /// correction for chain autocorrelation.
    pub mc_se: T,
    /// Effective sample size of the importance weights.
    pub ess: f64,
}

/// The `2^p` Bayes-factor table with posterior model probabilities and
/// per-input inclusion probabilities. Vectors are indexed by the bitmask of
/// [`ModelIndex`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScreeningResult<T> {
    pub p: usize,
    /// Number of chain draws the estimates are based on.
    pub n_draws: usize,
    /// Spike shape per input.
    pub alpha: Vec<T>,
    pub threshold: T,
    pub log_bayes_factors: Vec<T>,
    pub mc_se: Vec<T>,
    pub ess: Vec<f64>,
    pub model_posteriors: Vec<T>,
    pub inclusion_probs: Vec<T>,
    pub active: Vec<bool>,
    pub pairwise: Option<Vec<PairInclusion<T>>>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PairInclusion<T> {
    pub first: usize,
    pub second: usize,
    pub probability: T,
}

/// Log spike density of every draw and input: entry `(r, ℓ)` is
/// `ln α_ℓ + (α_ℓ − 1) ln ρ_ℓ^(r)`.
pub fn log_weight_matrix<T: Scalar>(chain: &Chain<T>, alpha: T) -> Result<Matrix<T>> {
    let p = chain.p();
    log_weight_matrix_per_input(chain, &vec![alpha; p])
}

/// Same as [`log_weight_matrix`] with one spike shape per input.
pub fn log_weight_matrix_per_input<T: Scalar>(
    chain: &Chain<T>,
    alphas: &[T],
) -> Result<Matrix<T>> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let p = chain.p();
    if alphas.len() != p {
        return Err(Error::dim(format!(
            "{} spike shapes for p = {p} inputs",
            alphas.len()
        )));
    }
    let m = chain.len();
    let mut w = Matrix::zeros(m, p);
    for (r, sample) in chain.samples.iter().enumerate() {
        for l in 0..p {
            let lw = spike_log_density(sample.rho[l], alphas[l])?;
            // A single inert index can inflate a draw's weight by at most the
            // factor α (the spike density is bounded by α on (0, 1]).
            debug_assert!(lw <= alphas[l].ln() + T::from_f(1e-12));
            w[(r, l)] = lw;
        }
    }
    Ok(w)
}

/// Estimate the log Bayes factor of the subset `gamma` against the full
/// model from the weight matrix, with a max-shifted (log-sum-exp) mean.
pub fn log_bayes_factor<T: Scalar>(gamma: ModelIndex, weights: &Matrix<T>) -> BfEstimate<T> {
    let m = weights.n_rows();
    let p = weights.n_cols();
    if gamma.is_full(p) {
        // Empty inert set: every weight term is exactly 1.
        return BfEstimate {
            log_bf: T::zero(),
            mc_se: T::zero(),
            ess: m as f64,
        };
    }
    let inert: Vec<usize> = (0..p).filter(|&l| !gamma.is_active(l)).collect();
    let mut s = Vec::with_capacity(m);
    for r in 0..m {
        let row = weights.row(r);
        let mut acc = T::zero();
        for &l in &inert {
            acc = acc + row[l];
        }
        s.push(acc);
    }
    let shift = s.iter().copied().fold(T::neg_infinity(), T::max);
    let v: Vec<T> = s.iter().map(|&x| (x - shift).exp()).collect();
    let sum_v: T = v.iter().copied().sum();
    let mean_v = sum_v / T::from_f(m as f64);
    let log_bf = shift + mean_v.ln();

    // Delta method: se(ln B̂) = se(B̂)/B̂, scale-free in the shifted values.
    let mc_se = if m >= 4 {
        stats::batch_means_se(&v) / mean_v
    } else {
        T::zero()
    };
    let sum_sq: T = v.iter().map(|&x| x * x).sum();
    let ess = (sum_v * sum_v / sum_sq).to_f();

    BfEstimate { log_bf, mc_se, ess }
}

/// Normalize `π(γ | y) ∝ B_γ π(γ)` over all subsets.
///
/// `log_bfs` must be indexed by bitmask and cover all `2^p` subsets.
pub fn model_posteriors<T: Scalar>(
    log_bfs: &[T],
    prior: &ModelSpacePrior<T>,
) -> Result<Vec<T>> {
    let n_models = log_bfs.len();
    let p = n_models.trailing_zeros() as usize;
    if n_models == 0 || n_models != 1usize << p {
        return Err(Error::invalid(format!(
            "{n_models} Bayes factors is not a full 2^p table"
        )));
    }
    let mut log_unnorm = Vec::with_capacity(n_models);
    for gamma in ModelIndex::all(p) {
        log_unnorm.push(log_bfs[gamma.0 as usize] + prior.log_mass(gamma.0, p)?);
    }
    let log_z = stats::log_sum_exp(&log_unnorm);
    Ok(log_unnorm.iter().map(|&l| (l - log_z).exp()).collect())
}

/// Per-input inclusion probabilities: `π(x_ℓ | y) = Σ_{γ: γ_ℓ = 1} π(γ | y)`.
pub fn inclusion_probabilities<T: Scalar>(posteriors: &[T]) -> Vec<T> {
    let p = posteriors.len().trailing_zeros() as usize;
    let mut pips = vec![T::zero(); p];
    for (bits, &prob) in posteriors.iter().enumerate() {
        for (l, pip) in pips.iter_mut().enumerate() {
            if bits >> l & 1 == 1 {
                *pip += prob;
            }
        }
    }
    pips
}

/// Probability that at least one of two inputs is active:
/// `π(x_ℓ | y) + π(x_j | y) − Σ_{γ: γ_ℓ = γ_j = 1} π(γ | y)`.
pub fn pair_inclusion<T: Scalar>(l: usize, j: usize, posteriors: &[T]) -> Result<T> {
    if l == j {
        return Err(Error::invalid("pair inclusion needs two distinct inputs"));
    }
    let p = posteriors.len().trailing_zeros() as usize;
    if l >= p || j >= p {
        return Err(Error::invalid(format!(
            "pair ({l}, {j}) out of range for p = {p}"
        )));
    }
    let pips = inclusion_probabilities(posteriors);
    let mut both = T::zero();
    for (bits, &prob) in posteriors.iter().enumerate() {
        if bits >> l & 1 == 1 && bits >> j & 1 == 1 {
            both += prob;
        }
    }
    Ok(pips[l] + pips[j] - both)
}

/// Threshold the inclusion probabilities into active flags.
pub fn classify<T: Scalar>(pips: &[T], threshold: T) -> Vec<bool> {
    pips.iter().map(|&p| p > threshold).collect()
}

/// Full post-processing pass: weights, all `2^p` Bayes factors, posterior
/// model probabilities, inclusion probabilities, and the classification at
/// the given threshold.
pub fn screen_chain<T: Scalar>(
    chain: &Chain<T>,
    spike: &SpikeConfig<T>,
    prior: &ModelSpacePrior<T>,
    threshold: T,
    with_pairwise: bool,
) -> Result<ScreeningResult<T>> {
    let p = chain.p();
    if p == 0 {
        return Err(Error::invalid("chain holds no rho coordinates"));
    }
    if p > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            p,
            cap: ENUMERATION_CAP,
        });
    }
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::invalid(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let alphas = spike.alphas(p)?;
    let weights = log_weight_matrix_per_input(chain, &alphas)?;
    let m = weights.n_rows();

    let n_models = 1usize << p;
    let mut log_bfs = Vec::with_capacity(n_models);
    let mut mc_se = Vec::with_capacity(n_models);
    let mut ess = Vec::with_capacity(n_models);
    let mut degenerate = 0usize;
    for gamma in ModelIndex::all(p) {
        let est = log_bayes_factor(gamma, &weights);
        if est.ess < ESS_WARN_FRACTION * m as f64 {
            degenerate += 1;
        }
        log_bfs.push(est.log_bf);
        mc_se.push(est.mc_se);
        ess.push(est.ess);
    }
    if degenerate > 0 {
        log::warn!(
            "importance weights are degenerate for {degenerate} of {n_models} subsets \
             (ESS below {:.0}% of {m} draws); the chain may sit far from the spike",
            ESS_WARN_FRACTION * 100.0
        );
    }

    let posteriors = model_posteriors(&log_bfs, prior)?;
    let pips = inclusion_probabilities(&posteriors);
    let active = classify(&pips, threshold);
    let pairwise = with_pairwise.then(|| {
        let mut out = Vec::new();
        for l in 0..p {
            for j in (l + 1)..p {
                out.push(PairInclusion {
                    first: l,
                    second: j,
                    probability: pair_inclusion(l, j, &posteriors)
                        .expect("distinct in-range pair"),
                });
            }
        }
        out
    });

    Ok(ScreeningResult {
        p,
        n_draws: m,
        alpha: alphas,
        threshold,
        log_bayes_factors: log_bfs,
        mc_se,
        ess,
        model_posteriors: posteriors,
        inclusion_probs: pips,
        active,
        pairwise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{ChainSample, Diagnostics};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn chain_from_rho(rho_draws: Vec<Vec<f64>>) -> Chain<f64> {
        let samples = rho_draws
            .into_iter()
            .map(|rho| ChainSample {
                rho,
                sigma2: 1.0,
                sigma02: 0.1,
                theta: vec![],
                log_post: 0.0,
            })
            .collect();
        Chain {
            samples,
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn weight_matrix_examples() {
        let chain = chain_from_rho(vec![vec![1.0, 0.99]]);
        // rho = 1 → ln α.
        let w = log_weight_matrix(&chain, 100.0).unwrap();
        assert!((w[(0, 0)] - 100.0f64.ln()).abs() < 1e-14);
        // Cross-module agreement with the prior density.
        assert_eq!(w[(0, 1)], spike_log_density(0.99, 100.0).unwrap());
        // α = 1 → all zeros.
        let w1 = log_weight_matrix(&chain, 1.0).unwrap();
        assert_eq!(w1[(0, 0)], 0.0);
        assert_eq!(w1[(0, 1)], 0.0);
    }

    #[test]
    fn weight_matrix_rejects_empty_chain() {
        let chain = chain_from_rho(vec![]);
        assert!(matches!(
            log_weight_matrix(&chain, 100.0),
            Err(Error::EmptyChain)
        ));
    }

    #[test]
    fn full_model_bayes_factor_is_exactly_one() {
        let mut rng = rng_from_seed(1);
        let draws: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![f64::unit_uniform(&mut rng).max(1e-6); 3])
            .collect();
        let chain = chain_from_rho(draws);
        let w = log_weight_matrix(&chain, 100.0).unwrap();
        let est = log_bayes_factor(ModelIndex::full(3), &w);
        assert_eq!(est.log_bf, 0.0);
        assert_eq!(est.mc_se, 0.0);
        assert_eq!(est.ess, 500.0);
    }

    #[test]
    fn single_draw_closed_form() {
        // M = 1, p = 1, ρ = 1, α = 100, γ = (0): B = α.
        let chain = chain_from_rho(vec![vec![1.0]]);
        let w = log_weight_matrix(&chain, 100.0).unwrap();
        let est = log_bayes_factor(ModelIndex(0), &w);
        assert!((est.log_bf - 100.0f64.ln()).abs() < 1e-14);
        assert_eq!(est.mc_se, 0.0);
    }

    #[test]
    fn posterior_example_single_input() {
        // p = 1, B_{γ=0} = 3, constant prior: P(active) = 1/(1+3).
        let log_bfs = vec![3.0f64.ln(), 0.0];
        let post = model_posteriors(&log_bfs, &ModelSpacePrior::Constant).unwrap();
        let pips = inclusion_probabilities(&post);
        assert!((pips[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn equal_bayes_factors_give_uniform_posteriors() {
        let log_bfs = vec![0.7f64; 8];
        let post = model_posteriors(&log_bfs, &ModelSpacePrior::Constant).unwrap();
        for &q in &post {
            assert!((q - 0.125).abs() < 1e-12);
        }
        let total: f64 = post.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn near_degenerate_bernoulli_prior_concentrates_on_the_full_model() {
        let log_bfs = vec![0.0f64; 4];
        let prior = ModelSpacePrior::bernoulli(vec![1.0 - 1e-12, 1.0 - 1e-12]).unwrap();
        let post = model_posteriors(&log_bfs, &prior).unwrap();
        assert!(post[3] > 1.0 - 1e-9);
    }

    #[test]
    fn inclusion_probability_examples() {
        // All mass on the full model.
        let mut post = vec![0.0f64; 4];
        post[3] = 1.0;
        assert_eq!(inclusion_probabilities(&post), vec![1.0, 1.0]);
        // Uniform over the 4 subsets of p = 2.
        let post = vec![0.25f64; 4];
        let pips = inclusion_probabilities(&post);
        assert!((pips[0] - 0.5).abs() < 1e-12);
        assert!((pips[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pair_inclusion_examples() {
        // All mass on the full model.
        let mut post = vec![0.0f64; 4];
        post[3] = 1.0;
        assert!((pair_inclusion(0, 1, &post).unwrap() - 1.0).abs() < 1e-12);
        // Mass ½ on {ℓ only} and ½ on {j only}: ½ + ½ − 0 = 1.
        let mut post = vec![0.0f64; 4];
        post[0b01] = 0.5;
        post[0b10] = 0.5;
        assert!((pair_inclusion(0, 1, &post).unwrap() - 1.0).abs() < 1e-12);
        assert!(pair_inclusion(1, 1, &post).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&[1.0, 0.0], 0.5), vec![true, false]);
        assert_eq!(classify(&[0.5], 0.1), vec![true]);
        assert_eq!(classify(&[0.5], 0.9), vec![false]);
    }

    #[test]
    fn screen_chain_enforces_the_enumeration_cap() {
        let chain = chain_from_rho(vec![vec![0.5; 21]; 4]);
        let err = screen_chain(
            &chain,
            &SpikeConfig::default(),
            &ModelSpacePrior::Constant,
            0.5,
            false,
        );
        assert!(matches!(err, Err(Error::EnumerationCap { p: 21, cap: 20 })));
    }

    #[test]
    fn screen_chain_outputs_are_consistent() {
        let mut rng = rng_from_seed(2);
        // Input 0 hugs the spike, input 1 sits in the slab interior.
        let draws: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                vec![
                    1.0 - 0.002 * f64::unit_uniform(&mut rng),
                    0.2 + 0.1 * f64::unit_uniform(&mut rng),
                ]
            })
            .collect();
        let chain = chain_from_rho(draws);
        let result = screen_chain(
            &chain,
            &SpikeConfig::default(),
            &ModelSpacePrior::Constant,
            0.5,
            true,
        )
        .unwrap();

        let total: f64 = result.model_posteriors.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(result.inclusion_probs.iter().all(|&q| (0.0..=1.0).contains(&q)));
        // Input 0 near the spike should be dropped; input 1 kept.
        assert!(!result.active[0]);
        assert!(result.active[1]);
        // Full-model identity.
        assert_eq!(result.log_bayes_factors[3], 0.0);

        // Pairwise equals direct subset summation.
        let pw = result.pairwise.as_ref().unwrap()[0].probability;
        let direct: f64 = result
            .model_posteriors
            .iter()
            .enumerate()
            .filter(|(bits, _)| bits & 0b11 != 0)
            .map(|(_, &q)| q)
            .sum();
        assert!((pw - direct).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pair_inclusion_matches_union_mass(seed in 0u64..500) {
            let mut rng = rng_from_seed(seed);
            let p = 3usize;
            let mut post: Vec<f64> = (0..(1 << p)).map(|_| f64::unit_uniform(&mut rng)).collect();
            let total: f64 = post.iter().sum();
            for q in &mut post {
                *q /= total;
            }
            let pair = pair_inclusion(0, 2, &post).unwrap();
            let union: f64 = post
                .iter()
                .enumerate()
                .filter(|(bits, _)| bits & 0b001 != 0 || bits & 0b100 != 0)
                .map(|(_, &q)| q)
                .sum();
            prop_assert!((pair - union).abs() < 1e-12);
        }

        #[test]
        fn inclusion_probabilities_match_brute_force(seed in 0u64..200) {
            let mut rng = rng_from_seed(seed);
            let p = 4usize;
            let mut post: Vec<f64> = (0..(1 << p)).map(|_| f64::unit_uniform(&mut rng)).collect();
            let total: f64 = post.iter().sum();
            for q in &mut post {
                *q /= total;
            }
            let pips = inclusion_probabilities(&post);
            for l in 0..p {
                let brute: f64 = post
                    .iter()
                    .enumerate()
                    .filter(|(bits, _)| bits >> l & 1 == 1)
                    .map(|(_, &q)| q)
                    .sum();
                prop_assert!((pips[l] - brute).abs() < 1e-12);
            }
        }
    }
}
