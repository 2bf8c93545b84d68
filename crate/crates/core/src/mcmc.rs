//! Two-phase sampler for the posterior of `(ρ, σ², σ₀², θ)` under the full
//! model: a Metropolis-within-Gibbs warmup with per-coordinate step
//! adaptation, followed by a joint Gaussian random-walk Metropolis-Hastings
//! phase whose proposal covariance is estimated from the warmup draws.
//!
//! Both phases work in the unconstrained space of [`from_unconstrained`] and
//! accept an arbitrary log-density, which is what the closed-form validation
//! targets in the tests rely on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{CorrWeights, KernelConfig, RhoVector};
use crate::likelihood::{mean_vector, mvn_logpdf, ComputerModel, FieldObservations};
use crate::linalg::{cholesky, from_eigen, sym_eigen, Matrix};
use crate::priors::{
    from_unconstrained, log_prior_eta, to_unconstrained, ParamVector, PriorSpec,
};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;
use crate::stats;

/// Additive floor applied to the estimated proposal covariance.
pub const PROPOSAL_COV_RIDGE: f64 = 1e-8;
/// Eigenvalue floor of the estimated proposal covariance.
pub const PROPOSAL_EIGEN_FLOOR: f64 = 1e-10;
/// Joint random-walk scaling when none is configured: `2.38² / d`.
pub const OPTIMAL_SCALING_NUMERATOR: f64 = 2.38 * 2.38;

/// Schedule and tuning of the two-phase sampler. The seed is mandatory:
/// identical `(seed, config, data)` must reproduce a chain bit for bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Warmup (Metropolis-within-Gibbs) iterations.
    pub n_mwg: usize,
    /// Joint Metropolis-Hastings iterations.
    pub n_mh: usize,
    /// MH draws discarded from the front (the warmup phase is always
    /// discarded).
    pub burn_in: usize,
    /// Keep every `thinning`-th MH draw.
    pub thinning: usize,
    /// Initial per-coordinate random-walk step on the unconstrained scale.
    pub initial_step: f64,
    /// Warmup adaptation window; steps double or halve after each window
    /// depending on the observed acceptance rate. Zero disables adaptation.
    pub adapt_window: usize,
    /// Acceptance rate the warmup adaptation targets.
    pub target_accept: f64,
    /// Scale multiplying the estimated proposal covariance in the MH phase;
    /// `None` selects `2.38²/d`.
    pub mh_scale: Option<f64>,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(seed: u64) -> Self {
        SamplerConfig {
            n_mwg: 5_000,
            n_mh: 10_000,
            burn_in: 0,
            thinning: 1,
            initial_step: 0.3,
            adapt_window: 100,
            target_accept: 0.44,
            mh_scale: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_mwg == 0 || self.n_mh == 0 {
            return Err(Error::invalid("iteration counts must be positive"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be >= 1"));
        }
        if self.burn_in >= self.n_mh {
            return Err(Error::invalid(format!(
                "burn-in {} leaves no draws from {} MH iterations",
                self.burn_in, self.n_mh
            )));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::invalid("initial step must be positive"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("target acceptance must lie in (0, 1)"));
        }
        if let Some(s) = self.mh_scale {
            if !(s > 0.0) {
                return Err(Error::invalid("mh scale must be positive"));
            }
        }
        Ok(())
    }
}

/// One retained draw, in constrained space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainSample<T> {
    pub rho: Vec<T>,
    pub sigma2: T,
    pub sigma02: T,
    pub theta: Vec<T>,
    pub log_post: T,
}

/// Acceptance and mixing diagnostics of one sampler run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Per-coordinate acceptance rates of the warmup phase.
    pub mwg_acceptance: Vec<f64>,
    /// Joint acceptance rate of the MH phase.
    pub mh_acceptance: f64,
    /// Batch-means effective sample sizes of the retained draws, one per
    /// stored coordinate (ρ…, σ², σ₀², θ…).
    pub ess: Vec<f64>,
}

/// Retained draws plus diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chain<T> {
    pub samples: Vec<ChainSample<T>>,
    pub diagnostics: Diagnostics,
}

impl<T: Scalar> Chain<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn p(&self) -> usize {
        self.samples.first().map_or(0, |s| s.rho.len())
    }

    pub fn k(&self) -> usize {
        self.samples.first().map_or(0, |s| s.theta.len())
    }

    /// The draws of `ρ_l`.
    pub fn rho_draws(&self, l: usize) -> Vec<T> {
        self.samples.iter().map(|s| s.rho[l]).collect()
    }

    /// Posterior median of every ρ coordinate.
    pub fn rho_medians(&self) -> Vec<T> {
        (0..self.p())
            .map(|l| stats::median(&self.rho_draws(l)))
            .collect()
    }

    pub fn sigma2_draws(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.sigma2).collect()
    }

    pub fn sigma02_draws(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.sigma02).collect()
    }
}

/// Raw output of one sampling phase on a generic target: the initial state
/// followed by one state per iteration, with the target values alongside.
#[derive(Clone, Debug)]
pub struct RawChain<T> {
    pub states: Vec<Vec<T>>,
    pub log_densities: Vec<T>,
    /// Acceptance rates: one per coordinate for the warmup phase, a single
    /// joint rate for the MH phase.
    pub acceptance: Vec<f64>,
    /// Step sizes at the end of the phase (warmup only).
    pub final_steps: Vec<T>,
}

impl<T: Scalar> RawChain<T> {
    /// States excluding the initial point.
    pub fn draws(&self) -> &[Vec<T>] {
        &self.states[1..]
    }
}

/// Warmup options, split out so the phase can run on analytic targets.
#[derive(Clone, Debug)]
pub struct MwgOptions {
    pub initial_step: f64,
    pub adapt_window: usize,
    pub target_accept: f64,
}

impl MwgOptions {
    fn from_config(c: &SamplerConfig) -> Self {
        MwgOptions {
            initial_step: c.initial_step,
            adapt_window: c.adapt_window,
            target_accept: c.target_accept,
        }
    }
}

fn sanitize<T: Scalar>(lp: T) -> T {
    if lp.is_nan() {
        T::neg_infinity()
    } else {
        lp
    }
}

/// Metropolis-within-Gibbs: one-coordinate-at-a-time Gaussian random walk
/// in the unconstrained space.
///
/// During warmup each coordinate's step doubles (acceptance above target)
/// or halves (below target) at the end of every adaptation window, with a
/// small dead band around the target.
pub fn mwg_phase<T, F, R>(
    init: &[T],
    n_iters: usize,
    opts: &MwgOptions,
    target: F,
    rng: &mut R,
) -> RawChain<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
    R: Rng,
{
    let d = init.len();
    let mut x = init.to_vec();
    let mut lp = sanitize(target(&x));
    let mut steps = vec![T::from_f(opts.initial_step); d];
    let mut states = Vec::with_capacity(n_iters + 1);
    let mut log_densities = Vec::with_capacity(n_iters + 1);
    states.push(x.clone());
    log_densities.push(lp);

    let mut accepted = vec![0u64; d];
    let mut window_accepted = vec![0u64; d];
    let dead_band = 0.05;

    for iter in 1..=n_iters {
        for i in 0..d {
            let old = x[i];
            x[i] = old + steps[i] * T::standard_normal(rng);
            let lp_new = sanitize(target(&x));
            let u: T = T::unit_uniform(rng);
            if u.ln() < lp_new - lp {
                lp = lp_new;
                accepted[i] += 1;
                window_accepted[i] += 1;
            } else {
                x[i] = old;
            }
        }
        states.push(x.clone());
        log_densities.push(lp);

        if opts.adapt_window > 0 && iter % opts.adapt_window == 0 {
            for i in 0..d {
                let rate = window_accepted[i] as f64 / opts.adapt_window as f64;
                if rate > opts.target_accept + dead_band {
                    steps[i] = steps[i] * T::from_f(2.0);
                } else if rate < opts.target_accept - dead_band {
                    steps[i] = steps[i] / T::from_f(2.0);
                }
                window_accepted[i] = 0;
            }
        }
    }

    let acceptance = accepted
        .iter()
        .map(|&a| a as f64 / n_iters.max(1) as f64)
        .collect();
    RawChain {
        states,
        log_densities,
        acceptance,
        final_steps: steps,
    }
}

/// Sample covariance of the warmup states, regularized to be safely
/// positive definite: a `1e-8` ridge, then an eigenvalue floor at `1e-10`.
pub fn estimate_proposal_cov<T: Scalar>(states: &[Vec<T>]) -> Result<Matrix<T>> {
    if states.is_empty() {
        return Err(Error::EmptyChain);
    }
    let d = states[0].len();
    if states.len() < d + 2 {
        return Err(Error::ChainTooShort {
            len: states.len(),
            dim: d,
        });
    }
    let mut cov = stats::sample_covariance(states);
    let ridge = T::from_f(PROPOSAL_COV_RIDGE);
    for i in 0..d {
        cov[(i, i)] = cov[(i, i)] + ridge;
    }
    let (values, vectors) = sym_eigen(&cov);
    let floor = T::from_f(PROPOSAL_EIGEN_FLOOR);
    if values.iter().any(|&v| v < floor) {
        let clipped: Vec<T> = values.iter().map(|&v| v.max(floor)).collect();
        cov = from_eigen(&clipped, &vectors);
    }
    Ok(cov)
}

/// Joint Gaussian random-walk Metropolis-Hastings with proposal covariance
/// `scale · proposal_cov`.
pub fn mh_phase<T, F, R>(
    init: &[T],
    n_iters: usize,
    proposal_cov: &Matrix<T>,
    scale: T,
    target: F,
    rng: &mut R,
) -> Result<RawChain<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
    R: Rng,
{
    let d = init.len();
    if proposal_cov.n_rows() != d || proposal_cov.n_cols() != d {
        return Err(Error::dim("proposal covariance does not match state"));
    }
    let mut scaled = proposal_cov.clone();
    for i in 0..d {
        for j in 0..d {
            scaled[(i, j)] = scaled[(i, j)] * scale;
        }
    }
    let factor = cholesky(&scaled).ok_or(Error::FactorizationFailed {
        n: d,
        last_jitter: 0.0,
    })?;

    let mut x = init.to_vec();
    let mut lp = sanitize(target(&x));
    let mut states = Vec::with_capacity(n_iters + 1);
    let mut log_densities = Vec::with_capacity(n_iters + 1);
    states.push(x.clone());
    log_densities.push(lp);
    let mut accepted = 0u64;

    for _ in 0..n_iters {
        let step = factor.correlated_normal(rng);
        let proposal: Vec<T> = x.iter().zip(&step).map(|(&a, &b)| a + b).collect();
        let lp_new = sanitize(target(&proposal));
        let u: T = T::unit_uniform(rng);
        if u.ln() < lp_new - lp {
            x = proposal;
            lp = lp_new;
            accepted += 1;
        }
        states.push(x.clone());
        log_densities.push(lp);
    }

    Ok(RawChain {
        states,
        log_densities,
        acceptance: vec![accepted as f64 / n_iters.max(1) as f64],
        final_steps: Vec::new(),
    })
}

// --- the posterior target ----------------------------------------------------

/// How the calibration parameters are treated.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ThetaSpec<T> {
    /// θ pinned to known values; absent from the chain state.
    Fixed(Vec<T>),
    /// θ sampled under the uniform priors of the [`PriorSpec`].
    Calibrated,
}

/// Mean vector and optional extra covariance of the field data for a given
/// θ. The direct pipeline evaluates the computer model; the emulated
/// pipeline returns the emulator mean and its scaled conditional covariance.
pub trait FieldModel<T: Scalar> {
    fn mean_and_extra_cov(&self, theta: &[T]) -> Result<(Vec<T>, Option<Matrix<T>>)>;
}

/// Field model backed by a directly evaluable computer model.
pub struct DirectFieldModel<'a, T, M: ?Sized> {
    data: &'a FieldObservations<T>,
    model: &'a M,
}

impl<'a, T: Scalar, M: ComputerModel<T> + ?Sized> DirectFieldModel<'a, T, M> {
    pub fn new(data: &'a FieldObservations<T>, model: &'a M) -> Self {
        DirectFieldModel { data, model }
    }
}

impl<'a, T: Scalar, M: ComputerModel<T> + ?Sized> FieldModel<T> for DirectFieldModel<'a, T, M> {
    fn mean_and_extra_cov(&self, theta: &[T]) -> Result<(Vec<T>, Option<Matrix<T>>)> {
        Ok((mean_vector(self.model, self.data.design(), theta)?, None))
    }
}

/// Log-posterior of the full model in the unconstrained space:
/// log-likelihood + log-prior of η + the uniform-slab term on ρ (zero) +
/// the transform log-Jacobian.
pub struct PosteriorTarget<'a, T: Scalar, FM: FieldModel<T>> {
    data: &'a FieldObservations<T>,
    weights: CorrWeights<T>,
    field_model: &'a FM,
    /// Prior as seen by the chain (θ block dropped when θ is fixed).
    chain_prior: PriorSpec<T>,
    fixed_theta: Option<Vec<T>>,
    fixed_mean: Option<(Vec<T>, Option<Matrix<T>>)>,
    p: usize,
}

impl<'a, T: Scalar, FM: FieldModel<T>> PosteriorTarget<'a, T, FM> {
    pub fn new(
        data: &'a FieldObservations<T>,
        kernel: &KernelConfig<T>,
        field_model: &'a FM,
        prior: &PriorSpec<T>,
        theta_spec: &ThetaSpec<T>,
    ) -> Result<Self> {
        let weights = CorrWeights::new(data.design(), kernel.a())?;
        let (chain_prior, fixed_theta, fixed_mean) = match theta_spec {
            ThetaSpec::Fixed(theta) => {
                let cached = field_model.mean_and_extra_cov(theta)?;
                (prior.without_theta(), Some(theta.clone()), Some(cached))
            }
            ThetaSpec::Calibrated => (prior.clone(), None, None),
        };
        Ok(PosteriorTarget {
            data,
            weights,
            field_model,
            chain_prior,
            fixed_theta,
            fixed_mean,
            p: data.p(),
        })
    }

    /// Number of sampled coordinates: `p + 2 + k` (k = 0 when θ is fixed).
    pub fn dim(&self) -> usize {
        self.p + 2 + self.chain_prior.k()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Initial state: every ρ at 1/2, variances at their prior medians, θ
    /// at the bound midpoints.
    pub fn initial_state(&self) -> Result<Vec<T>> {
        let two = T::from_f(2.0);
        let params = ParamVector {
            rho: vec![T::from_f(0.5); self.p],
            sigma2: self.chain_prior.sigma2().median(),
            sigma02: self.chain_prior.sigma02().median(),
            theta: self
                .chain_prior
                .theta_bounds()
                .iter()
                .map(|&(lo, hi)| (lo + hi) / two)
                .collect(),
        };
        let (z, _) = to_unconstrained(&params, self.chain_prior.theta_bounds())?;
        Ok(z)
    }

    pub fn params_from_state(&self, z: &[T]) -> (ParamVector<T>, T) {
        from_unconstrained(z, self.p, self.chain_prior.theta_bounds())
    }

    pub fn log_density(&self, z: &[T]) -> T {
        if z.len() != self.dim() || z.iter().any(|v| !v.is_finite()) {
            return T::neg_infinity();
        }
        let (params, log_jac) = self.params_from_state(z);
        let log_prior = log_prior_eta(
            &params.theta,
            params.sigma2,
            params.sigma02,
            &self.chain_prior,
        );
        if log_prior == T::neg_infinity() {
            return T::neg_infinity();
        }

        let owned;
        let (mean, extra) = match (&self.fixed_mean, &self.fixed_theta) {
            (Some(cached), _) => (&cached.0, &cached.1),
            (None, _) => match self.field_model.mean_and_extra_cov(&params.theta) {
                Ok(mc) => {
                    owned = mc;
                    (&owned.0, &owned.1)
                }
                Err(e) => {
                    log::warn!("field model evaluation failed in target: {e}");
                    return T::neg_infinity();
                }
            },
        };

        let rho = match RhoVector::new(params.rho.clone()) {
            Ok(r) => r,
            Err(_) => return T::neg_infinity(),
        };
        let r = match self.weights.corr_matrix(&rho) {
            Ok(r) => r,
            Err(_) => return T::neg_infinity(),
        };
        let n = r.n_rows();
        let mut cov = r;
        for i in 0..n {
            for j in 0..n {
                let mut v = params.sigma2 * cov[(i, j)];
                if let Some(k) = extra {
                    v = v + k[(i, j)];
                }
                if i == j {
                    v = v + params.sigma02;
                }
                cov[(i, j)] = v;
            }
        }
        let ll = match mvn_logpdf(self.data.y(), mean, &cov) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("covariance factorization failed in target: {e}");
                return T::neg_infinity();
            }
        };
        sanitize(ll + log_prior + log_jac)
    }
}

/// Run warmup, estimate the proposal covariance, run the joint MH phase,
/// and return the retained constrained-space draws.
pub fn run_full_sampler<T: Scalar, FM: FieldModel<T>>(
    data: &FieldObservations<T>,
    kernel: &KernelConfig<T>,
    field_model: &FM,
    prior: &PriorSpec<T>,
    theta_spec: &ThetaSpec<T>,
    config: &SamplerConfig,
) -> Result<Chain<T>> {
    config.validate()?;
    let target = PosteriorTarget::new(data, kernel, field_model, prior, theta_spec)?;
    let d = target.dim();
    if config.n_mwg + 1 < d + 2 {
        return Err(Error::ChainTooShort {
            len: config.n_mwg + 1,
            dim: d,
        });
    }

    let mut rng = rng_from_seed(config.seed);
    let z0 = target.initial_state()?;
    let mwg = mwg_phase(
        &z0,
        config.n_mwg,
        &MwgOptions::from_config(config),
        |z| target.log_density(z),
        &mut rng,
    );
    let proposal_cov = estimate_proposal_cov(&mwg.states)?;
    let scale = T::from_f(
        config
            .mh_scale
            .unwrap_or(OPTIMAL_SCALING_NUMERATOR / d as f64),
    );
    let last = mwg.states.last().expect("warmup retains init").clone();
    let mh = mh_phase(
        &last,
        config.n_mh,
        &proposal_cov,
        scale,
        |z| target.log_density(z),
        &mut rng,
    )?;

    let mh_acceptance = mh.acceptance[0];
    if !(0.1..=0.6).contains(&mh_acceptance) {
        log::warn!(
            "MH acceptance rate {mh_acceptance:.3} outside the expected [0.1, 0.6] band"
        );
    }

    let mut samples = Vec::new();
    for (i, z) in mh.draws().iter().enumerate() {
        if i < config.burn_in || (i - config.burn_in) % config.thinning != 0 {
            continue;
        }
        let (params, _) = target.params_from_state(z);
        samples.push(ChainSample {
            rho: params.rho,
            sigma2: params.sigma2,
            sigma02: params.sigma02,
            theta: match &theta_spec {
                ThetaSpec::Fixed(_) => Vec::new(),
                ThetaSpec::Calibrated => params.theta,
            },
            log_post: mh.log_densities[i + 1],
        });
    }

    let ess = coordinate_ess(&samples);
    Ok(Chain {
        samples,
        diagnostics: Diagnostics {
            mwg_acceptance: mwg.acceptance,
            mh_acceptance,
            ess,
        },
    })
}

fn coordinate_ess<T: Scalar>(samples: &[ChainSample<T>]) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let p = samples[0].rho.len();
    let k = samples[0].theta.len();
    let mut out = Vec::with_capacity(p + 2 + k);
    for l in 0..p {
        let xs: Vec<T> = samples.iter().map(|s| s.rho[l]).collect();
        out.push(stats::ess(&xs));
    }
    out.push(stats::ess(
        &samples.iter().map(|s| s.sigma2).collect::<Vec<_>>(),
    ));
    out.push(stats::ess(
        &samples.iter().map(|s| s.sigma02).collect::<Vec<_>>(),
    ));
    for j in 0..k {
        let xs: Vec<T> = samples.iter().map(|s| s.theta[j]).collect();
        out.push(stats::ess(&xs));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Design;
    use crate::stats::{batch_means_se, mean, variance};

    fn std_normal_target(z: &[f64]) -> f64 {
        -0.5 * z.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn mwg_zero_iterations_keeps_init_only() {
        let mut rng = rng_from_seed(1);
        let opts = MwgOptions {
            initial_step: 0.3,
            adapt_window: 0,
            target_accept: 0.44,
        };
        let chain = mwg_phase(&[1.0, 2.0], 0, &opts, std_normal_target, &mut rng);
        assert_eq!(chain.states.len(), 1);
        assert_eq!(chain.states[0], vec![1.0, 2.0]);
    }

    #[test]
    fn mwg_recovers_standard_normal_moments() {
        let mut rng = rng_from_seed(2);
        let opts = MwgOptions {
            initial_step: 0.5,
            adapt_window: 100,
            target_accept: 0.44,
        };
        let chain = mwg_phase(&[0.0, 0.0, 0.0], 20_000, &opts, std_normal_target, &mut rng);
        for i in 0..3 {
            let xs: Vec<f64> = chain.draws().iter().map(|s| s[i]).collect();
            let m = mean(&xs);
            let se = batch_means_se(&xs);
            assert!(
                m.abs() < 3.0 * se,
                "coordinate {i}: mean {m} vs 3 se {}",
                3.0 * se
            );
            let v = variance(&xs);
            assert!((v - 1.0).abs() < 0.15, "coordinate {i}: variance {v}");
        }
    }

    #[test]
    fn mwg_degenerate_step_accepts_everything() {
        let mut rng = rng_from_seed(3);
        let opts = MwgOptions {
            initial_step: 1e-14,
            adapt_window: 0,
            target_accept: 0.44,
        };
        let chain = mwg_phase(&[0.7], 500, &opts, std_normal_target, &mut rng);
        assert!((chain.acceptance[0] - 1.0).abs() < 1e-12);
        let xs: Vec<f64> = chain.draws().iter().map(|s| s[0]).collect();
        assert!(variance(&xs) < 1e-20);
    }

    #[test]
    fn proposal_cov_of_constant_chain_is_the_ridge() {
        let states = vec![vec![1.0f64, -2.0]; 50];
        let cov = estimate_proposal_cov(&states).unwrap();
        assert!((cov[(0, 0)] - PROPOSAL_COV_RIDGE).abs() < 1e-12);
        assert!((cov[(1, 1)] - PROPOSAL_COV_RIDGE).abs() < 1e-12);
        assert!(cov[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn proposal_cov_of_iid_normals_is_near_identity() {
        let mut rng = rng_from_seed(4);
        let states: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..3).map(|_| f64::standard_normal(&mut rng)).collect())
            .collect();
        let cov = estimate_proposal_cov(&states).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[(i, j)] - expected).abs() < 0.1,
                    "entry ({i},{j}) = {}",
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn proposal_cov_two_points_matches_textbook_variance() {
        let states = vec![vec![0.0f64], vec![2.0], vec![0.0], vec![2.0]];
        let cov = estimate_proposal_cov(&states).unwrap();
        // Unbiased variance of {0,2,0,2} is 4/3.
        assert!((cov[(0, 0)] - (4.0 / 3.0 + PROPOSAL_COV_RIDGE)).abs() < 1e-12);
    }

    #[test]
    fn proposal_cov_rejects_short_chains() {
        let states = vec![vec![0.0f64, 0.0], vec![1.0, 1.0]];
        assert!(matches!(
            estimate_proposal_cov(&states),
            Err(Error::ChainTooShort { .. })
        ));
    }

    #[test]
    fn mh_zero_iterations_keeps_init_only() {
        let mut rng = rng_from_seed(5);
        let cov = Matrix::<f64>::identity(2);
        let chain =
            mh_phase(&[0.5, -0.5], 0, &cov, 1.0, std_normal_target, &mut rng).unwrap();
        assert_eq!(chain.states.len(), 1);
    }

    #[test]
    fn mh_recovers_correlated_gaussian_moments() {
        // Target: zero-mean Gaussian with cov [[1, 0.8], [0.8, 1]].
        let det: f64 = 1.0 - 0.64;
        let target = move |z: &[f64]| {
            let quad = (z[0] * z[0] - 2.0 * 0.8 * z[0] * z[1] + z[1] * z[1]) / det;
            -0.5 * quad
        };
        let mut rng = rng_from_seed(6);
        let mut prop = Matrix::<f64>::identity(2);
        prop[(0, 1)] = 0.8;
        prop[(1, 0)] = 0.8;
        let chain = mh_phase(&[0.0, 0.0], 40_000, &prop, 2.83, target, &mut rng).unwrap();

        for i in 0..2 {
            let xs: Vec<f64> = chain.draws().iter().map(|s| s[i]).collect();
            let se = batch_means_se(&xs);
            assert!(mean(&xs).abs() < 3.0 * se);
        }
        let prods: Vec<f64> = chain.draws().iter().map(|s| s[0] * s[1]).collect();
        let se = batch_means_se(&prods);
        assert!(
            (mean(&prods) - 0.8).abs() < 3.0 * se.max(0.01),
            "cross moment {} (se {se})",
            mean(&prods)
        );
    }

    #[test]
    fn mh_on_three_state_discretized_target_matches_stationary_distribution() {
        // Piecewise-constant log-density over three unit cells of [0, 3);
        // the long-run cell occupancy must match the cell masses.
        let masses = [0.2f64, 0.5, 0.3];
        let target = move |z: &[f64]| {
            let x = z[0];
            if !(0.0..3.0).contains(&x) {
                return f64::NEG_INFINITY;
            }
            masses[x.floor() as usize].ln()
        };
        let mut rng = rng_from_seed(7);
        let prop = Matrix::<f64>::identity(1);
        let chain = mh_phase(&[1.5], 1_000_000, &prop, 1.0, target, &mut rng).unwrap();
        let mut counts = [0usize; 3];
        for s in chain.draws() {
            counts[s[0].floor() as usize] += 1;
        }
        let total = chain.draws().len() as f64;
        for (c, &m) in counts.iter().zip(&masses) {
            assert!(
                (*c as f64 / total - m).abs() < 1e-2,
                "occupancy {} vs mass {m}",
                *c as f64 / total
            );
        }
    }

    fn toy_data() -> (FieldObservations<f64>, KernelConfig<f64>, PriorSpec<f64>) {
        let design = Design::from_rows(&[
            vec![0.05],
            vec![0.25],
            vec![0.45],
            vec![0.65],
            vec![0.85],
            vec![0.95],
        ])
        .unwrap();
        let y = vec![0.31, -0.62, 0.44, -0.29, 0.55, -0.18];
        let data = FieldObservations::new(design, y).unwrap();
        let kernel = KernelConfig::new(1.9).unwrap();
        let prior = PriorSpec::new(2.0, 0.5, 2.0, 0.5, vec![]).unwrap();
        (data, kernel, prior)
    }

    #[test]
    fn target_is_pure_and_guards_non_finite_states() {
        let (data, kernel, prior) = toy_data();
        let model = crate::likelihood::ZeroModel;
        let fm = DirectFieldModel::new(&data, &model);
        let target =
            PosteriorTarget::new(&data, &kernel, &fm, &prior, &ThetaSpec::Fixed(vec![]))
                .unwrap();
        let z = target.initial_state().unwrap();
        assert_eq!(target.log_density(&z), target.log_density(&z));
        assert!(target.log_density(&z).is_finite());

        let mut bad = z.clone();
        bad[1] = f64::INFINITY;
        assert_eq!(target.log_density(&bad), f64::NEG_INFINITY);
        let mut nan = z;
        nan[0] = f64::NAN;
        assert_eq!(target.log_density(&nan), f64::NEG_INFINITY);
    }

    #[test]
    fn fixed_theta_is_absent_from_the_state() {
        let (data, kernel, _) = toy_data();
        let prior = PriorSpec::new(2.0, 0.5, 2.0, 0.5, vec![(0.0, 1.0)]).unwrap();
        let model = |x: &[f64], t: &[f64]| x[0] * t[0];
        let fm = DirectFieldModel::new(&data, &model);

        let fixed =
            PosteriorTarget::new(&data, &kernel, &fm, &prior, &ThetaSpec::Fixed(vec![0.5]))
                .unwrap();
        assert_eq!(fixed.dim(), 1 + 2);

        let calibrated =
            PosteriorTarget::new(&data, &kernel, &fm, &prior, &ThetaSpec::Calibrated)
                .unwrap();
        assert_eq!(calibrated.dim(), 1 + 2 + 1);
    }

    #[test]
    fn full_sampler_is_deterministic_under_a_fixed_seed() {
        let (data, kernel, prior) = toy_data();
        let model = crate::likelihood::ZeroModel;
        let fm = DirectFieldModel::new(&data, &model);
        let mut config = SamplerConfig::new(99);
        config.n_mwg = 60;
        config.n_mh = 120;
        let run = || {
            run_full_sampler(&data, &kernel, &fm, &prior, &ThetaSpec::Fixed(vec![]), &config)
                .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.len(), b.len());
        for (s, t) in a.samples.iter().zip(&b.samples) {
            assert_eq!(s.rho, t.rho);
            assert_eq!(s.sigma2, t.sigma2);
            assert_eq!(s.sigma02, t.sigma02);
            assert_eq!(s.log_post, t.log_post);
        }
    }

    #[test]
    fn full_sampler_concentrates_on_dominant_noise_variance() {
        // y is pure N(0, 0.5²) noise; the σ₀² posterior interval must cover
        // the truth.
        let design = Design::from_rows(&[
            vec![0.1],
            vec![0.3],
            vec![0.5],
            vec![0.7],
            vec![0.9],
            vec![0.2],
        ])
        .unwrap();
        let truth = 0.25f64;
        let mut rng = rng_from_seed(123);
        let y: Vec<f64> = (0..6)
            .map(|_| truth.sqrt() * f64::standard_normal(&mut rng))
            .collect();
        let data = FieldObservations::new(design, y).unwrap();
        let kernel = KernelConfig::new(1.9).unwrap();
        let prior = PriorSpec::new(2.0, 0.1, 2.0, 0.1, vec![]).unwrap();
        let model = crate::likelihood::ZeroModel;
        let fm = DirectFieldModel::new(&data, &model);
        let mut config = SamplerConfig::new(17);
        config.n_mwg = 1_500;
        config.n_mh = 4_000;
        let chain =
            run_full_sampler(&data, &kernel, &fm, &prior, &ThetaSpec::Fixed(vec![]), &config)
                .unwrap();
        let draws = chain.sigma02_draws();
        let lo = crate::stats::quantile(&draws, 0.025);
        let hi = crate::stats::quantile(&draws, 0.975);
        assert!(
            lo < truth && truth < hi,
            "credible interval ({lo}, {hi}) misses {truth}"
        );
    }

    #[test]
    fn burn_in_and_thinning_reduce_the_retained_draws() {
        let (data, kernel, prior) = toy_data();
        let model = crate::likelihood::ZeroModel;
        let fm = DirectFieldModel::new(&data, &model);
        let mut config = SamplerConfig::new(1);
        config.n_mwg = 30;
        config.n_mh = 100;
        config.burn_in = 20;
        config.thinning = 4;
        let chain =
            run_full_sampler(&data, &kernel, &fm, &prior, &ThetaSpec::Fixed(vec![]), &config)
                .unwrap();
        assert_eq!(chain.len(), 20);
    }

    #[test]
    fn sampler_config_validation() {
        let mut c = SamplerConfig::new(1);
        assert!(c.validate().is_ok());
        c.n_mh = 0;
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::new(1);
        c.burn_in = c.n_mh;
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::new(1);
        c.thinning = 0;
        assert!(c.validate().is_err());
    }
}
