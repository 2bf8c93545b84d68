//! Reference distribution variable selection, the repeated-chain baseline.
//!
//! A fictitious input with no influence on the data is appended to the
//! design, the full-model sampler runs, and the posterior median of the
//! fictitious ρ is recorded; repeating this `T` times gives a reference
//! distribution of "what an inert input's median looks like". A real input
//! is declared active when its representative median falls at or below a
//! low percentile of that reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Design, KernelConfig};
use crate::likelihood::{ComputerModel, FieldObservations};
use crate::mcmc::{run_full_sampler, DirectFieldModel, SamplerConfig, ThetaSpec};
use crate::rng::{derive_seed, rng_from_seed, TAG_FICTITIOUS, TAG_SAMPLER};
use crate::scalar::Scalar;
use crate::stats::{median, quantile};

/// Repetition count, classification percentiles, and the sampler template.
///
/// The sampler's `seed` acts as the master seed: repetition `t` derives its
/// fictitious column and its chain seed from it, so the `T` repetitions can
/// run in parallel and still reproduce a sequential run exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RdvsConfig {
    pub t_reps: usize,
    /// Percentiles of the reference distribution to classify against.
    /// `0` is accepted as the degenerate "nothing active" limit.
    pub percentiles: Vec<f64>,
    pub sampler: SamplerConfig,
}

impl RdvsConfig {
    pub fn new(t_reps: usize, sampler: SamplerConfig) -> Self {
        RdvsConfig {
            t_reps,
            percentiles: vec![0.05, 0.10, 0.15],
            sampler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_reps < 2 {
            return Err(Error::invalid("RDVS needs at least two repetitions"));
        }
        if self.percentiles.is_empty() {
            return Err(Error::invalid("no classification percentiles given"));
        }
        if self.percentiles.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
            return Err(Error::invalid("percentiles must lie in [0, 1]"));
        }
        self.sampler.validate()
    }
}

/// Per-repetition posterior medians: the `p` real inputs followed by the
/// fictitious one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMedians<T> {
    pub repetition: usize,
    pub rho_medians: Vec<T>,
}

/// Classification output of one RDVS run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RdvsResult<T> {
    pub p: usize,
    pub t_reps: usize,
    /// Posterior medians of the fictitious ρ, one per repetition.
    pub reference_medians: Vec<T>,
    /// Representative median per real input: the across-repetition median
    /// of the per-run posterior medians.
    pub input_medians: Vec<T>,
    pub percentiles: Vec<f64>,
    /// Reference-quantile threshold per percentile.
    pub thresholds: Vec<T>,
    /// Active flags per percentile (outer) and input (inner).
    pub active: Vec<Vec<bool>>,
    /// The raw per-repetition medians, for export and diagnostics.
    pub runs: Vec<RunMedians<T>>,
}

/// A repetition failed; the medians of the repetitions that did finish are
/// retained so callers can persist partial results.
#[derive(Debug)]
pub struct RdvsRunFailure<T> {
    pub completed: Vec<RunMedians<T>>,
    pub error: Error,
}

impl<T> std::fmt::Display for RdvsRunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "RDVS aborted after {} completed repetitions: {}",
            self.completed.len(),
            self.error
        )
    }
}

/// Append one fictitious input column of i.i.d. Uniform(0, 1) draws.
pub fn augment_design<T: Scalar, R: rand::Rng>(design: &Design<T>, rng: &mut R) -> Design<T> {
    let col: Vec<T> = (0..design.n()).map(|_| T::unit_uniform(rng)).collect();
    design
        .with_column(&col)
        .expect("column length matches by construction")
}

/// Restrict a model to the first `keep` input coordinates, hiding the
/// fictitious column from the simulator.
struct TruncatedInputModel<'a, M: ?Sized> {
    inner: &'a M,
    keep: usize,
}

impl<'a, T: Scalar, M: ComputerModel<T> + ?Sized> ComputerModel<T>
    for TruncatedInputModel<'a, M>
{
    fn eval(&self, x: &[T], theta: &[T]) -> Result<T> {
        self.inner.eval(&x[..self.keep], theta)
    }
}

/// Classify inputs against the reference distribution at one percentile.
///
/// An input is active when its median is at or below the percentile's
/// reference quantile; percentile 0 is the empty-set limit.
pub fn classify_against_reference<T: Scalar>(
    input_medians: &[T],
    reference_medians: &[T],
    percentile: f64,
) -> (T, Vec<bool>) {
    let threshold = if percentile <= 0.0 {
        T::neg_infinity()
    } else {
        quantile(reference_medians, percentile)
    };
    let flags = input_medians.iter().map(|&m| m <= threshold).collect();
    (threshold, flags)
}

/// Run the full RDVS baseline: `T` independent augmented-design chains,
/// reference and input medians, and flags per percentile.
pub fn rdvs_run<T, M>(
    data: &FieldObservations<T>,
    kernel: &KernelConfig<T>,
    model: &M,
    prior: &crate::priors::PriorSpec<T>,
    theta_spec: &ThetaSpec<T>,
    config: &RdvsConfig,
) -> std::result::Result<RdvsResult<T>, Box<RdvsRunFailure<T>>>
where
    T: Scalar,
    M: ComputerModel<T> + Sync,
{
    if let Err(error) = config.validate() {
        return Err(Box::new(RdvsRunFailure {
            completed: Vec::new(),
            error,
        }));
    }
    let p = data.p();
    let master = config.sampler.seed;
    let outcomes: Vec<Result<RunMedians<T>>> = (0..config.t_reps)
        .into_par_iter()
        .map(|t| {
            let fict_seed = derive_seed(derive_seed(master, TAG_FICTITIOUS), t as u64);
            let mut rng = rng_from_seed(fict_seed);
            let augmented = augment_design(data.design(), &mut rng);
            let aug_data = data.with_design(augmented)?;
            let truncated = TruncatedInputModel { inner: model, keep: p };
            let field_model = DirectFieldModel::new(&aug_data, &truncated);
            let mut sampler = config.sampler.clone();
            sampler.seed = derive_seed(derive_seed(master, TAG_SAMPLER), t as u64);
            let chain =
                run_full_sampler(&aug_data, kernel, &field_model, prior, theta_spec, &sampler)?;
            Ok(RunMedians {
                repetition: t,
                rho_medians: chain.rho_medians(),
            })
        })
        .collect();

    let mut runs = Vec::with_capacity(config.t_reps);
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(r) => runs.push(r),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(error) = first_error {
        return Err(Box::new(RdvsRunFailure { completed: runs, error }));
    }

    let reference_medians: Vec<T> = runs.iter().map(|r| r.rho_medians[p]).collect();
    let input_medians: Vec<T> = (0..p)
        .map(|l| median(&runs.iter().map(|r| r.rho_medians[l]).collect::<Vec<_>>()))
        .collect();

    let mut thresholds = Vec::with_capacity(config.percentiles.len());
    let mut active = Vec::with_capacity(config.percentiles.len());
    for &q in &config.percentiles {
        let (thr, flags) = classify_against_reference(&input_medians, &reference_medians, q);
        thresholds.push(thr);
        active.push(flags);
    }

    Ok(RdvsResult {
        p,
        t_reps: config.t_reps,
        reference_medians,
        input_medians,
        percentiles: config.percentiles.clone(),
        thresholds,
        active,
        runs,
    })
}
