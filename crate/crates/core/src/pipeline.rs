//! End-to-end screening runs: one bundle of options, one call per method.
//!
//! The same option bundle drives the command-line tool, the benchmark
//! harness, and the tests, so "what settings produced this file" is always
//! answerable from one value.

use serde::{Deserialize, Serialize};

use crate::emulator::{EmulatedFieldModel, FittedEmulator};
use crate::error::Result;
use crate::kernel::KernelConfig;
use crate::likelihood::{ComputerModel, FieldObservations};
use crate::mcmc::{run_full_sampler, Chain, DirectFieldModel, SamplerConfig, ThetaSpec};
use crate::pips::{screen_chain, ScreeningResult};
use crate::priors::{ModelSpacePrior, PriorSpec, SpikeConfig};
use crate::rdvs::{rdvs_run, RdvsConfig, RdvsResult, RdvsRunFailure};
use crate::scalar::Scalar;

/// Everything one screening analysis needs besides the data and the model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisOptions<T> {
    pub kernel: KernelConfig<T>,
    pub spike: SpikeConfig<T>,
    pub prior: PriorSpec<T>,
    pub sampler: SamplerConfig,
    pub model_prior: ModelSpacePrior<T>,
    pub threshold: T,
    pub pairwise: bool,
}

impl<T: Scalar> AnalysisOptions<T> {
    /// The reference settings used throughout the benchmarks: kernel
    /// exponent 1.9, spike α = 100, IG(3, 1) and IG(4, 0.02) variance
    /// priors, uniform θ priors over the given bounds, 5,000 warmup and
    /// 10,000 MH iterations, constant model-space prior, threshold 0.5.
    pub fn standard(seed: u64, theta_bounds: Vec<(T, T)>) -> Self {
        AnalysisOptions {
            kernel: KernelConfig::new(T::from_f(1.9)).expect("1.9 lies in (0, 2]"),
            spike: SpikeConfig::default(),
            prior: PriorSpec::new(
                T::from_f(3.0),
                T::from_f(1.0),
                T::from_f(4.0),
                T::from_f(0.02),
                theta_bounds,
            )
            .expect("reference priors are valid"),
            sampler: SamplerConfig::new(seed),
            model_prior: ModelSpacePrior::Constant,
            threshold: T::from_f(0.5),
            pairwise: false,
        }
    }

    /// Validate every module's preconditions before any compute.
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(self.threshold > T::zero() && self.threshold < T::one()) {
            return Err(crate::error::Error::invalid(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Run the full-model chain on directly evaluable model output and
/// post-process it into the screening result.
pub fn screen_pips<T, M>(
    data: &FieldObservations<T>,
    model: &M,
    theta_spec: &ThetaSpec<T>,
    opts: &AnalysisOptions<T>,
) -> Result<(Chain<T>, ScreeningResult<T>)>
where
    T: Scalar,
    M: ComputerModel<T> + ?Sized,
{
    opts.validate()?;
    let field_model = DirectFieldModel::new(data, model);
    let chain = run_full_sampler(
        data,
        &opts.kernel,
        &field_model,
        &opts.prior,
        theta_spec,
        &opts.sampler,
    )?;
    let result = screen_chain(
        &chain,
        &opts.spike,
        &opts.model_prior,
        opts.threshold,
        opts.pairwise,
    )?;
    Ok((chain, result))
}

/// Screening with the computer model replaced by a fitted emulator
/// (the emulator-extended likelihood).
pub fn screen_pips_emulated<T: Scalar>(
    data: &FieldObservations<T>,
    em: &FittedEmulator<T>,
    theta_spec: &ThetaSpec<T>,
    opts: &AnalysisOptions<T>,
) -> Result<(Chain<T>, ScreeningResult<T>)> {
    opts.validate()?;
    let field_model = EmulatedFieldModel::new(em, data.design());
    let chain = run_full_sampler(
        data,
        &opts.kernel,
        &field_model,
        &opts.prior,
        theta_spec,
        &opts.sampler,
    )?;
    let result = screen_chain(
        &chain,
        &opts.spike,
        &opts.model_prior,
        opts.threshold,
        opts.pairwise,
    )?;
    Ok((chain, result))
}

/// Run the RDVS baseline with the analysis options' kernel and priors.
pub fn screen_rdvs<T, M>(
    data: &FieldObservations<T>,
    model: &M,
    theta_spec: &ThetaSpec<T>,
    opts: &AnalysisOptions<T>,
    t_reps: usize,
    percentiles: Vec<f64>,
) -> std::result::Result<RdvsResult<T>, Box<RdvsRunFailure<T>>>
where
    T: Scalar,
    M: ComputerModel<T> + Sync,
{
    let config = RdvsConfig {
        t_reps,
        percentiles,
        sampler: opts.sampler.clone(),
    };
    rdvs_run(data, &opts.kernel, model, &opts.prior, theta_spec, &config)
}
