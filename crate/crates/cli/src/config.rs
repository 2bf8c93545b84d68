//! The analysis configuration file: a versioned TOML document whose
//! resolved form is written next to every output, so any result can be
//! reproduced from `(effective config, seed)` alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use pipscreen::error::{Error, Result};
use pipscreen::kernel::KernelConfig;
use pipscreen::mcmc::SamplerConfig;
use pipscreen::pipeline::AnalysisOptions;
use pipscreen::priors::{ModelSpacePrior, PriorSpec, SpikeConfig};

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_seed() -> u64 {
    1
}
fn default_threshold() -> f64 {
    0.5
}
fn default_a() -> f64 {
    1.9
}
fn default_alpha() -> f64 {
    SpikeConfig::<f64>::DEFAULT_ALPHA
}
fn default_sigma2_shape() -> f64 {
    3.0
}
fn default_sigma2_rate() -> f64 {
    1.0
}
fn default_sigma02_shape() -> f64 {
    4.0
}
fn default_sigma02_rate() -> f64 {
    0.02
}
fn default_n_mwg() -> usize {
    5_000
}
fn default_n_mh() -> usize {
    10_000
}
fn default_thinning() -> usize {
    1
}
fn default_initial_step() -> f64 {
    0.3
}
fn default_adapt_window() -> usize {
    100
}
fn default_true() -> bool {
    true
}
fn default_model_kind() -> String {
    "sobol-g".into()
}
fn default_rdvs_t() -> usize {
    20
}
fn default_percentiles() -> Vec<f64> {
    vec![0.05, 0.10, 0.15]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub pairwise: bool,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub spike: SpikeSection,
    #[serde(default)]
    pub priors: PriorSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub model_space: ModelSpaceSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub rdvs: RdvsSection,
    #[serde(default)]
    pub emulator: EmulatorSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "default_a")]
    pub a: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Optional per-input overrides; must match p when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    #[serde(default = "default_sigma2_shape")]
    pub sigma2_shape: f64,
    #[serde(default = "default_sigma2_rate")]
    pub sigma2_rate: f64,
    #[serde(default = "default_sigma02_shape")]
    pub sigma02_shape: f64,
    #[serde(default = "default_sigma02_rate")]
    pub sigma02_rate: f64,
    /// Bounds of the uniform θ priors; defaults to `[0, 1]` per calibrated
    /// coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_n_mwg")]
    pub n_mwg: usize,
    #[serde(default = "default_n_mh")]
    pub n_mh: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default = "default_adapt_window")]
    pub adapt_window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mh_scale: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `sobol-g` (the shifted g-function sum) or `zero` (no simulator mean).
    #[serde(default = "default_model_kind")]
    pub kind: String,
    /// Number of leading inputs the g-function sum runs over; defaults to
    /// the dataset sidecar's scenario when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default)]
    pub enabled: bool,
    /// Fixed θ values when calibration is off; defaults to the sidecar's
    /// true θ when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpaceSection {
    /// Per-input prior inclusion probabilities; absent means the constant
    /// prior over the model space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Center and scale the observations at ingestion (recorded in the
    /// ingest metadata; the model output is carried onto the same scale).
    #[serde(default = "default_true")]
    pub normalize_y: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdvsSection {
    #[serde(default = "default_rdvs_t")]
    pub t: usize,
    #[serde(default = "default_percentiles")]
    pub percentiles: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmulatorSection {
    #[serde(default)]
    pub enabled: bool,
    /// CSV of design runs (`x_1..x_p, theta_1..theta_k, f`) to fit on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<String>,
    /// A previously fitted emulator JSON to load instead of fitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted: Option<String>,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { a: default_a() }
    }
}
impl Default for SpikeSection {
    fn default() -> Self {
        SpikeSection {
            alpha: default_alpha(),
            alphas: None,
        }
    }
}
impl Default for PriorSection {
    fn default() -> Self {
        PriorSection {
            sigma2_shape: default_sigma2_shape(),
            sigma2_rate: default_sigma2_rate(),
            sigma02_shape: default_sigma02_shape(),
            sigma02_rate: default_sigma02_rate(),
            theta_bounds: None,
        }
    }
}
impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            n_mwg: default_n_mwg(),
            n_mh: default_n_mh(),
            burn_in: 0,
            thinning: default_thinning(),
            initial_step: default_initial_step(),
            adapt_window: default_adapt_window(),
            mh_scale: None,
        }
    }
}
impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: default_model_kind(),
            dims: None,
        }
    }
}
impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            enabled: false,
            theta: None,
        }
    }
}
impl Default for ModelSpaceSection {
    fn default() -> Self {
        ModelSpaceSection { taus: None }
    }
}
impl Default for DataSection {
    fn default() -> Self {
        DataSection { normalize_y: true }
    }
}
impl Default for RdvsSection {
    fn default() -> Self {
        RdvsSection {
            t: default_rdvs_t(),
            percentiles: default_percentiles(),
        }
    }
}
impl Default for EmulatorSection {
    fn default() -> Self {
        EmulatorSection {
            enabled: false,
            design: None,
            fitted: None,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            schema_version: SCHEMA_VERSION,
            seed: default_seed(),
            threshold: default_threshold(),
            pairwise: false,
            kernel: KernelSection::default(),
            spike: SpikeSection::default(),
            priors: PriorSection::default(),
            sampler: SamplerSection::default(),
            model: ModelSection::default(),
            calibration: CalibrationSection::default(),
            model_space: ModelSpaceSection::default(),
            data: DataSection::default(),
            rdvs: RdvsSection::default(),
            emulator: EmulatorSection::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: AnalysisConfig = toml::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported config schema version {} (this build reads {})",
                config.schema_version, SCHEMA_VERSION
            )));
        }
        Ok(config)
    }

    /// Write the fully resolved configuration next to the outputs.
    pub fn write_effective(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::invalid(format!("config serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// The θ bounds used when calibration is enabled: the configured ones,
    /// or `[0, 1]` per coordinate.
    pub fn resolved_theta_bounds(&self, k: usize) -> Result<Vec<(f64, f64)>> {
        match &self.priors.theta_bounds {
            Some(bounds) => {
                if bounds.len() != k {
                    return Err(Error::dim(format!(
                        "{} theta bounds for k = {k} calibration parameters",
                        bounds.len()
                    )));
                }
                Ok(bounds.clone())
            }
            None => Ok(vec![(0.0, 1.0); k]),
        }
    }

    /// Assemble the core options bundle; `k` is the number of calibrated
    /// coordinates (0 when calibration is off).
    pub fn to_options(&self, k: usize) -> Result<AnalysisOptions<f64>> {
        let bounds = if self.calibration.enabled {
            self.resolved_theta_bounds(k)?
        } else {
            Vec::new()
        };
        let spike = match &self.spike.alphas {
            Some(alphas) => SpikeConfig::per_input(alphas.clone())?,
            None => SpikeConfig::new(self.spike.alpha)?,
        };
        let model_prior = match &self.model_space.taus {
            Some(taus) => ModelSpacePrior::bernoulli(taus.clone())?,
            None => ModelSpacePrior::Constant,
        };
        let mut sampler = SamplerConfig::new(self.seed);
        sampler.n_mwg = self.sampler.n_mwg;
        sampler.n_mh = self.sampler.n_mh;
        sampler.burn_in = self.sampler.burn_in;
        sampler.thinning = self.sampler.thinning;
        sampler.initial_step = self.sampler.initial_step;
        sampler.adapt_window = self.sampler.adapt_window;
        sampler.mh_scale = self.sampler.mh_scale;
        let opts = AnalysisOptions {
            kernel: KernelConfig::new(self.kernel.a)?,
            spike,
            prior: PriorSpec::new(
                self.priors.sigma2_shape,
                self.priors.sigma2_rate,
                self.priors.sigma02_shape,
                self.priors.sigma02_rate,
                bounds,
            )?,
            sampler,
            model_prior,
            threshold: self.threshold,
            pairwise: self.pairwise,
        };
        opts.validate()?;
        Ok(opts)
    }
}
