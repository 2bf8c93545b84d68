//! `screen pips` and `screen rdvs`: ingest a dataset, run one method,
//! write the result files and a terminal summary.

use std::path::Path;

use pipscreen::emulator::{fit_emulator, EmulatorFitOptions, FittedEmulator};
use pipscreen::error::{Error, Result};
use pipscreen::io;
use pipscreen::likelihood::{ComputerModel, ScaledModel};
use pipscreen::mcmc::ThetaSpec;
use pipscreen::pipeline::{screen_pips, screen_pips_emulated, screen_rdvs, AnalysisOptions};
use pipscreen::pips::ENUMERATION_CAP;
use pipscreen::rng::{derive_seed, TAG_EMULATOR};
use pipscreen::scenarios::{ScenarioDefinition, ScenarioModel};

use crate::config::AnalysisConfig;
use crate::ingest::{ingest, write_ingest_meta, IngestedData};
use crate::render;
use crate::{RdvsArgs, ScreenArgs};

/// The resolved model the likelihood will see.
enum ResolvedModel {
    SobolG(ScaledModel<ScenarioModel>),
    Zero,
}

impl ComputerModel<f64> for ResolvedModel {
    fn eval(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        match self {
            ResolvedModel::SobolG(m) => m.eval(x, theta),
            ResolvedModel::Zero => Ok(0.0),
        }
    }
}

struct Prepared {
    config: AnalysisConfig,
    data: IngestedData,
    model: ResolvedModel,
    theta_spec: ThetaSpec<f64>,
    options: AnalysisOptions<f64>,
    /// Calibrated coordinate count (0 when fixed).
    k: usize,
}

fn load_config(args: &ScreenArgs) -> Result<AnalysisConfig> {
    let mut config = match &args.config {
        Some(path) => AnalysisConfig::load(path)?,
        None => AnalysisConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(threshold) = args.threshold {
        config.threshold = threshold;
    }
    if let Some(alpha) = args.alpha {
        config.spike.alpha = alpha;
        config.spike.alphas = None;
    }
    if let Some(calibrate) = args.calibrate {
        config.calibration.enabled = calibrate;
    }
    if let Some(theta) = &args.theta {
        config.calibration.theta = Some(theta.clone());
    }
    if args.pairwise {
        config.pairwise = true;
    }
    Ok(config)
}

/// Number of model dimensions: explicit config, else the sidecar scenario.
fn resolve_model_dims(config: &AnalysisConfig, data: &IngestedData) -> Result<usize> {
    if let Some(dims) = config.model.dims {
        return Ok(dims);
    }
    if let Some(sidecar) = &data.meta.sidecar {
        if let Ok(def) = ScenarioDefinition::<f64>::by_id(&sidecar.scenario) {
            return Ok(def.model_dims.len());
        }
    }
    Err(Error::invalid(
        "model.dims is not configured and the dataset has no recognized scenario sidecar",
    ))
}

fn resolve_fixed_theta(
    config: &AnalysisConfig,
    data: &IngestedData,
    k: usize,
) -> Result<Vec<f64>> {
    if let Some(theta) = &config.calibration.theta {
        if theta.len() < k {
            return Err(Error::dim(format!(
                "{} fixed theta values for a model needing {k}",
                theta.len()
            )));
        }
        return Ok(theta[..k].to_vec());
    }
    if let Some(sidecar) = &data.meta.sidecar {
        if sidecar.theta_true.len() >= k {
            return Ok(sidecar.theta_true[..k].to_vec());
        }
    }
    Err(Error::invalid(
        "calibration is off but no fixed theta values are available \
         (set calibration.theta or supply a dataset sidecar)",
    ))
}

fn prepare(args: &ScreenArgs) -> Result<Prepared> {
    let config = load_config(args)?;
    let data = ingest(&args.data, config.data.normalize_y)?;
    let p = data.observations.p();
    if p > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            p,
            cap: ENUMERATION_CAP,
        });
    }

    let (model, model_k) = match config.model.kind.as_str() {
        "zero" => (ResolvedModel::Zero, 0),
        "sobol-g" => {
            let dims = resolve_model_dims(&config, &data)?;
            if dims > p {
                return Err(Error::dim(format!(
                    "model uses {dims} inputs but the data has p = {p}"
                )));
            }
            let inner = ScenarioModel {
                dims: (0..dims).collect(),
            };
            (
                ResolvedModel::SobolG(ScaledModel {
                    inner,
                    offset: data.meta.y_offset,
                    scale: data.meta.y_scale,
                }),
                dims,
            )
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown model kind `{other}` (expected sobol-g or zero)"
            )))
        }
    };

    let (theta_spec, k) = if config.calibration.enabled {
        (ThetaSpec::Calibrated, model_k)
    } else if model_k == 0 {
        (ThetaSpec::Fixed(Vec::new()), 0)
    } else {
        (ThetaSpec::Fixed(resolve_fixed_theta(&config, &data, model_k)?), 0)
    };

    let options = config.to_options(if config.calibration.enabled { model_k } else { 0 })?;
    Ok(Prepared {
        config,
        data,
        model,
        theta_spec,
        options,
        k,
    })
}

fn write_common(prepared: &Prepared, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    prepared
        .config
        .write_effective(&out_dir.join("effective-config.toml"))?;
    write_ingest_meta(&out_dir.join("ingest-meta.json"), &prepared.data.meta)?;
    Ok(())
}

/// Emulator source: a fitted JSON, or design runs to fit now.
fn resolve_emulator(prepared: &Prepared, out_dir: &Path) -> Result<FittedEmulator<f64>> {
    let section = &prepared.config.emulator;
    if let Some(fitted) = &section.fitted {
        return io::read_emulator_json(Path::new(fitted));
    }
    let Some(design_path) = &section.design else {
        return Err(Error::invalid(
            "emulator.enabled is set but neither emulator.fitted nor emulator.design is given",
        ));
    };
    let design = io::read_emulator_design_csv(Path::new(design_path))?;
    let opts = EmulatorFitOptions::new(derive_seed(prepared.config.seed, TAG_EMULATOR));
    let em = fit_emulator(&design, &prepared.options.kernel, &opts)?;
    io::write_emulator_json(&out_dir.join("emulator.json"), &em)?;
    Ok(em)
}

pub fn run_pips(args: &ScreenArgs, out_dir: &Path) -> Result<()> {
    let prepared = prepare(args)?;
    write_common(&prepared, out_dir)?;

    let (chain, result) = if prepared.config.emulator.enabled {
        let em = resolve_emulator(&prepared, out_dir)?;
        screen_pips_emulated(
            &prepared.data.observations,
            &em,
            &prepared.theta_spec,
            &prepared.options,
        )?
    } else {
        screen_pips(
            &prepared.data.observations,
            &prepared.model,
            &prepared.theta_spec,
            &prepared.options,
        )?
    };

    io::write_chain_csv(&out_dir.join("chain.csv"), &chain)?;
    io::write_screening_json(&out_dir.join("screening.json"), &result)?;
    io::write_screening_csv(&out_dir.join("screening-summary.csv"), &result)?;
    let rows: Vec<pipscreen::bench::RawPipRow> = (0..result.p)
        .map(|l| pipscreen::bench::RawPipRow {
            scenario: prepared
                .data
                .meta
                .sidecar
                .as_ref()
                .map(|s| s.scenario.clone())
                .unwrap_or_else(|| "external".into()),
            calibrated: prepared.k > 0,
            replication: 0,
            input: format!("x_{}", l + 1),
            pip: result.inclusion_probs[l],
        })
        .collect();
    io::write_pip_long_csv(&out_dir.join("pips-long.csv"), &rows)?;

    print!("{}", render::screening_table(&result));
    println!(
        "MH acceptance {:.3}; outputs in {}",
        chain.diagnostics.mh_acceptance,
        out_dir.display()
    );
    Ok(())
}

pub fn run_rdvs(args: &RdvsArgs, out_dir: &Path) -> Result<()> {
    let prepared = prepare(&args.common)?;
    write_common(&prepared, out_dir)?;

    let t_reps = args.t_reps.unwrap_or(prepared.config.rdvs.t);
    let percentiles = args
        .percentiles
        .clone()
        .unwrap_or_else(|| prepared.config.rdvs.percentiles.clone());

    match screen_rdvs(
        &prepared.data.observations,
        &prepared.model,
        &prepared.theta_spec,
        &prepared.options,
        t_reps,
        percentiles,
    ) {
        Ok(result) => {
            io::write_rdvs_json(&out_dir.join("rdvs.json"), &result)?;
            io::write_rdvs_reference_csv(&out_dir.join("rdvs-reference.csv"), &result)?;
            print!("{}", render::rdvs_table(&result));
            println!("outputs in {}", out_dir.display());
            Ok(())
        }
        Err(failure) => {
            io::write_run_medians_csv(&out_dir.join("rdvs-partial.csv"), &failure.completed)?;
            eprintln!(
                "partial results for {} repetitions written to {}",
                failure.completed.len(),
                out_dir.join("rdvs-partial.csv").display()
            );
            Err(failure.error)
        }
    }
}
