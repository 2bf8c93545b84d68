//! Replicated benchmark runs: detection-proportion tables for the
//! synthetic scenarios, for both screening methods.
//!
//! Replication `r` of a suite derives a sub-master seed, generates its own
//! dataset from it, and hands derived seeds to the samplers, so the whole
//! suite is reproducible from one master seed and parallelizes over
//! replications without changing any number.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::FieldObservations;
use crate::mcmc::{Chain, ThetaSpec};
use crate::pipeline::{screen_pips, screen_rdvs, AnalysisOptions};
use crate::pips::ScreeningResult;
use crate::rdvs::RdvsResult;
use crate::rng::{derive_seed, TAG_RDVS, TAG_REPLICATION, TAG_SAMPLER};
use crate::scalar::Scalar;
use crate::scenarios::{gen_dataset, Dataset, ScenarioDefinition};

/// The shipped suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    /// Benchmark scenario with θ fixed at its true value.
    Table1,
    /// Same scenario with θ calibrated.
    Table2,
    /// The three composite validation scenarios, fixed and calibrated.
    Scenarios42,
}

impl Suite {
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "table1" => Ok(Suite::Table1),
            "table2" => Ok(Suite::Table2),
            "scenarios42" => Ok(Suite::Scenarios42),
            other => Err(Error::UnknownScenario(format!("suite {other}"))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Table2 => "table2",
            Suite::Scenarios42 => "scenarios42",
        }
    }
}

/// One finished replication.
#[derive(Clone, Debug)]
pub struct ReplicationRun<T> {
    pub replication: usize,
    pub dataset: Dataset<T>,
    pub chain: Chain<T>,
    pub result: ScreeningResult<T>,
}

/// Column names `x_1 … x_p`.
pub fn input_names(p: usize) -> Vec<String> {
    (1..=p).map(|l| format!("x_{l}")).collect()
}

/// Detection proportions per input, one row per method setting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionTable {
    pub inputs: Vec<String>,
    pub rows: Vec<DetectionRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionRow {
    pub label: String,
    pub proportions: Vec<f64>,
}

/// One input's inclusion probability in one replication (long format for
/// boxplots).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawPipRow {
    pub scenario: String,
    pub calibrated: bool,
    pub replication: usize,
    pub input: String,
    pub pip: f64,
}

/// One scenario/treatment combination of a suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchSection {
    pub scenario: String,
    pub calibrated: bool,
    pub table: DetectionTable,
}

/// Full output of a suite run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub suite: String,
    pub reps: usize,
    pub seed: u64,
    pub sections: Vec<BenchSection>,
    pub raw_pips: Vec<RawPipRow>,
}

/// Reference analysis options for one scenario: θ bounds `[0, 1]` per
/// calibrated coordinate, everything else standard.
pub fn standard_options_for<T: Scalar>(
    def: &ScenarioDefinition<T>,
    calibrate: bool,
    seed: u64,
) -> AnalysisOptions<T> {
    let k = def.model_dims.len();
    let bounds = if calibrate {
        vec![(T::zero(), T::one()); k]
    } else {
        Vec::new()
    };
    AnalysisOptions::standard(seed, bounds)
}

/// θ treatment of one scenario run: fixed at the true values entering the
/// assumed model, or calibrated.
pub fn theta_spec_for<T: Scalar>(def: &ScenarioDefinition<T>, calibrate: bool) -> ThetaSpec<T> {
    if calibrate {
        ThetaSpec::Calibrated
    } else {
        ThetaSpec::Fixed(def.true_theta[..def.model_dims.len()].to_vec())
    }
}

/// Run `reps` independent PIPS replications of a scenario. The base
/// options' sampler seed acts as the master seed.
pub fn run_pips_replications<T: Scalar>(
    def: &ScenarioDefinition<T>,
    calibrate: bool,
    reps: usize,
    base: &AnalysisOptions<T>,
) -> Result<Vec<ReplicationRun<T>>> {
    if reps == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let master = base.sampler.seed;
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(master, TAG_REPLICATION + r as u64);
            let dataset = gen_dataset(def, rep_seed);
            let data = FieldObservations::new(dataset.design.clone(), dataset.y.clone())?;
            let model = def.assumed_model();
            let mut opts = base.clone();
            opts.sampler.seed = derive_seed(rep_seed, TAG_SAMPLER);
            let (chain, result) =
                screen_pips(&data, &model, &theta_spec_for(def, calibrate), &opts)?;
            Ok(ReplicationRun {
                replication: r,
                dataset,
                chain,
                result,
            })
        })
        .collect()
}

/// Fraction of replications in which each input was declared active, at
/// each threshold.
pub fn detection_proportions<T: Scalar>(
    runs: &[ReplicationRun<T>],
    thresholds: &[f64],
) -> DetectionTable {
    let p = runs.first().map_or(0, |r| r.result.p);
    let rows = thresholds
        .iter()
        .map(|&th| {
            let proportions = (0..p)
                .map(|l| {
                    let hits = runs
                        .iter()
                        .filter(|r| r.result.inclusion_probs[l].to_f() > th)
                        .count();
                    hits as f64 / runs.len() as f64
                })
                .collect();
            DetectionRow {
                label: format!("pips-th{th}"),
                proportions,
            }
        })
        .collect();
    DetectionTable {
        inputs: input_names(p),
        rows,
    }
}

/// Run `reps` RDVS replications on the *same* datasets as the PIPS
/// replications with the same master seed, and tabulate detections per
/// percentile.
pub fn run_rdvs_replications<T: Scalar>(
    def: &ScenarioDefinition<T>,
    calibrate: bool,
    reps: usize,
    t_reps: usize,
    percentiles: &[f64],
    base: &AnalysisOptions<T>,
) -> Result<(DetectionTable, Vec<RdvsResult<T>>)> {
    if reps == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let master = base.sampler.seed;
    let results: Vec<RdvsResult<T>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(master, TAG_REPLICATION + r as u64);
            let dataset = gen_dataset(def, rep_seed);
            let data = FieldObservations::new(dataset.design.clone(), dataset.y.clone())?;
            let model = def.assumed_model();
            let mut opts = base.clone();
            opts.sampler.seed = derive_seed(rep_seed, TAG_RDVS);
            screen_rdvs(
                &data,
                &model,
                &theta_spec_for(def, calibrate),
                &opts,
                t_reps,
                percentiles.to_vec(),
            )
            .map_err(|failure| failure.error)
        })
        .collect::<Result<Vec<_>>>()?;

    let p = def.p;
    let rows = percentiles
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let proportions = (0..p)
                .map(|l| {
                    let hits = results.iter().filter(|res| res.active[qi][l]).count();
                    hits as f64 / results.len() as f64
                })
                .collect();
            DetectionRow {
                label: format!("rdvs-q{q}"),
                proportions,
            }
        })
        .collect();
    Ok((
        DetectionTable {
            inputs: input_names(p),
            rows,
        },
        results,
    ))
}

/// Settings of one suite run.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub reps: usize,
    pub seed: u64,
    /// PIPS rows of the tables.
    pub thresholds: Vec<f64>,
    /// RDVS settings, when the baseline is included.
    pub rdvs: Option<RdvsSuiteOptions>,
    /// Sampler schedule override (warmup, MH); `None` keeps the standard
    /// 5,000/10,000.
    pub schedule: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct RdvsSuiteOptions {
    pub reps: usize,
    pub t_reps: usize,
    pub percentiles: Vec<f64>,
}

impl SuiteOptions {
    pub fn new(reps: usize, seed: u64) -> Self {
        SuiteOptions {
            reps,
            seed,
            thresholds: vec![0.1, 0.5, 0.9],
            rdvs: None,
            schedule: None,
        }
    }
}

fn raw_rows<T: Scalar>(
    def: &ScenarioDefinition<T>,
    calibrated: bool,
    runs: &[ReplicationRun<T>],
) -> Vec<RawPipRow> {
    let names = input_names(def.p);
    runs.iter()
        .flat_map(|run| {
            names.iter().enumerate().map(move |(l, name)| RawPipRow {
                scenario: def.id.clone(),
                calibrated,
                replication: run.replication,
                input: name.clone(),
                pip: run.result.inclusion_probs[l].to_f(),
            })
        })
        .collect()
}

fn run_combo<T: Scalar>(
    def: &ScenarioDefinition<T>,
    calibrated: bool,
    opts: &SuiteOptions,
) -> Result<(BenchSection, Vec<RawPipRow>)> {
    let mut base = standard_options_for(def, calibrated, opts.seed);
    if let Some((n_mwg, n_mh)) = opts.schedule {
        base.sampler.n_mwg = n_mwg;
        base.sampler.n_mh = n_mh;
    }
    let runs = run_pips_replications(def, calibrated, opts.reps, &base)?;
    let mut table = detection_proportions(&runs, &opts.thresholds);
    if let Some(rdvs) = &opts.rdvs {
        let (rdvs_table, _) = run_rdvs_replications(
            def,
            calibrated,
            rdvs.reps,
            rdvs.t_reps,
            &rdvs.percentiles,
            &base,
        )?;
        let mut rows = rdvs_table.rows;
        rows.extend(table.rows);
        table.rows = rows;
    }
    let raw = raw_rows(def, calibrated, &runs);
    Ok((
        BenchSection {
            scenario: def.id.clone(),
            calibrated,
            table,
        },
        raw,
    ))
}

/// Run a whole suite and assemble the report.
pub fn run_suite<T: Scalar>(suite: Suite, opts: &SuiteOptions) -> Result<BenchReport> {
    let combos: Vec<(ScenarioDefinition<T>, bool)> = match suite {
        Suite::Table1 => vec![(ScenarioDefinition::s41(), false)],
        Suite::Table2 => vec![(ScenarioDefinition::s41(), true)],
        Suite::Scenarios42 => {
            let mut v = Vec::new();
            for case in [2u8, 3, 4] {
                for calibrated in [false, true] {
                    v.push((ScenarioDefinition::s42(case)?, calibrated));
                }
            }
            v
        }
    };
    let mut sections = Vec::new();
    let mut raw_pips = Vec::new();
    for (def, calibrated) in &combos {
        let (section, raw) = run_combo(def, *calibrated, opts)?;
        sections.push(section);
        raw_pips.extend(raw);
    }
    Ok(BenchReport {
        suite: suite.id().to_string(),
        reps: opts.reps,
        seed: opts.seed,
        sections,
        raw_pips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_suite_options() -> SuiteOptions {
        SuiteOptions {
            reps: 2,
            seed: 77,
            thresholds: vec![0.5],
            rdvs: None,
            schedule: Some((60, 90)),
        }
    }

    #[test]
    fn table1_suite_shape() {
        let report = run_suite::<f64>(Suite::Table1, &quick_suite_options()).unwrap();
        assert_eq!(report.sections.len(), 1);
        let table = &report.sections[0].table;
        assert_eq!(table.inputs.len(), 8);
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0]
            .proportions
            .iter()
            .all(|&p| (0.0..=1.0).contains(&p)));
        // 2 replications × 8 inputs.
        assert_eq!(report.raw_pips.len(), 16);
    }

    #[test]
    fn single_replication_gives_zero_one_proportions() {
        let opts = SuiteOptions {
            reps: 1,
            ..quick_suite_options()
        };
        let report = run_suite::<f64>(Suite::Table1, &opts).unwrap();
        for row in &report.sections[0].table.rows {
            assert!(row.proportions.iter().all(|&p| p == 0.0 || p == 1.0));
        }
    }

    #[test]
    fn replications_are_deterministic_and_distinct() {
        let def = ScenarioDefinition::<f64>::s41();
        let mut base = standard_options_for(&def, false, 5);
        base.sampler.n_mwg = 50;
        base.sampler.n_mh = 60;
        let a = run_pips_replications(&def, false, 2, &base).unwrap();
        let b = run_pips_replications(&def, false, 2, &base).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.dataset.y, y.dataset.y);
            assert_eq!(x.result.inclusion_probs, y.result.inclusion_probs);
        }
        assert_ne!(a[0].dataset.y, a[1].dataset.y, "replications share data");
    }

    #[test]
    fn suite_lookup() {
        assert_eq!(Suite::by_id("table1").unwrap(), Suite::Table1);
        assert!(Suite::by_id("nope").is_err());
    }
}
