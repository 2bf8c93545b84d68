//! File formats: dataset CSV + JSON sidecar, chain CSV, screening JSON and
//! CSV summaries, RDVS exports, benchmark tables, and emulator persistence.
//!
//! Every writer here has a matching reader in the same build, and the
//! writers emit shortest-round-trip decimal, so re-reading a file
//! reproduces the in-memory values exactly (at the writer's precision).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bench::{BenchReport, DetectionTable, RawPipRow};
use crate::emulator::{EmulatorDesign, EmulatorRecord, FittedEmulator};
use crate::error::{Error, Result};
use crate::kernel::Design;
use crate::linalg::Matrix;
use crate::mcmc::{Chain, ChainSample, Diagnostics};
use crate::pips::{ModelIndex, PairInclusion, ScreeningResult};
use crate::rdvs::{RdvsResult, RunMedians};
use crate::scalar::Scalar;
use crate::scenarios::{Dataset, DatasetMeta};

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::FileFormat {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

// --- datasets ---------------------------------------------------------------

/// Sidecar path of a dataset CSV: `foo.csv` → `foo.json`.
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

/// Write `x_1..x_p, y` plus the JSON sidecar with scenario metadata.
pub fn write_dataset<T: Scalar>(csv_path: &Path, ds: &Dataset<T>) -> Result<()> {
    let p = ds.design.p();
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header: Vec<String> = (1..=p).map(|l| format!("x_{l}")).collect();
    header.push("y".to_string());
    w.write_record(&header)?;
    for i in 0..ds.design.n() {
        let mut record: Vec<String> =
            ds.design.row(i).iter().map(|v| format!("{}", v.to_f())).collect();
        record.push(format!("{}", ds.y[i].to_f()));
        w.write_record(&record)?;
    }
    w.flush()?;
    let sidecar = serde_json::to_string_pretty(&ds.meta)?;
    std::fs::write(sidecar_path(csv_path), sidecar)?;
    Ok(())
}

/// Raw `x_*`/`y` columns of a CSV, without any scaling or sidecar. Returns
/// the input column names in file order.
pub fn read_xy_csv<T: Scalar>(path: &Path) -> Result<(Vec<String>, Vec<Vec<T>>, Vec<T>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut x_cols = Vec::new();
    let mut y_col = None;
    for (idx, name) in headers.iter().enumerate() {
        if name == "y" {
            y_col = Some(idx);
        } else if name.starts_with("x_") || name.starts_with('x') {
            x_cols.push((idx, name.to_string()));
        }
    }
    let Some(y_idx) = y_col else {
        return Err(format_error(path, "no `y` column"));
    };
    if x_cols.is_empty() {
        return Err(format_error(path, "no input columns (expected x_1, x_2, …)"));
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |idx: usize| -> Result<T> {
            record
                .get(idx)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .map(T::from_f)
                .ok_or_else(|| format_error(path, format!("bad number in column {idx}")))
        };
        rows.push(
            x_cols
                .iter()
                .map(|&(idx, _)| parse(idx))
                .collect::<Result<Vec<T>>>()?,
        );
        y.push(parse(y_idx)?);
    }
    if rows.is_empty() {
        return Err(format_error(path, "no data rows"));
    }
    Ok((x_cols.into_iter().map(|(_, n)| n).collect(), rows, y))
}

/// Read a dataset written by [`write_dataset`]; the sidecar is required.
pub fn read_dataset<T: Scalar>(csv_path: &Path) -> Result<Dataset<T>> {
    let (_, rows, y) = read_xy_csv(csv_path)?;
    let design = Design::from_rows(&rows)?;
    let sidecar = sidecar_path(csv_path);
    let meta: DatasetMeta = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?;
    if meta.n != design.n() || meta.p != design.p() {
        return Err(format_error(
            &sidecar,
            format!(
                "sidecar says {}x{}, file holds {}x{}",
                meta.n,
                meta.p,
                design.n(),
                design.p()
            ),
        ));
    }
    Ok(Dataset { design, y, meta })
}

// --- chains -----------------------------------------------------------------

/// One row per retained draw: `rho_1..rho_p, sigma2, sigma02,
/// theta_1..theta_k, log_post`.
pub fn write_chain_csv<T: Scalar>(path: &Path, chain: &Chain<T>) -> Result<()> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let (p, k) = (chain.p(), chain.k());
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=p).map(|l| format!("rho_{l}")).collect();
    header.push("sigma2".into());
    header.push("sigma02".into());
    header.extend((1..=k).map(|j| format!("theta_{j}")));
    header.push("log_post".into());
    w.write_record(&header)?;
    for s in &chain.samples {
        let mut record: Vec<String> = s.rho.iter().map(|v| format!("{}", v.to_f())).collect();
        record.push(format!("{}", s.sigma2.to_f()));
        record.push(format!("{}", s.sigma02.to_f()));
        record.extend(s.theta.iter().map(|v| format!("{}", v.to_f())));
        record.push(format!("{}", s.log_post.to_f()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a chain CSV back; diagnostics are not stored in the file.
pub fn read_chain_csv<T: Scalar>(path: &Path) -> Result<Chain<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let p = headers.iter().filter(|h| h.starts_with("rho_")).count();
    let k = headers.iter().filter(|h| h.starts_with("theta_")).count();
    let expected = p + 2 + k + 1;
    if headers.len() != expected || p == 0 {
        return Err(format_error(path, "not a chain file"));
    }
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |idx: usize| -> Result<T> {
            record
                .get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .map(T::from_f)
                .ok_or_else(|| format_error(path, format!("bad number in column {idx}")))
        };
        let rho = (0..p).map(get).collect::<Result<Vec<T>>>()?;
        let sigma2 = get(p)?;
        let sigma02 = get(p + 1)?;
        let theta = (p + 2..p + 2 + k).map(get).collect::<Result<Vec<T>>>()?;
        let log_post = get(p + 2 + k)?;
        samples.push(ChainSample {
            rho,
            sigma2,
            sigma02,
            theta,
            log_post,
        });
    }
    Ok(Chain {
        samples,
        diagnostics: Diagnostics::default(),
    })
}

// --- screening results --------------------------------------------------------

fn hex_map<T: Scalar, V: Fn(usize) -> f64>(p: usize, value: V) -> serde_json::Value {
    let mut map = BTreeMap::new();
    for gamma in ModelIndex::all(p) {
        map.insert(gamma.hex(), json!(value(gamma.0 as usize)));
    }
    json!(map)
}

/// JSON document of a screening result, with the Bayes-factor tables keyed
/// by hex bitmask.
pub fn screening_to_json<T: Scalar>(result: &ScreeningResult<T>) -> serde_json::Value {
    json!({
        "schema_version": 1,
        "p": result.p,
        "n_draws": result.n_draws,
        "alpha": result.alpha.iter().map(|a| a.to_f()).collect::<Vec<_>>(),
        "threshold": result.threshold.to_f(),
        "log_bayes_factors": hex_map::<T, _>(result.p, |g| result.log_bayes_factors[g].to_f()),
        "mc_se": hex_map::<T, _>(result.p, |g| result.mc_se[g].to_f()),
        "ess": hex_map::<T, _>(result.p, |g| result.ess[g]),
        "model_posteriors": hex_map::<T, _>(result.p, |g| result.model_posteriors[g].to_f()),
        "inclusion_probabilities":
            result.inclusion_probs.iter().map(|v| v.to_f()).collect::<Vec<_>>(),
        "active": result.active,
        "pairwise": result.pairwise.as_ref().map(|pairs| {
            pairs
                .iter()
                .map(|pi| json!({
                    "first": pi.first,
                    "second": pi.second,
                    "probability": pi.probability.to_f(),
                }))
                .collect::<Vec<_>>()
        }),
    })
}

pub fn write_screening_json<T: Scalar>(path: &Path, result: &ScreeningResult<T>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&screening_to_json(result))?)?;
    Ok(())
}

fn parse_hex_map<T: Scalar>(
    path: &Path,
    value: &serde_json::Value,
    field: &str,
    p: usize,
) -> Result<Vec<T>> {
    let map = value
        .get(field)
        .and_then(|v| v.as_object())
        .ok_or_else(|| format_error(path, format!("missing map `{field}`")))?;
    let mut out = vec![T::zero(); 1 << p];
    if map.len() != out.len() {
        return Err(format_error(
            path,
            format!("`{field}` has {} entries for p = {p}", map.len()),
        ));
    }
    for (key, v) in map {
        let bits = usize::from_str_radix(key.trim_start_matches("0x"), 16)
            .map_err(|_| format_error(path, format!("bad bitmask key `{key}`")))?;
        let num = v
            .as_f64()
            .ok_or_else(|| format_error(path, format!("non-numeric entry in `{field}`")))?;
        out[bits] = T::from_f(num);
    }
    Ok(out)
}

pub fn read_screening_json<T: Scalar>(path: &Path) -> Result<ScreeningResult<T>> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let p = value
        .get("p")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| format_error(path, "missing `p`"))? as usize;
    let n_draws = value.get("n_draws").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
    let alpha: Vec<T> = value
        .get("alpha")
        .and_then(|v| v.as_array())
        .ok_or_else(|| format_error(path, "missing `alpha`"))?
        .iter()
        .filter_map(|v| v.as_f64())
        .map(T::from_f)
        .collect();
    let threshold = T::from_f(
        value
            .get("threshold")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| format_error(path, "missing `threshold`"))?,
    );
    let inclusion_probs: Vec<T> = value
        .get("inclusion_probabilities")
        .and_then(|v| v.as_array())
        .ok_or_else(|| format_error(path, "missing `inclusion_probabilities`"))?
        .iter()
        .filter_map(|v| v.as_f64())
        .map(T::from_f)
        .collect();
    let active: Vec<bool> = value
        .get("active")
        .and_then(|v| v.as_array())
        .ok_or_else(|| format_error(path, "missing `active`"))?
        .iter()
        .filter_map(|v| v.as_bool())
        .collect();
    if alpha.len() != p || inclusion_probs.len() != p || active.len() != p {
        return Err(format_error(path, "field lengths disagree with p"));
    }
    let pairwise = match value.get("pairwise") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::Array(items)) => Some(
            items
                .iter()
                .map(|item| -> Result<PairInclusion<T>> {
                    Ok(PairInclusion {
                        first: item.get("first").and_then(|v| v.as_u64()).ok_or_else(
                            || format_error(path, "pairwise entry missing `first`"),
                        )? as usize,
                        second: item.get("second").and_then(|v| v.as_u64()).ok_or_else(
                            || format_error(path, "pairwise entry missing `second`"),
                        )? as usize,
                        probability: T::from_f(
                            item.get("probability").and_then(|v| v.as_f64()).ok_or_else(
                                || format_error(path, "pairwise entry missing `probability`"),
                            )?,
                        ),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        Some(_) => return Err(format_error(path, "`pairwise` is not a list")),
    };
    let ess_t: Vec<T> = parse_hex_map(path, &value, "ess", p)?;
    Ok(ScreeningResult {
        p,
        n_draws,
        alpha,
        threshold,
        log_bayes_factors: parse_hex_map(path, &value, "log_bayes_factors", p)?,
        mc_se: parse_hex_map(path, &value, "mc_se", p)?,
        ess: ess_t.iter().map(|v| v.to_f()).collect(),
        model_posteriors: parse_hex_map(path, &value, "model_posteriors", p)?,
        inclusion_probs,
        active,
        pairwise,
    })
}

/// One row per input: `name, pip, active_flag`, sorted by file order of the
/// inputs.
pub fn write_screening_csv<T: Scalar>(path: &Path, result: &ScreeningResult<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "pip", "active_flag"])?;
    for l in 0..result.p {
        w.write_record([
            format!("x_{}", l + 1),
            format!("{}", result.inclusion_probs[l].to_f()),
            format!("{}", result.active[l]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format PIP rows (`scenario, calibrated, replication, input, pip`),
/// ready for boxplots.
pub fn write_pip_long_csv(path: &Path, rows: &[RawPipRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "calibrated", "replication", "input", "pip"])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.calibrated.to_string(),
            r.replication.to_string(),
            r.input.clone(),
            format!("{}", r.pip),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// --- RDVS -------------------------------------------------------------------

/// The `T` reference medians, one row per repetition.
pub fn write_rdvs_reference_csv<T: Scalar>(path: &Path, result: &RdvsResult<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["repetition", "reference_median"])?;
    for (t, m) in result.reference_medians.iter().enumerate() {
        w.write_record([t.to_string(), format!("{}", m.to_f())])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run medians of the repetitions that finished before a failure.
pub fn write_run_medians_csv<T: Scalar>(path: &Path, runs: &[RunMedians<T>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let width = runs.first().map_or(0, |r| r.rho_medians.len());
    let mut header = vec!["repetition".to_string()];
    header.extend((1..=width).map(|l| format!("rho_median_{l}")));
    w.write_record(&header)?;
    for r in runs {
        let mut record = vec![r.repetition.to_string()];
        record.extend(r.rho_medians.iter().map(|m| format!("{}", m.to_f())));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RdvsJson {
    schema_version: u32,
    p: usize,
    t_reps: usize,
    reference_medians: Vec<f64>,
    input_medians: Vec<f64>,
    percentiles: Vec<f64>,
    /// `None` encodes the degenerate percentile-0 threshold (minus
    /// infinity), which JSON cannot carry as a number.
    thresholds: Vec<Option<f64>>,
    active: Vec<Vec<bool>>,
}

/// JSON with per-input medians and the flags per percentile.
pub fn write_rdvs_json<T: Scalar>(path: &Path, result: &RdvsResult<T>) -> Result<()> {
    let doc = RdvsJson {
        schema_version: 1,
        p: result.p,
        t_reps: result.t_reps,
        reference_medians: result.reference_medians.iter().map(|v| v.to_f()).collect(),
        input_medians: result.input_medians.iter().map(|v| v.to_f()).collect(),
        percentiles: result.percentiles.clone(),
        thresholds: result
            .thresholds
            .iter()
            .map(|v| v.is_finite().then(|| v.to_f()))
            .collect(),
        active: result.active.clone(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn read_rdvs_json<T: Scalar>(path: &Path) -> Result<RdvsResult<T>> {
    let doc: RdvsJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if doc.input_medians.len() != doc.p || doc.active.len() != doc.percentiles.len() {
        return Err(format_error(path, "inconsistent RDVS document"));
    }
    Ok(RdvsResult {
        p: doc.p,
        t_reps: doc.t_reps,
        reference_medians: doc.reference_medians.iter().map(|&v| T::from_f(v)).collect(),
        input_medians: doc.input_medians.iter().map(|&v| T::from_f(v)).collect(),
        percentiles: doc.percentiles,
        thresholds: doc
            .thresholds
            .iter()
            .map(|v| v.map_or_else(T::neg_infinity, T::from_f))
            .collect(),
        active: doc.active,
        runs: Vec::new(),
    })
}

// --- benchmark reports --------------------------------------------------------

/// Detection table in the papers' layout: one row per method setting, one
/// column per input.
pub fn write_detection_csv(path: &Path, table: &DetectionTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["setting".to_string()];
    header.extend(table.inputs.iter().cloned());
    w.write_record(&header)?;
    for row in &table.rows {
        let mut record = vec![row.label.clone()];
        record.extend(row.proportions.iter().map(|p| format!("{p:.2}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bench_report_json(path: &Path, report: &BenchReport) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn read_bench_report_json(path: &Path) -> Result<BenchReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

// --- emulator ------------------------------------------------------------------

/// Design-run CSV: `x_1..x_p, theta_1..theta_k, f`.
pub fn read_emulator_design_csv<T: Scalar>(path: &Path) -> Result<EmulatorDesign<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut coord_cols = Vec::new();
    let mut f_col = None;
    for (idx, name) in headers.iter().enumerate() {
        if name == "f" {
            f_col = Some(idx);
        } else if name.starts_with("x_") || name.starts_with("theta_") {
            coord_cols.push(idx);
        }
    }
    let Some(f_idx) = f_col else {
        return Err(format_error(path, "no `f` column"));
    };
    if coord_cols.is_empty() {
        return Err(format_error(path, "no coordinate columns"));
    }
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut outputs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |idx: usize| -> Result<T> {
            record
                .get(idx)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .map(T::from_f)
                .ok_or_else(|| format_error(path, format!("bad number in column {idx}")))
        };
        rows.push(coord_cols.iter().map(|&i| parse(i)).collect::<Result<Vec<T>>>()?);
        outputs.push(parse(f_idx)?);
    }
    EmulatorDesign::new(Matrix::from_rows(&rows)?, outputs)
}

pub fn write_emulator_json<T: Scalar>(path: &Path, em: &FittedEmulator<T>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&em.to_record())?)?;
    Ok(())
}

pub fn read_emulator_json<T: Scalar>(path: &Path) -> Result<FittedEmulator<T>> {
    let record: EmulatorRecord = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    FittedEmulator::from_record(&record)
}
