//! Data ingestion: every input column is min/max scaled to `[0, 1]` and the
//! observations are optionally centered and scaled, with all the applied
//! transforms recorded so ρ estimates stay interpretable and the run stays
//! reproducible. Raw-scale data never reaches the kernel.

use std::path::Path;

use serde::{Deserialize, Serialize};

use pipscreen::error::{Error, Result};
use pipscreen::io::{read_xy_csv, sidecar_path};
use pipscreen::kernel::Design;
use pipscreen::likelihood::FieldObservations;
use pipscreen::scenarios::DatasetMeta;
use pipscreen::stats::{mean, sd};

/// Per-column scaling applied at ingestion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Everything that was done to the file on the way in.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IngestMeta {
    pub source: String,
    pub n: usize,
    pub p: usize,
    pub input_scaling: Vec<ColumnScaling>,
    pub normalized_y: bool,
    pub y_offset: f64,
    pub y_scale: f64,
    /// Sidecar metadata, when the file came with one.
    pub sidecar: Option<DatasetMeta>,
}

/// An ingested dataset on the analysis scale.
pub struct IngestedData {
    pub observations: FieldObservations<f64>,
    pub meta: IngestMeta,
}

/// Load a CSV with `x_*` columns and `y`, scale inputs to `[0, 1]`, and
/// optionally normalize the observations.
pub fn ingest(path: &Path, normalize_y: bool) -> Result<IngestedData> {
    let (names, rows, mut y) = read_xy_csv::<f64>(path)?;
    let n = rows.len();
    let p = names.len();

    let mut input_scaling = Vec::with_capacity(p);
    let mut scaled = vec![vec![0.0f64; p]; n];
    for (j, name) in names.iter().enumerate() {
        let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("non-finite values in column {name}")));
        }
        if hi <= lo {
            return Err(Error::invalid(format!(
                "input column {name} is constant and cannot be scaled to [0, 1]"
            )));
        }
        for (i, value) in column.iter().enumerate() {
            scaled[i][j] = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
        }
        input_scaling.push(ColumnScaling {
            name: name.clone(),
            min: lo,
            max: hi,
        });
    }

    let (y_offset, y_scale) = if normalize_y {
        let m = mean(&y);
        let s = sd(&y);
        if !(s > 0.0) {
            return Err(Error::invalid("observations are constant; cannot normalize"));
        }
        for v in &mut y {
            *v = (*v - m) / s;
        }
        (m, s)
    } else {
        (0.0, 1.0)
    };

    let sidecar = {
        let sc = sidecar_path(path);
        if sc.exists() {
            Some(serde_json::from_str(&std::fs::read_to_string(sc)?)?)
        } else {
            None
        }
    };

    let design = Design::from_rows(&scaled)?;
    let observations = FieldObservations::new(design, y)?;
    Ok(IngestedData {
        observations,
        meta: IngestMeta {
            source: path.display().to_string(),
            n,
            p,
            input_scaling,
            normalized_y: normalize_y,
            y_offset,
            y_scale,
            sidecar,
        },
    })
}

pub fn write_ingest_meta(path: &Path, meta: &IngestMeta) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn scales_raw_columns_and_normalizes_y() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "x_1,x_2,y").unwrap();
        writeln!(f, "10,0.5,100").unwrap();
        writeln!(f, "20,0.7,300").unwrap();
        writeln!(f, "30,0.9,200").unwrap();
        drop(f);

        let data = ingest(&path, true).unwrap();
        let d = data.observations.design();
        assert_eq!(d.row(0)[0], 0.0);
        assert_eq!(d.row(2)[0], 1.0);
        assert!((d.row(1)[0] - 0.5).abs() < 1e-12);
        assert!((mean(data.observations.y())).abs() < 1e-12);
        assert_eq!(data.meta.input_scaling[0].min, 10.0);
        assert_eq!(data.meta.input_scaling[0].max, 30.0);
        assert_eq!(data.meta.y_scale, sd(&[100.0, 300.0, 200.0]));
    }

    #[test]
    fn constant_column_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        std::fs::write(&path, "x_1,y\n2,1\n2,2\n2,3\n").unwrap();
        assert!(ingest(&path, false).is_err());
    }
}
