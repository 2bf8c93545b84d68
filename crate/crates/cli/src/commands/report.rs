//! `report`: render a previously written results file as text.

use std::path::Path;

use pipscreen::error::{Error, Result};
use pipscreen::io;

use crate::render;

pub fn run(input: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|_| Error::FileFormat {
        path: input.display().to_string(),
        reason: "not a JSON results file".into(),
    })?;

    if value.get("inclusion_probabilities").is_some() {
        let result = io::read_screening_json::<f64>(input)?;
        print!("{}", render::screening_table(&result));
    } else if value.get("reference_medians").is_some() {
        let result = io::read_rdvs_json::<f64>(input)?;
        print!("{}", render::rdvs_table(&result));
    } else if value.get("sections").is_some() {
        let report = io::read_bench_report_json(input)?;
        print!("{}", render::bench_report(&report));
    } else {
        return Err(Error::FileFormat {
            path: input.display().to_string(),
            reason: "unrecognized results schema".into(),
        });
    }
    Ok(())
}
