//! `bench`: replicated detection-proportion tables for a suite.

use std::path::Path;

use serde_json::json;

use pipscreen::bench::{run_suite, RdvsSuiteOptions, Suite, SuiteOptions};
use pipscreen::error::{Error, Result};
use pipscreen::io;

use crate::render;
use crate::BenchArgs;

pub fn run(args: &BenchArgs, out_dir: &Path) -> Result<()> {
    let suite = Suite::by_id(&args.suite)?;
    if args.reps == 0 {
        return Err(Error::invalid("--reps must be at least 1"));
    }
    for method in &args.methods {
        if method != "pips" && method != "rdvs" {
            return Err(Error::invalid(format!(
                "unknown method `{method}` (expected pips or rdvs)"
            )));
        }
    }
    let with_rdvs = args.methods.iter().any(|m| m == "rdvs");
    let schedule = match (args.n_mwg, args.n_mh) {
        (None, None) => None,
        (mwg, mh) => Some((mwg.unwrap_or(5_000), mh.unwrap_or(10_000))),
    };
    let opts = SuiteOptions {
        reps: args.reps,
        seed: args.seed,
        thresholds: args.thresholds.clone(),
        rdvs: with_rdvs.then(|| RdvsSuiteOptions {
            reps: args.rdvs_reps,
            t_reps: args.t_reps,
            percentiles: args.percentiles.clone(),
        }),
        schedule,
    };

    let report = run_suite::<f64>(suite, &opts)?;

    std::fs::create_dir_all(out_dir)?;
    io::write_bench_report_json(&out_dir.join("bench-report.json"), &report)?;
    io::write_pip_long_csv(&out_dir.join("pips-raw.csv"), &report.raw_pips)?;
    for section in &report.sections {
        let name = format!(
            "table-{}-{}.csv",
            section.scenario,
            if section.calibrated { "calibrated" } else { "fixed" }
        );
        io::write_detection_csv(&out_dir.join(name), &section.table)?;
    }
    // The resolved settings, so the run is reproducible from this file alone.
    let settings = json!({
        "suite": suite.id(),
        "reps": opts.reps,
        "seed": opts.seed,
        "thresholds": opts.thresholds,
        "rdvs": opts.rdvs.as_ref().map(|r| json!({
            "reps": r.reps,
            "t_reps": r.t_reps,
            "percentiles": r.percentiles,
        })),
        "schedule": opts.schedule,
    });
    std::fs::write(
        out_dir.join("bench-settings.json"),
        serde_json::to_string_pretty(&settings)?,
    )?;

    print!("{}", render::bench_report(&report));
    println!("\noutputs in {}", out_dir.display());
    Ok(())
}
