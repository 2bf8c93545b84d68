//! Plain-text rendering of results for the terminal.

use pipscreen::bench::{BenchReport, DetectionTable};
use pipscreen::pips::ScreeningResult;
use pipscreen::rdvs::RdvsResult;
use pipscreen::Scalar;

/// Inclusion probabilities sorted by probability, highest first.
pub fn screening_table<T: Scalar>(result: &ScreeningResult<T>) -> String {
    let mut order: Vec<usize> = (0..result.p).collect();
    order.sort_by(|&a, &b| {
        result.inclusion_probs[b]
            .partial_cmp(&result.inclusion_probs[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = String::from("input    pip      active\n");
    for l in order {
        out.push_str(&format!(
            "{:<8} {:<8.4} {}\n",
            format!("x_{}", l + 1),
            result.inclusion_probs[l].to_f(),
            if result.active[l] { "yes" } else { "no" }
        ));
    }
    out.push_str(&format!(
        "(threshold {}, alpha {}, {} draws)\n",
        result.threshold.to_f(),
        result.alpha[0].to_f(),
        result.n_draws
    ));
    out
}

pub fn rdvs_table<T: Scalar>(result: &RdvsResult<T>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "reference medians over {} repetitions: median of medians {:.4}\n",
        result.t_reps,
        crate_median(&result.reference_medians)
    ));
    out.push_str("input    median   ");
    for q in &result.percentiles {
        out.push_str(&format!("q{:<7}", q));
    }
    out.push('\n');
    for l in 0..result.p {
        out.push_str(&format!(
            "{:<8} {:<8.4} ",
            format!("x_{}", l + 1),
            result.input_medians[l].to_f()
        ));
        for flags in &result.active {
            out.push_str(&format!("{:<8}", if flags[l] { "active" } else { "-" }));
        }
        out.push('\n');
    }
    out
}

fn crate_median<T: Scalar>(xs: &[T]) -> f64 {
    pipscreen::stats::median(xs).to_f()
}

pub fn detection_table(table: &DetectionTable) -> String {
    let mut out = String::from("setting      ");
    for name in &table.inputs {
        out.push_str(&format!("{name:>6}"));
    }
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!("{:<13}", row.label));
        for p in &row.proportions {
            out.push_str(&format!("{p:>6.2}"));
        }
        out.push('\n');
    }
    out
}

pub fn bench_report(report: &BenchReport) -> String {
    let mut out = format!(
        "suite {} ({} replications, seed {})\n",
        report.suite, report.reps, report.seed
    );
    for section in &report.sections {
        out.push_str(&format!(
            "\n[{} | theta {}]\n",
            section.scenario,
            if section.calibrated { "calibrated" } else { "fixed" }
        ));
        out.push_str(&detection_table(&section.table));
    }
    out
}
