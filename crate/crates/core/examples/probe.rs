//! Scratch diagnostics (not shipped).
use pipscreen::bench::{run_rdvs_replications, standard_options_for};
use pipscreen::scenarios::ScenarioDefinition;

fn main() {
    let def = ScenarioDefinition::<f64>::s41();
    for seed in [1u64, 2, 3] {
        let base = standard_options_for(&def, false, seed);
        let (table, results) = run_rdvs_replications(&def, false, 10, 20, &[0.10], &base).unwrap();
        println!("seed {seed}: q10 rates {:?}", table.rows[0].proportions);
        let refs: Vec<f64> = results.iter().flat_map(|r| r.reference_medians.iter().cloned()).collect();
        let lo = refs.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("  reference medians: min {:.3} q10 {:.3} med {:.3}", lo,
            pipscreen::stats::quantile(&refs, 0.1), pipscreen::stats::median(&refs));
    }
}
