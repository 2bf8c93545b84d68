//! `simulate`: write benchmark dataset replications to disk.

use std::path::Path;

use pipscreen::error::{Error, Result};
use pipscreen::io::write_dataset;
use pipscreen::rng::{derive_seed, TAG_REPLICATION};
use pipscreen::scenarios::{gen_dataset, ScenarioDefinition};

pub fn run(scenario: &str, reps: usize, seed: u64, out_dir: &Path) -> Result<()> {
    if reps == 0 {
        return Err(Error::invalid("--reps must be at least 1"));
    }
    let def = ScenarioDefinition::<f64>::by_id(scenario)?;
    std::fs::create_dir_all(out_dir)?;
    for r in 0..reps {
        let rep_seed = derive_seed(seed, TAG_REPLICATION + r as u64);
        let dataset = gen_dataset(&def, rep_seed);
        let path = out_dir.join(format!("{scenario}-rep{r}.csv"));
        write_dataset(&path, &dataset)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
