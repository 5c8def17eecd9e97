//! PC on the adult income data, scored against pairwise RMSEA dependence.
//!
//! Pass the path of a CSV with a header row (`Age, Workclass, Education,
//! MaritalStatus, Occupation, Relationship, Race, Sex, HoursPerWeek,
//! NativeCountry, Income`). Without an argument a small synthetic file with
//! the same columns is used.

use std::path::PathBuf;

use catci::bench::{adult_truth, prepare_adult, run, Experiment, ExperimentConfig};
use catci::data::load_csv;

fn main() -> catci::Result<()> {
    let root = env!("CARGO_MANIFEST_DIR");
    let data = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("{root}/tests/fixtures/adult_synthetic.csv")));
    let schema = PathBuf::from(format!("{root}/data/adult_schema.json"));

    let (raw, _) = load_csv(&data, &schema)?;
    let ds = prepare_adult(&raw)?;
    let truth = adult_truth(&ds)?;
    let names: Vec<&str> = ds.names().collect();
    println!("{} rows, {} dependent pairs", ds.n(), truth.dependent.len());
    for &(a, b) in truth.dependent.iter().take(5) {
        println!("  {} - {}", names[a], names[b]);
    }

    let mut cfg = ExperimentConfig::new(Experiment::Adult);
    cfg.data = Some(data);
    cfg.schema = Some(schema);
    cfg.n = vec![500];
    cfg.replicates = 2;
    for r in run(&cfg)?.iter().filter(|r| r.metric == "f1" || r.metric == "skeleton_edges") {
        println!("{:<14} {:<15} {:.3}", format!("{} {}", r.test, r.estimator), r.metric, r.value);
    }
    Ok(())
}
