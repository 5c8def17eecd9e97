//! Mean wall time of a single test as the conditioning set grows.

use catci::bench::{run, Experiment, ExperimentConfig};

fn main() -> catci::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Runtime);
    cfg.k = vec![1, 5, 10];
    cfg.replicates = 10;
    for r in run(&cfg)? {
        println!(
            "k={:<3} {:<14} {:>9.3} ms",
            r.k.unwrap_or(0),
            format!("{} {}", r.test, r.estimator),
            r.value * 1e3
        );
    }
    Ok(())
}
