//! Skeleton F1 of PC-stable on data simulated from random DAGs.

use catci::bench::{run, Experiment, ExperimentConfig};

fn main() -> catci::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Structure);
    cfg.p_edge = vec![0.1, 0.3, 0.5];
    cfg.replicates = 3;
    cfg.tests = vec!["oracle".parse()?, "qtest:glm".parse()?, "g2".parse()?];
    for r in run(&cfg)?.iter().filter(|r| r.metric == "f1") {
        println!(
            "p_edge {:.1} {:<14} F1 {:.3} ± {:.3}",
            r.p_edge.unwrap_or(0.0),
            format!("{} {}", r.test, r.estimator),
            r.value,
            r.se.unwrap_or(0.0)
        );
    }
    Ok(())
}
