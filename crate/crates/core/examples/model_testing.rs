//! Precision and recall of recovering implied independencies of random DAGs.

use catci::bench::{run, Experiment, ExperimentConfig};

fn main() -> catci::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Modeltest);
    cfg.p_edge = vec![0.2, 0.5];
    cfg.replicates = 3;
    cfg.tests = vec!["oracle".parse()?, "qtest:glm".parse()?, "g2".parse()?];
    for r in run(&cfg)?.iter().filter(|r| r.metric == "precision" || r.metric == "recall") {
        println!(
            "p_edge {:.1} {:<14} {:<9} {:.3}",
            r.p_edge.unwrap_or(0.0),
            format!("{} {}", r.test, r.estimator),
            r.metric,
            r.value
        );
    }
    Ok(())
}
